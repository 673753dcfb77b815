use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::model::Action;
use crate::petri::{DagEdge, DagModel, DagNode};

use super::{read_records, IngestError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DagFormat {
    /// Tool-graph records when `tool_nodes` is present, canonical otherwise.
    #[default]
    Auto,
    Canonical,
    TaskBench,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DagLoadOptions {
    pub format: DagFormat,
    pub transitive_reduction: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceDag {
    pub process_id: String,
    pub dag: DagModel,
}

fn record_id(record: &Value, index: usize) -> String {
    ["process_id", "id", "task_id"]
        .iter()
        .find_map(|k| match record.get(*k) {
            Some(Value::String(s)) => Some(s.clone()),
            Some(Value::Number(n)) => Some(n.to_string()),
            _ => None,
        })
        .unwrap_or_else(|| format!("#{index}"))
}

fn canonical(record: &Value) -> Result<DagModel, String> {
    let record = record.get("dag").unwrap_or(record);
    serde_json::from_value(record.clone()).map_err(|e| e.to_string())
}

/// `tool_nodes: [{task, ...}]` with `tool_links: [{source, target}]` naming tasks.
/// Repeated task names get ids `name#2`, `name#3`, ...; links resolve to the
/// first node with the name.
fn taskbench(record: &Value) -> Result<DagModel, String> {
    let nodes = record
        .get("tool_nodes")
        .and_then(Value::as_array)
        .ok_or("missing tool_nodes array")?;
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut out_nodes = Vec::new();
    for (i, n) in nodes.iter().enumerate() {
        let task = match n {
            Value::String(s) => s.as_str(),
            _ => n
                .get("task")
                .or_else(|| n.get("name"))
                .and_then(Value::as_str)
                .ok_or(format!("tool node {i} has no task"))?,
        };
        let count = seen.entry(task.to_owned()).or_insert(0);
        *count += 1;
        let id = if *count == 1 {
            task.to_owned()
        } else {
            format!("{task}#{count}")
        };
        out_nodes.push(DagNode {
            id,
            action: Action::new(task).map_err(|e| format!("tool node {i}: {e}"))?,
        });
    }
    let mut edges = Vec::new();
    for (i, l) in record
        .get("tool_links")
        .and_then(Value::as_array)
        .map(Vec::as_slice)
        .unwrap_or_default()
        .iter()
        .enumerate()
    {
        let end = |k: &str| {
            l.get(k)
                .and_then(Value::as_str)
                .map(str::to_owned)
                .ok_or(format!("tool link {i} has no {k}"))
        };
        edges.push(DagEdge {
            from: end("source")?,
            to: end("target")?,
        });
    }
    Ok(DagModel::new(out_nodes, edges))
}

/// Loads and validates reference DAGs. Any cycle is fatal and reported with
/// the edges that lie on it.
pub fn load_reference_dags(
    path: impl AsRef<Path>,
    options: &DagLoadOptions,
) -> Result<Vec<ReferenceDag>, IngestError> {
    let path = path.as_ref();
    let records = read_records(path)?;
    records
        .iter()
        .enumerate()
        .map(|(i, record)| {
            let process_id = record_id(record, i);
            let tool_graph = match options.format {
                DagFormat::Auto => record.get("tool_nodes").is_some(),
                DagFormat::TaskBench => true,
                DagFormat::Canonical => false,
            };
            let dag = if tool_graph {
                taskbench(record)
            } else {
                canonical(record)
            }
            .map_err(|message| IngestError::Record {
                record: process_id.clone(),
                message,
            })?;
            let dag_err = |source| IngestError::Dag {
                process_id: process_id.clone(),
                source,
            };
            dag.validate().map_err(dag_err)?;
            let dag = if options.transitive_reduction {
                dag.transitive_reduction().map_err(dag_err)?
            } else {
                dag
            };
            Ok(ReferenceDag { process_id, dag })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::petri::{dag_to_petri, visible_language, PetriError};
    use serde_json::json;

    fn write(v: &Value) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("dags.json");
        std::fs::write(&p, v.to_string()).unwrap();
        (dir, p)
    }

    fn node(id: &str) -> Value {
        json!({"id": id, "action": id})
    }

    fn edge(a: &str, b: &str) -> Value {
        json!({"from": a, "to": b})
    }

    #[test]
    fn diamond() {
        let v = json!({"process_id": "d", "nodes": (["A","B","C","D"].map(node)),
            "edges": [edge("A","B"), edge("A","C"), edge("B","D"), edge("C","D")]});
        let (_t, p) = write(&v);
        let dags = load_reference_dags(&p, &DagLoadOptions::default()).unwrap();
        assert_eq!(dags.len(), 1);
        assert_eq!(dags[0].process_id, "d");
        assert_eq!(dags[0].dag.nodes.len(), 4);
    }

    #[test]
    fn cycle_lists_edges() {
        let v = json!([{"process_id": "c", "nodes": (["A","B","C"].map(node)),
            "edges": [edge("A","B"), edge("B","C"), edge("C","B")]}]);
        let (_t, p) = write(&v);
        match load_reference_dags(&p, &DagLoadOptions::default()) {
            Err(IngestError::Dag {
                process_id,
                source: PetriError::Cycle(edges),
            }) => {
                assert_eq!(process_id, "c");
                let pairs: Vec<_> = edges
                    .iter()
                    .map(|e| (e.from.as_str(), e.to.as_str()))
                    .collect();
                assert_eq!(pairs, [("B", "C"), ("C", "B")]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn chain_of_six_is_one_sequence() {
        let ids = ["A", "B", "C", "D", "E", "F"];
        let edges: Vec<Value> = ids.windows(2).map(|w| edge(w[0], w[1])).collect();
        let v = json!({"process_id": "chain", "nodes": ids.map(node), "edges": edges});
        let (_t, p) = write(&v);
        let dags = load_reference_dags(&p, &DagLoadOptions::default()).unwrap();
        let lang = visible_language(&dag_to_petri(&dags[0].dag).unwrap(), 6).unwrap();
        assert_eq!(lang.len(), 1);
        assert_eq!(lang.iter().next().unwrap().len(), 6);
    }

    #[test]
    fn tool_graph_records_and_reduction() {
        let lines = [
            json!({"id": "7", "tool_nodes": [{"task": "OCR"}, {"task": "Translate"}, {"task": "Speak"}],
                   "tool_links": [{"source": "OCR", "target": "Translate"}, {"source": "Translate", "target": "Speak"},
                                  {"source": "OCR", "target": "Speak"}]}),
            json!({"id": "8", "tool_nodes": ["OCR", "OCR"], "tool_links": []}),
        ];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("graphs.jsonl");
        std::fs::write(
            &p,
            lines
                .iter()
                .map(|l| l.to_string() + "\n")
                .collect::<String>(),
        )
        .unwrap();
        let dags = load_reference_dags(&p, &DagLoadOptions::default()).unwrap();
        assert_eq!(dags[0].dag.edges.len(), 3);
        assert_eq!(dags[1].dag.nodes[1].id, "OCR#2");
        let reduced = load_reference_dags(
            &p,
            &DagLoadOptions {
                transitive_reduction: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(reduced[0].dag.edges.len(), 2);
    }
}
