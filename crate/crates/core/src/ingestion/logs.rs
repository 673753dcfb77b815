use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::model::{EventLog, Trace};

use super::{read_records, IngestError, Summary};

/// Converts one external record into an event log.
pub trait LogAdapter {
    fn name(&self) -> &'static str;
    fn accepts(&self, record: &Value) -> bool;
    fn convert(&self, record: &Value, index: usize) -> Result<EventLog, String>;
    /// Number of traces the record claims to hold, for skip accounting.
    fn declared_traces(&self, record: &Value) -> usize;
}

fn record_name(record: &Value, keys: &[&str], index: usize) -> String {
    keys.iter()
        .find_map(|k| match record.get(*k) {
            Some(Value::String(s)) => Some(s.clone()),
            Some(Value::Number(n)) => Some(n.to_string()),
            _ => None,
        })
        .unwrap_or_else(|| format!("#{index}"))
}

/// `{process_id, query_texts, traces: [{id, actions}]}`.
pub struct CanonicalLogAdapter;

impl LogAdapter for CanonicalLogAdapter {
    fn name(&self) -> &'static str {
        "canonical"
    }

    fn accepts(&self, record: &Value) -> bool {
        record.get("process_id").is_some() && record.get("traces").is_some()
    }

    fn convert(&self, record: &Value, _index: usize) -> Result<EventLog, String> {
        let traces = record
            .get("traces")
            .and_then(Value::as_array)
            .ok_or("missing traces array")?;
        for (i, t) in traces.iter().enumerate() {
            if !t.get("actions").is_some_and(Value::is_array) {
                return Err(format!("trace {i} is missing its actions array"));
            }
        }
        serde_json::from_value(record.clone()).map_err(|e| e.to_string())
    }

    fn declared_traces(&self, record: &Value) -> usize {
        record
            .get("traces")
            .and_then(Value::as_array)
            .map_or(0, Vec::len)
    }
}

/// Multi-plan benchmark records: an id, the original request, paraphrases
/// (a list, or lists keyed by language) and several plans, each either a list
/// of tool names or a tool graph whose `tool_nodes` are in execution order.
pub struct ProcessTBenchAdapter;

const ID_KEYS: [&str; 4] = ["id", "problem_id", "process_id", "task_id"];
const QUERY_KEYS: [&str; 4] = ["user_request", "query", "instruction", "request"];
const PARAPHRASE_KEYS: [&str; 3] = ["paraphrases", "paraphrased_requests", "rephrased"];
const PLAN_KEYS: [&str; 4] = ["plans", "solutions", "chains", "traces"];
const LANGUAGE_ORDER: [&str; 6] = ["en", "english", "da", "danish", "fr", "french"];

impl ProcessTBenchAdapter {
    fn field<'a>(record: &'a Value, keys: &[&str]) -> Option<&'a Value> {
        keys.iter().find_map(|k| record.get(*k))
    }

    fn plan_actions(plan: &Value) -> Result<Vec<String>, String> {
        let items = match plan {
            Value::Array(items) => items,
            Value::Object(_) => Self::field(plan, &["tool_nodes", "actions", "steps", "nodes"])
                .and_then(Value::as_array)
                .ok_or("plan has no tool_nodes/actions list")?,
            _ => return Err("plan is neither a list nor an object".into()),
        };
        items
            .iter()
            .map(|n| match n {
                Value::String(s) => Ok(s.clone()),
                Value::Object(_) => Self::field(n, &["task", "tool", "name", "action"])
                    .and_then(Value::as_str)
                    .map(str::to_owned)
                    .ok_or_else(|| "tool node has no task name".to_string()),
                _ => Err("tool node is neither a string nor an object".into()),
            })
            .collect()
    }
}

impl LogAdapter for ProcessTBenchAdapter {
    fn name(&self) -> &'static str {
        "processtbench"
    }

    fn accepts(&self, record: &Value) -> bool {
        Self::field(record, &PLAN_KEYS).is_some_and(Value::is_array)
    }

    fn convert(&self, record: &Value, index: usize) -> Result<EventLog, String> {
        let id = record_name(record, &ID_KEYS, index);
        let mut texts = Vec::new();
        if let Some(q) = Self::field(record, &QUERY_KEYS).and_then(Value::as_str) {
            texts.push(q.to_owned());
        }
        match Self::field(record, &PARAPHRASE_KEYS) {
            Some(Value::Array(items)) => {
                texts.extend(items.iter().filter_map(Value::as_str).map(str::to_owned))
            }
            Some(Value::Object(by_lang)) => {
                let mut langs: Vec<&String> = by_lang.keys().collect();
                langs.sort_by_key(|l| {
                    let pos = LANGUAGE_ORDER
                        .iter()
                        .position(|o| o.eq_ignore_ascii_case(l));
                    (pos.unwrap_or(usize::MAX), l.to_string())
                });
                for l in langs {
                    match &by_lang[l.as_str()] {
                        Value::String(s) => texts.push(s.clone()),
                        Value::Array(items) => {
                            texts.extend(items.iter().filter_map(Value::as_str).map(str::to_owned))
                        }
                        _ => return Err(format!("paraphrases for '{l}' are not text")),
                    }
                }
            }
            Some(_) => return Err("paraphrases are neither a list nor an object".into()),
            None => {}
        }
        let plans = Self::field(record, &PLAN_KEYS)
            .and_then(Value::as_array)
            .ok_or("missing plans array")?;
        let traces = plans
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let names = Self::plan_actions(p).map_err(|e| format!("plan {i}: {e}"))?;
                Trace::from_names(format!("{id}:{i}"), names).map_err(|e| format!("plan {i}: {e}"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(EventLog::new(id, texts, traces))
    }

    fn declared_traces(&self, record: &Value) -> usize {
        Self::field(record, &PLAN_KEYS)
            .and_then(Value::as_array)
            .map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogFormat {
    /// Canonical when a record has `process_id` and `traces`, else the benchmark adapter.
    #[default]
    Auto,
    Canonical,
    ProcessTBench,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    pub format: LogFormat,
    /// Skip malformed records (and report them) instead of failing.
    pub lenient: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRecord {
    pub record: String,
    pub reason: String,
    pub traces: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub logs: Vec<EventLog>,
    pub skipped: Vec<SkippedRecord>,
    pub traces_in: usize,
    pub traces_stored: usize,
    pub traces_skipped: usize,
}

pub fn load_event_logs(
    path: impl AsRef<Path>,
    options: &LoadOptions,
) -> Result<LoadReport, IngestError> {
    let path = path.as_ref();
    let records = read_records(path)?;
    let canonical = CanonicalLogAdapter;
    let bench = ProcessTBenchAdapter;
    let mut report = LoadReport {
        logs: Vec::new(),
        skipped: Vec::new(),
        traces_in: 0,
        traces_stored: 0,
        traces_skipped: 0,
    };
    for (i, record) in records.iter().enumerate() {
        let adapter: &dyn LogAdapter = match options.format {
            LogFormat::Canonical => &canonical,
            LogFormat::ProcessTBench => &bench,
            LogFormat::Auto if canonical.accepts(record) => &canonical,
            LogFormat::Auto => &bench,
        };
        let declared = adapter.declared_traces(record);
        let name = record_name(record, &["process_id", "id", "problem_id", "task_id"], i);
        let result = if adapter.accepts(record) {
            adapter.convert(record, i)
        } else {
            Err(format!("not a {} record", adapter.name()))
        };
        match result {
            Ok(log) => {
                report.traces_in += log.traces.len();
                report.traces_stored += log.traces.len();
                report.logs.push(log);
            }
            Err(message) if options.lenient => {
                report.traces_in += declared;
                report.traces_skipped += declared;
                report.skipped.push(SkippedRecord {
                    record: name,
                    reason: message,
                    traces: declared,
                });
            }
            Err(message) => {
                return Err(IngestError::Record {
                    record: name,
                    message,
                })
            }
        }
    }
    Ok(report)
}

/// Per-process case and variant counts over a set of logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogStats {
    pub processes: usize,
    pub cases: Summary,
    pub variants: Summary,
}

impl LogStats {
    pub fn of(logs: &[EventLog]) -> Option<Self> {
        let cases: Vec<f64> = logs.iter().map(|l| l.traces.len() as f64).collect();
        let variants: Vec<f64> = logs.iter().map(|l| l.num_variants() as f64).collect();
        Some(Self {
            processes: logs.len(),
            cases: Summary::of(&cases)?,
            variants: Summary::of(&variants)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn write(v: Value) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("logs.json");
        std::fs::write(&p, v.to_string()).unwrap();
        (dir, p)
    }

    fn canonical(id: &str, n: usize) -> Value {
        json!({
            "process_id": id,
            "query_texts": [format!("solve {id}")],
            "traces": (0..n).map(|i| json!({"id": format!("{id}-{i}"), "actions": ["A", "B"]})).collect::<Vec<_>>(),
        })
    }

    #[test]
    fn two_problems_three_traces() {
        let (_d, p) = write(json!([canonical("p1", 3), canonical("p2", 3)]));
        let r = load_event_logs(&p, &LoadOptions::default()).unwrap();
        assert_eq!(r.logs.len(), 2);
        assert!(r.logs.iter().all(|l| l.traces.len() == 3));
        assert_eq!((r.traces_in, r.traces_stored, r.traces_skipped), (6, 6, 0));
    }

    #[test]
    fn missing_actions_names_record() {
        let bad = json!({"process_id": "broken", "traces": [{"id": "t"}]});
        let (_d, p) = write(json!([canonical("ok", 2), bad]));
        match load_event_logs(&p, &LoadOptions::default()) {
            Err(IngestError::Record { record, message }) => {
                assert_eq!(record, "broken");
                assert!(message.contains("actions"));
            }
            other => panic!("{other:?}"),
        }
        let r = load_event_logs(
            &p,
            &LoadOptions {
                lenient: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.logs.len(), 1);
        assert_eq!(r.skipped.len(), 1);
        assert_eq!(r.traces_in, r.traces_stored + r.traces_skipped);
        assert_eq!(r.traces_skipped, 1);
    }

    #[test]
    fn benchmark_shape() {
        // Cases per process: 5, 6, 5, 4, 6 -> mean 26 / 5 = 5.2.
        let counts = [5, 6, 5, 4, 6];
        let records: Vec<Value> = counts
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                json!({
                    "id": i,
                    "user_request": format!("request {i}"),
                    "paraphrases": {"fr": ["demande"], "en": ["ask", "query"], "da": ["anmodning"]},
                    "plans": (0..n).map(|j| if j % 2 == 0 {
                        json!(["Search", "Summarize"])
                    } else {
                        json!({"tool_nodes": [{"task": "Search"}, {"task": "Translate"}], "tool_links": []})
                    }).collect::<Vec<_>>(),
                })
            })
            .collect();
        let (_d, p) = write(Value::Array(records));
        let r = load_event_logs(&p, &LoadOptions::default()).unwrap();
        assert_eq!(r.logs.len(), 5);
        assert_eq!(
            r.logs[0].query_texts,
            ["request 0", "ask", "query", "anmodning", "demande"]
        );
        assert_eq!(r.logs[1].traces[1].actions[1].as_str(), "Translate");
        let st = LogStats::of(&r.logs).unwrap();
        assert!((st.cases.mean - 5.2).abs() < 1e-12);
        assert_eq!(st.variants.max, 2.0);
        assert_eq!(st.cases.median, 5.0);
    }
}
