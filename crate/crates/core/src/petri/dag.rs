use std::collections::{BTreeSet, HashMap};

use petgraph::algo::{kosaraju_scc, toposort};
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};

use crate::model::{Action, Marking, NetArc, PetriNet, Transition};

use super::PetriError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DagNode {
    pub id: String,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DagEdge {
    pub from: String,
    pub to: String,
}

/// A reference process model given as a tool dependency graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DagModel {
    pub nodes: Vec<DagNode>,
    #[serde(default)]
    pub edges: Vec<DagEdge>,
}

impl DagModel {
    pub fn new(nodes: Vec<DagNode>, edges: Vec<DagEdge>) -> Self {
        Self { nodes, edges }
    }

    fn graph(&self) -> Result<(DiGraph<usize, ()>, Vec<NodeIndex>), PetriError> {
        if self.nodes.is_empty() {
            return Err(PetriError::EmptyDag);
        }
        let mut index: HashMap<&str, usize> = HashMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if index.insert(n.id.as_str(), i).is_some() {
                return Err(PetriError::DuplicateDagNode(n.id.clone()));
            }
        }
        let mut g = DiGraph::new();
        let handles: Vec<NodeIndex> = (0..self.nodes.len()).map(|i| g.add_node(i)).collect();
        let edges: BTreeSet<&DagEdge> = self.edges.iter().collect();
        for e in edges {
            let (Some(&a), Some(&b)) = (index.get(e.from.as_str()), index.get(e.to.as_str()))
            else {
                return Err(PetriError::UnknownDagNode {
                    from: e.from.clone(),
                    to: e.to.clone(),
                });
            };
            g.add_edge(handles[a], handles[b], ());
        }
        Ok((g, handles))
    }

    /// Checks ids, edge endpoints and acyclicity. On a cycle, the error lists
    /// every edge that lies on one.
    pub fn validate(&self) -> Result<(), PetriError> {
        let (g, _) = self.graph()?;
        if toposort(&g, None).is_ok() {
            return Ok(());
        }
        let mut cyclic = Vec::new();
        for scc in kosaraju_scc(&g) {
            let members: BTreeSet<NodeIndex> = scc.iter().copied().collect();
            for e in g.edge_indices() {
                let (a, b) = g.edge_endpoints(e).expect("edge exists");
                if members.contains(&a) && members.contains(&b) && (members.len() > 1 || a == b) {
                    cyclic.push(DagEdge {
                        from: self.nodes[g[a]].id.clone(),
                        to: self.nodes[g[b]].id.clone(),
                    });
                }
            }
        }
        cyclic.sort();
        Err(PetriError::Cycle(cyclic))
    }

    /// Node indices in a topological order.
    pub fn topological_order(&self) -> Result<Vec<usize>, PetriError> {
        self.validate()?;
        let (g, _) = self.graph()?;
        let order = toposort(&g, None).map_err(|_| PetriError::Cycle(Vec::new()))?;
        Ok(order.into_iter().map(|n| g[n]).collect())
    }

    /// Number of nodes on the longest dependency chain.
    pub fn critical_path_len(&self) -> Result<usize, PetriError> {
        let order = self.topological_order()?;
        let index: HashMap<&str, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.as_str(), i))
            .collect();
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            preds[index[e.to.as_str()]].push(index[e.from.as_str()]);
        }
        let mut depth = vec![0usize; self.nodes.len()];
        for n in order {
            depth[n] = 1 + preds[n].iter().map(|&p| depth[p]).max().unwrap_or(0);
        }
        Ok(depth.into_iter().max().unwrap_or(0))
    }

    /// Removes edges implied by longer paths.
    pub fn transitive_reduction(&self) -> Result<DagModel, PetriError> {
        let order = self.topological_order()?;
        let n = self.nodes.len();
        let index: HashMap<&str, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.as_str(), i))
            .collect();
        let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for e in &self.edges {
            succ[index[e.from.as_str()]].insert(index[e.to.as_str()]);
        }
        // reach[v] = nodes reachable from v by a path of length >= 1
        let mut reach: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for &v in order.iter().rev() {
            let mut r = BTreeSet::new();
            for &w in &succ[v] {
                r.insert(w);
                r.extend(reach[w].iter().copied());
            }
            reach[v] = r;
        }
        let mut edges = Vec::new();
        for v in 0..n {
            for &w in &succ[v] {
                let implied = succ[v].iter().any(|&u| u != w && reach[u].contains(&w));
                if !implied {
                    edges.push(DagEdge {
                        from: self.nodes[v].id.clone(),
                        to: self.nodes[w].id.clone(),
                    });
                }
            }
        }
        Ok(DagModel::new(self.nodes.clone(), edges))
    }
}

/// Converts a DAG into a workflow net whose visible language is the set of
/// topological orders of the DAG.
///
/// Each node becomes transition `t[<id>]` and each edge a place between the
/// two transitions. Several source (sink) nodes are fed by (feed into) a
/// silent split (join); a unique source or sink connects to the net's
/// source or sink place directly.
pub fn dag_to_petri(dag: &DagModel) -> Result<PetriNet, PetriError> {
    dag.validate()?;
    let edges: BTreeSet<&DagEdge> = dag.edges.iter().collect();
    let has_in: BTreeSet<&str> = edges.iter().map(|e| e.to.as_str()).collect();
    let has_out: BTreeSet<&str> = edges.iter().map(|e| e.from.as_str()).collect();
    let sources: Vec<&DagNode> = dag
        .nodes
        .iter()
        .filter(|n| !has_in.contains(n.id.as_str()))
        .collect();
    let sinks: Vec<&DagNode> = dag
        .nodes
        .iter()
        .filter(|n| !has_out.contains(n.id.as_str()))
        .collect();

    let tid = |id: &str| format!("t[{id}]");
    let mut places = vec!["source".to_owned(), "sink".to_owned()];
    let mut transitions: Vec<Transition> = dag
        .nodes
        .iter()
        .map(|n| Transition::visible(tid(&n.id), n.action.clone()))
        .collect();
    let mut arcs = Vec::new();

    for e in &edges {
        let p = format!("p[{}->{}]", e.from, e.to);
        arcs.push(NetArc::new(tid(&e.from), p.clone()));
        arcs.push(NetArc::new(p.clone(), tid(&e.to)));
        places.push(p);
    }

    if let [only] = sources.as_slice() {
        arcs.push(NetArc::new("source", tid(&only.id)));
    } else {
        transitions.push(Transition::silent("tau_start"));
        arcs.push(NetArc::new("source", "tau_start"));
        for s in &sources {
            let p = format!("in[{}]", s.id);
            arcs.push(NetArc::new("tau_start", p.clone()));
            arcs.push(NetArc::new(p.clone(), tid(&s.id)));
            places.push(p);
        }
    }

    if let [only] = sinks.as_slice() {
        arcs.push(NetArc::new(tid(&only.id), "sink"));
    } else {
        transitions.push(Transition::silent("tau_end"));
        arcs.push(NetArc::new("tau_end", "sink"));
        for s in &sinks {
            let p = format!("out[{}]", s.id);
            arcs.push(NetArc::new(tid(&s.id), p.clone()));
            arcs.push(NetArc::new(p.clone(), "tau_end"));
            places.push(p);
        }
    }

    Ok(PetriNet {
        places,
        transitions,
        arcs,
        initial_marking: Marking::single("source"),
        final_marking: Marking::single("sink"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_net;
    use crate::petri::visible_language;

    pub(crate) fn dag(nodes: &[&str], edges: &[(&str, &str)]) -> DagModel {
        DagModel::new(
            nodes
                .iter()
                .map(|n| DagNode {
                    id: n.to_string(),
                    action: Action::new(n).unwrap(),
                })
                .collect(),
            edges
                .iter()
                .map(|(a, b)| DagEdge {
                    from: a.to_string(),
                    to: b.to_string(),
                })
                .collect(),
        )
    }

    fn words(net: &PetriNet) -> Vec<String> {
        visible_language(net, 10)
            .unwrap()
            .into_iter()
            .map(|w| w.iter().map(Action::as_str).collect::<String>())
            .collect()
    }

    #[test]
    fn chain_has_one_sequence() {
        let net = dag_to_petri(&dag(&["A", "B"], &[("A", "B")])).unwrap();
        assert!(validate_net(&net).is_valid());
        assert_eq!(words(&net), vec!["AB"]);
    }

    #[test]
    fn diamond_language() {
        let d = dag(
            &["A", "B", "C", "D"],
            &[("A", "B"), ("A", "C"), ("B", "D"), ("C", "D")],
        );
        let net = dag_to_petri(&d).unwrap();
        assert!(validate_net(&net).is_valid());
        assert_eq!(words(&net), vec!["ABCD", "ACBD"]);
    }

    #[test]
    fn single_node() {
        let net = dag_to_petri(&dag(&["A"], &[])).unwrap();
        assert_eq!(words(&net), vec!["A"]);
    }

    #[test]
    fn parallel_sources_and_sinks() {
        let net = dag_to_petri(&dag(&["A", "B"], &[])).unwrap();
        assert!(validate_net(&net).is_valid());
        assert_eq!(words(&net), vec!["AB", "BA"]);
    }

    #[test]
    fn cycle_reports_edges() {
        let d = dag(&["A", "B", "C"], &[("A", "B"), ("B", "C"), ("C", "B")]);
        match dag_to_petri(&d) {
            Err(PetriError::Cycle(edges)) => {
                assert_eq!(edges.len(), 2);
                assert!(edges.iter().all(|e| e.from != "A"));
            }
            other => panic!("expected cycle, got {other:?}"),
        }
        assert!(matches!(
            dag_to_petri(&dag(&[], &[])),
            Err(PetriError::EmptyDag)
        ));
        assert!(matches!(
            dag_to_petri(&dag(&["A"], &[("A", "Z")])),
            Err(PetriError::UnknownDagNode { .. })
        ));
    }

    #[test]
    fn reduction_and_critical_path() {
        let d = dag(&["A", "B", "C"], &[("A", "B"), ("B", "C"), ("A", "C")]);
        let r = d.transitive_reduction().unwrap();
        assert_eq!(r.edges.len(), 2);
        assert_eq!(d.critical_path_len().unwrap(), 3);
        let diamond = dag(
            &["A", "B", "C", "D"],
            &[("A", "B"), ("A", "C"), ("B", "D"), ("C", "D")],
        );
        assert_eq!(diamond.critical_path_len().unwrap(), 3);
        assert_eq!(diamond.transitive_reduction().unwrap().edges.len(), 4);
    }
}
