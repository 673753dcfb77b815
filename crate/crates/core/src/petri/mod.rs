//! Executable Petri-net semantics and translations into nets.

mod dag;
mod semantics;
mod translate;

pub use dag::{dag_to_petri, DagEdge, DagModel, DagNode};
pub use semantics::{
    enabled_transitions, fire, shortest_model_path_cost, visible_language, CompiledNet,
    CompiledTransition, DenseMarking, DEFAULT_STATE_LIMIT,
};
pub use translate::tree_to_petri;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PetriError {
    #[error("arc {from} -> {to} does not connect a place and a transition of the net")]
    BadArc { from: String, to: String },
    #[error("unknown place '{0}'")]
    UnknownPlace(String),
    #[error("unknown transition '{0}'")]
    UnknownTransition(String),
    #[error("transition '{0}' is not enabled")]
    NotEnabled(String),
    #[error("final marking is unreachable")]
    FinalUnreachable,
    #[error("reachability search exceeded {0} states")]
    StateLimit(usize),
    #[error("DAG has no nodes")]
    EmptyDag,
    #[error("DAG node id '{0}' is not unique")]
    DuplicateDagNode(String),
    #[error("DAG edge {from} -> {to} references an unknown node")]
    UnknownDagNode { from: String, to: String },
    #[error("DAG contains a cycle through edges {}", fmt_edges(.0))]
    Cycle(Vec<DagEdge>),
}

fn fmt_edges(edges: &[DagEdge]) -> String {
    edges
        .iter()
        .map(|e| format!("{}->{}", e.from, e.to))
        .collect::<Vec<_>>()
        .join(", ")
}
