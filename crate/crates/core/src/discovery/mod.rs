//! Process discovery: learning a process tree from an event log.

mod dfg;
mod inductive;

pub use dfg::{build_dfg, DirectlyFollowsGraph};
pub use inductive::{
    discover, discover_skill, discover_skill_with, discover_with, flower_model, DiscoveryOptions,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiscoveryError {
    #[error("event log '{0}' has no non-empty traces")]
    EmptyLog(String),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}
