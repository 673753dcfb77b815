//! Domain types shared by every other module.

mod action;
mod alignment;
mod net;
mod skill;
mod tree;

pub use action::{Action, EventLog, Trace};
pub use alignment::{Alignment, Move};
pub use net::{validate_net, Marking, NetArc, PetriNet, Transition, ValidationReport, Violation};
pub use skill::{EmbeddingVector, Provenance, Skill, SkillLibrary};
pub use tree::{parse_process_tree, serialize_process_tree, Operator, ProcessTree};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("action name must not be empty")]
    EmptyAction,
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("{operator} has {found} children{}", offset.map(|o| format!(" (at byte {o})")).unwrap_or_default())]
    Arity {
        operator: &'static str,
        found: usize,
        offset: Option<usize>,
    },
    #[error("skill '{skill_id}' has embedding {found}, library uses {expected}")]
    EmbeddingMismatch {
        skill_id: String,
        expected: String,
        found: String,
    },
}
