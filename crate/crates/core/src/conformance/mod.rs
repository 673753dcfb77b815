//! Token-based replay fitness and optimal alignments.

mod alignment;
mod replay;

pub use alignment::{
    alignment_fitness, optimal_alignment, synchronous_product, Aligner, AlignmentOptions,
    Heuristic, MoveKind, ProductMove, SyncProduct,
};
pub use replay::{token_replay, ReplayResult};

use crate::petri::PetriError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConformanceError {
    #[error(transparent)]
    Petri(PetriError),
    #[error("final marking is unreachable")]
    FinalUnreachable,
    #[error("alignment search exceeded {0} states")]
    StateLimit(usize),
}

impl From<PetriError> for ConformanceError {
    fn from(e: PetriError) -> Self {
        match e {
            PetriError::FinalUnreachable => Self::FinalUnreachable,
            PetriError::StateLimit(n) => Self::StateLimit(n),
            other => Self::Petri(other),
        }
    }
}
