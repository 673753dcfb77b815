//! Top-1 F1 and MRR, the closed-set retrieval experiment and the
//! planner-quality sensitivity grid.

mod experiment;
mod metrics;
mod report;

pub use experiment::{
    run_retrieval_experiment, EvalQuery, ExperimentConfig, ExperimentContext, ExperimentReport,
    MethodSpec, MethodSummary, ThoughtStats, TrialFailure,
};
pub use metrics::{f1_score, macro_f1, mrr, RetrievalTrial, Scores};
pub use report::{
    grid_csv, grid_table, report_table, sensitivity_analysis, GridCell, SensitivityGrid,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("no trials")]
    NoTrials,
    #[error("no queries")]
    NoQueries,
    #[error("no methods")]
    NoMethods,
    #[error("unknown method '{0}'")]
    UnknownMethod(String),
    #[error("unknown embedder '{0}'")]
    UnknownEmbedder(String),
    #[error("true skill '{0}' is not in the library")]
    UnknownSkill(String),
    #[error("{0}")]
    Setup(String),
}
