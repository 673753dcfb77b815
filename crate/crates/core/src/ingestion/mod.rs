//! Loading event logs and reference DAGs, and persisting skill libraries.

mod dags;
mod library;
mod logs;

use std::path::Path;

pub use dags::{load_reference_dags, DagFormat, DagLoadOptions, ReferenceDag};
pub use library::{
    append_skill, load_library, save_library, skill_file_name, IndexEntry, LibraryIndex,
    LibraryLock, FORMAT_VERSION,
};
pub use logs::{
    load_event_logs, CanonicalLogAdapter, LoadOptions, LoadReport, LogAdapter, LogFormat, LogStats,
    ProcessTBenchAdapter, SkippedRecord,
};

use crate::model::ModelError;
use crate::petri::PetriError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: invalid JSON: {message}")]
    Json { path: String, message: String },
    #[error("record '{record}': {message}")]
    Record { record: String, message: String },
    #[error("{0}: no records")]
    Empty(String),
    #[error("library format '{found}' is not supported (expected '{expected}')")]
    Version { found: String, expected: String },
    #[error("skill '{skill_id}': file {file} is missing")]
    MissingSkillFile { skill_id: String, file: String },
    #[error("skill file {file} holds '{found}', index says '{skill_id}'")]
    SkillIdMismatch {
        skill_id: String,
        file: String,
        found: String,
    },
    #[error("skill '{skill_id}': invalid net: {detail}")]
    InvalidNet { skill_id: String, detail: String },
    #[error("skill '{0}': stored net is not the translation of its tree")]
    Inconsistent(String),
    #[error("library at {0} is locked by another writer")]
    Locked(String),
    #[error("skill '{0}' already exists")]
    Conflict(String),
    #[error("DAG '{process_id}': {source}")]
    Dag {
        process_id: String,
        source: PetriError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub(crate) fn io_err(path: &Path, e: impl std::fmt::Display) -> IngestError {
    IngestError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Parses a file holding one JSON value, or one JSON value per line.
pub(crate) fn read_records(path: &Path) -> Result<Vec<serde_json::Value>, IngestError> {
    use serde_json::Value;
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let records = match serde_json::from_str::<Value>(&text) {
        Ok(Value::Array(items)) => items,
        Ok(v) => vec![v],
        Err(whole) => {
            let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
            if lines.len() < 2 {
                return Err(IngestError::Json {
                    path: path.display().to_string(),
                    message: whole.to_string(),
                });
            }
            lines
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    serde_json::from_str(l).map_err(|e| IngestError::Json {
                        path: path.display().to_string(),
                        message: format!("line {}: {e}", i + 1),
                    })
                })
                .collect::<Result<_, _>>()?
        }
    };
    if records.is_empty() {
        return Err(IngestError::Empty(path.display().to_string()));
    }
    Ok(records)
}

/// Mean, sample standard deviation and order statistics of a sample.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        };
        Some(Self {
            count: n,
            mean,
            std,
            min: v[0],
            median,
            max: v[n - 1],
        })
    }
}
