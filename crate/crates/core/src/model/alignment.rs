use serde::{Deserialize, Serialize};

use super::Action;

/// One step of an alignment between a trace and a model run.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "MoveRecord", try_from = "MoveRecord")]
pub enum Move {
    /// Trace event and model transition agree.
    Sync(Action),
    /// Trace event with no model counterpart.
    Log(Action),
    /// Visible model transition skipped by the trace.
    Model(Action),
    /// Silent model transition.
    ModelSilent,
}

impl Move {
    pub fn type_name(&self) -> &'static str {
        match self {
            Move::Sync(_) => "sync",
            Move::Log(_) => "log",
            Move::Model(_) => "model",
            Move::ModelSilent => "model_silent",
        }
    }

    pub fn action(&self) -> Option<&Action> {
        match self {
            Move::Sync(a) | Move::Log(a) | Move::Model(a) => Some(a),
            Move::ModelSilent => None,
        }
    }

    pub fn cost(&self) -> u32 {
        match self {
            Move::Sync(_) | Move::ModelSilent => 0,
            Move::Log(_) | Move::Model(_) => 1,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct MoveRecord {
    #[serde(rename = "type")]
    kind: String,
    action: Option<Action>,
}

impl From<Move> for MoveRecord {
    fn from(m: Move) -> Self {
        MoveRecord {
            kind: m.type_name().to_owned(),
            action: m.action().cloned(),
        }
    }
}

impl TryFrom<MoveRecord> for Move {
    type Error = String;

    fn try_from(r: MoveRecord) -> Result<Self, Self::Error> {
        let need =
            |a: Option<Action>| a.ok_or_else(|| format!("move type '{}' needs an action", r.kind));
        match r.kind.as_str() {
            "sync" => Ok(Move::Sync(need(r.action)?)),
            "log" => Ok(Move::Log(need(r.action)?)),
            "model" => Ok(Move::Model(need(r.action)?)),
            "model_silent" => Ok(Move::ModelSilent),
            other => Err(format!("unknown move type '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub moves: Vec<Move>,
    pub cost: f64,
    pub fitness: f64,
}

impl Alignment {
    /// Actions of the trace side (sync and log moves).
    pub fn log_projection(&self) -> Vec<&Action> {
        self.moves
            .iter()
            .filter_map(|m| match m {
                Move::Sync(a) | Move::Log(a) => Some(a),
                _ => None,
            })
            .collect()
    }

    /// Visible actions of the model side (sync and model moves).
    pub fn model_projection(&self) -> Vec<&Action> {
        self.moves
            .iter()
            .filter_map(|m| match m {
                Move::Sync(a) | Move::Model(a) => Some(a),
                _ => None,
            })
            .collect()
    }

    pub fn count(&self, type_name: &str) -> usize {
        self.moves
            .iter()
            .filter(|m| m.type_name() == type_name)
            .count()
    }
}
