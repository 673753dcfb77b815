use std::fmt;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// A single plan step, typically the name of a tool.
///
/// Names are trimmed on construction and compared case-sensitively.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Action(String);

impl Action {
    pub fn new(name: impl AsRef<str>) -> Result<Self, ModelError> {
        let name = name.as_ref().trim();
        if name.is_empty() {
            return Err(ModelError::EmptyAction);
        }
        Ok(Self(name.to_owned()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Action {
    type Error = ModelError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Action::new(value)
    }
}

impl TryFrom<&str> for Action {
    type Error = ModelError;

    fn try_from(value: &str) -> Result<Self, Self::Error> {
        Action::new(value)
    }
}

impl From<Action> for String {
    fn from(a: Action) -> Self {
        a.0
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One case: an ordered sequence of actions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Trace {
    pub id: String,
    pub actions: Vec<Action>,
}

impl Trace {
    pub fn new(id: impl Into<String>, actions: Vec<Action>) -> Self {
        Self {
            id: id.into(),
            actions,
        }
    }

    pub fn empty(id: impl Into<String>) -> Self {
        Self::new(id, Vec::new())
    }

    /// Builds a trace from action names. Fails on any empty name.
    pub fn from_names<I, S>(id: impl Into<String>, names: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let actions = names
            .into_iter()
            .map(Action::new)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(id, actions))
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// All traces recorded for one problem, plus the problem's query texts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub process_id: String,
    #[serde(default)]
    pub query_texts: Vec<String>,
    pub traces: Vec<Trace>,
}

impl EventLog {
    pub fn new(
        process_id: impl Into<String>,
        query_texts: Vec<String>,
        traces: Vec<Trace>,
    ) -> Self {
        Self {
            process_id: process_id.into(),
            query_texts,
            traces,
        }
    }

    /// Number of distinct action sequences.
    pub fn num_variants(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        for t in &self.traces {
            seen.insert(t.actions.as_slice());
        }
        seen.len()
    }

    /// Distinct actions occurring in the log, sorted.
    pub fn alphabet(&self) -> Vec<Action> {
        let set: std::collections::BTreeSet<&Action> =
            self.traces.iter().flat_map(|t| t.actions.iter()).collect();
        set.into_iter().cloned().collect()
    }
}
