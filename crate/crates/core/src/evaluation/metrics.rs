use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::retrieval::RankedSkillList;

use super::EvalError;

/// One query answered by one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalTrial {
    pub query: String,
    #[serde(default)]
    pub language: Option<String>,
    pub method: String,
    pub true_skill_id: String,
    pub ranked: RankedSkillList,
    /// Alignment fitness of the thought against the true skill.
    #[serde(default)]
    pub thought_fitness: Option<f64>,
}

impl RetrievalTrial {
    pub fn predicted(&self) -> Option<&str> {
        self.ranked.top()
    }

    pub fn is_correct(&self) -> bool {
        self.predicted() == Some(self.true_skill_id.as_str())
    }

    /// 1/rank of the true skill, 0 when it is not listed.
    pub fn reciprocal_rank(&self) -> f64 {
        self.ranked
            .rank_of(&self.true_skill_id)
            .map_or(0.0, |r| 1.0 / r as f64)
    }
}

fn non_empty(trials: &[RetrievalTrial]) -> Result<(), EvalError> {
    if trials.is_empty() {
        return Err(EvalError::NoTrials);
    }
    Ok(())
}

/// Micro-averaged F1 of the top-1 predictions. With one label per trial this
/// is the fraction of trials whose top-ranked skill is the true one.
pub fn f1_score(trials: &[RetrievalTrial]) -> Result<f64, EvalError> {
    non_empty(trials)?;
    let correct = trials.iter().filter(|t| t.is_correct()).count();
    Ok(correct as f64 / trials.len() as f64)
}

/// Unweighted mean of per-skill F1 over every skill that is a true label or a
/// prediction.
pub fn macro_f1(trials: &[RetrievalTrial]) -> Result<f64, EvalError> {
    non_empty(trials)?;
    let mut tp: BTreeMap<&str, usize> = BTreeMap::new();
    let mut fp: BTreeMap<&str, usize> = BTreeMap::new();
    let mut fn_: BTreeMap<&str, usize> = BTreeMap::new();
    let mut labels: BTreeSet<&str> = BTreeSet::new();
    for t in trials {
        labels.insert(&t.true_skill_id);
        match t.predicted() {
            Some(p) if p == t.true_skill_id => *tp.entry(p).or_default() += 1,
            Some(p) => {
                labels.insert(p);
                *fp.entry(p).or_default() += 1;
                *fn_.entry(&t.true_skill_id).or_default() += 1;
            }
            None => *fn_.entry(&t.true_skill_id).or_default() += 1,
        }
    }
    let total: f64 = labels
        .iter()
        .map(|l| {
            let (tp, fp, fn_) = (
                tp.get(l).copied().unwrap_or(0),
                fp.get(l).copied().unwrap_or(0),
                fn_.get(l).copied().unwrap_or(0),
            );
            let den = 2 * tp + fp + fn_;
            if den == 0 {
                0.0
            } else {
                2.0 * tp as f64 / den as f64
            }
        })
        .sum();
    Ok(total / labels.len() as f64)
}

pub fn mrr(trials: &[RetrievalTrial]) -> Result<f64, EvalError> {
    non_empty(trials)?;
    Ok(trials
        .iter()
        .map(RetrievalTrial::reciprocal_rank)
        .sum::<f64>()
        / trials.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub f1: f64,
    pub macro_f1: f64,
    pub mrr: f64,
    pub trials: usize,
}

impl Scores {
    pub fn of(trials: &[RetrievalTrial]) -> Result<Self, EvalError> {
        Ok(Self {
            f1: f1_score(trials)?,
            macro_f1: macro_f1(trials)?,
            mrr: mrr(trials)?,
            trials: trials.len(),
        })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::retrieval::{RankedEntry, RetrievalMethod};

    pub(crate) fn trial(truth: &str, ranking: &[&str]) -> RetrievalTrial {
        RetrievalTrial {
            query: "q".into(),
            language: None,
            method: "m".into(),
            true_skill_id: truth.into(),
            ranked: RankedSkillList {
                method: RetrievalMethod::Embed,
                entries: ranking
                    .iter()
                    .enumerate()
                    .map(|(i, id)| RankedEntry {
                        skill_id: (*id).into(),
                        score: 1.0 - i as f64 / 10.0,
                        rank: i + 1,
                        alignment: None,
                        error: None,
                    })
                    .collect(),
            },
            thought_fitness: None,
        }
    }

    #[test]
    fn f1_counts() {
        let t = [
            trial("a", &["a"]),
            trial("b", &["a", "b"]),
            trial("c", &["c"]),
            trial("d", &["x"]),
        ];
        assert_eq!(f1_score(&t).unwrap(), 0.5);
        assert_eq!(f1_score(&t[..1]).unwrap(), 1.0);
        let ten: Vec<_> = (0..10)
            .map(|i| {
                if i < 7 {
                    trial("a", &["a"])
                } else {
                    trial("a", &["b", "a"])
                }
            })
            .collect();
        assert!((f1_score(&ten).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(f1_score(&[]), Err(EvalError::NoTrials));
    }

    #[test]
    fn mrr_values() {
        let t = [
            trial("a", &["a"]),
            trial("a", &["b", "a"]),
            trial("a", &["b", "c", "d", "a"]),
        ];
        assert!((mrr(&t).unwrap() - 0.58333).abs() < 1e-5);
        assert_eq!(mrr(&[trial("a", &["a"])]).unwrap(), 1.0);
        assert_eq!(mrr(&[trial("a", &["b"])]).unwrap(), 0.0);
    }

    #[test]
    fn macro_average() {
        // a: tp 1, fn 1 -> 2/3; b: fp 1 -> 0.
        let t = [trial("a", &["a"]), trial("a", &["b"])];
        assert!((macro_f1(&t).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }
}
