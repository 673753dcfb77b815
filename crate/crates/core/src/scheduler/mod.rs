//! Critical paths, speedup from concurrency, and a logical-tick executor.

use serde::{Deserialize, Serialize};

use crate::model::{Action, PetriNet, ProcessTree};
use crate::petri::{CompiledNet, DagModel, PetriError, DEFAULT_STATE_LIMIT};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchedulerError {
    #[error("model has no visible action")]
    ZeroLength,
    #[error("no models to summarise")]
    Empty,
    #[error("action duration must be at least 1 tick")]
    ZeroDuration,
    #[error("no run reaches the final marking")]
    NoCompleteRun,
    #[error(transparent)]
    Petri(#[from] PetriError),
}

/// Longest chain of actions that must run one after another. Choices take
/// their longest branch and loop bodies count once.
pub fn critical_path_length(tree: &ProcessTree) -> u64 {
    match tree {
        ProcessTree::Leaf(_) => 1,
        ProcessTree::Tau => 0,
        ProcessTree::Seq(c) => c.iter().map(critical_path_length).sum(),
        ProcessTree::And(c) | ProcessTree::Xor(c) => {
            c.iter().map(critical_path_length).max().unwrap_or(0)
        }
        ProcessTree::Loop(body, _) => critical_path_length(body),
    }
}

/// Number of actions executed one at a time on the same worst-case run.
pub fn sequential_length(tree: &ProcessTree) -> u64 {
    match tree {
        ProcessTree::Leaf(_) => 1,
        ProcessTree::Tau => 0,
        ProcessTree::Seq(c) | ProcessTree::And(c) => c.iter().map(sequential_length).sum(),
        ProcessTree::Xor(c) => c.iter().map(sequential_length).max().unwrap_or(0),
        ProcessTree::Loop(body, _) => sequential_length(body),
    }
}

pub fn speedup(tree: &ProcessTree) -> Result<f64, SchedulerError> {
    let cp = critical_path_length(tree);
    if cp == 0 {
        return Err(SchedulerError::ZeroLength);
    }
    Ok(sequential_length(tree) as f64 / cp as f64)
}

pub fn dag_speedup(dag: &DagModel) -> Result<f64, SchedulerError> {
    let cp = dag.critical_path_len()?;
    if cp == 0 {
        return Err(SchedulerError::ZeroLength);
    }
    Ok(dag.nodes.len() as f64 / cp as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedupStats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl SpeedupStats {
    pub fn from_values(values: &[f64]) -> Result<Self, SchedulerError> {
        if values.is_empty() {
            return Err(SchedulerError::Empty);
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        };
        Ok(Self {
            count: n,
            mean: v.iter().sum::<f64>() / n as f64,
            median,
            min: v[0],
            max: v[n - 1],
        })
    }
}

pub fn dag_speedup_stats(dags: &[DagModel]) -> Result<SpeedupStats, SchedulerError> {
    let values = dags
        .iter()
        .map(dag_speedup)
        .collect::<Result<Vec<_>, _>>()?;
    SpeedupStats::from_values(&values)
}

/// One executed action. Ticks are 1-based and inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleStep {
    pub action: Action,
    pub start: u64,
    pub end: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub makespan: u64,
    pub steps: Vec<ScheduleStep>,
}

#[derive(Clone)]
struct TimedState {
    // Ready times of the tokens in each place.
    tokens: Vec<Vec<u64>>,
    fired: Vec<bool>,
    steps: Vec<(usize, u64, u64)>,
}

struct Simulator<'a> {
    net: &'a CompiledNet,
    duration: u64,
    conflicting: Vec<bool>,
    visited: usize,
}

impl Simulator<'_> {
    fn enabled(&self, s: &TimedState) -> Vec<usize> {
        (0..self.net.transitions().len())
            .filter(|&t| {
                !s.fired[t]
                    && self.net.transitions()[t]
                        .inputs
                        .iter()
                        .all(|&(p, w)| s.tokens[p].len() >= w as usize)
            })
            .collect()
    }

    fn fire(&self, s: &mut TimedState, t: usize) {
        let tr = &self.net.transitions()[t];
        let mut start = 0;
        for &(p, w) in &tr.inputs {
            let place = &mut s.tokens[p];
            place.sort_unstable();
            for ready in place.drain(..w as usize) {
                start = start.max(ready);
            }
        }
        let end = if tr.is_silent() {
            start
        } else {
            start + self.duration
        };
        for &(p, w) in &tr.outputs {
            s.tokens[p].extend(std::iter::repeat_n(end, w as usize));
        }
        s.fired[t] = true;
        if !tr.is_silent() {
            s.steps.push((t, start + 1, end));
        }
    }

    fn is_final(&self, s: &TimedState) -> bool {
        s.tokens
            .iter()
            .zip(self.net.final_marking())
            .all(|(toks, &need)| toks.len() == need as usize)
    }

    fn makespan(s: &TimedState) -> u64 {
        s.steps.iter().map(|&(_, _, e)| e).max().unwrap_or(0)
    }

    /// Longest-makespan complete run from `s`.
    fn explore(&mut self, mut s: TimedState) -> Result<Option<TimedState>, SchedulerError> {
        loop {
            self.visited += 1;
            if self.visited > DEFAULT_STATE_LIMIT {
                return Err(PetriError::StateLimit(DEFAULT_STATE_LIMIT).into());
            }
            if self.is_final(&s) {
                return Ok(Some(s));
            }
            let enabled = self.enabled(&s);
            if enabled.is_empty() {
                return Ok(None);
            }
            if let Some(&t) = enabled.iter().find(|&&t| !self.conflicting[t]) {
                self.fire(&mut s, t);
                continue;
            }
            let mut best: Option<TimedState> = None;
            for t in enabled {
                let mut branch = s.clone();
                self.fire(&mut branch, t);
                if let Some(done) = self.explore(branch)? {
                    if best
                        .as_ref()
                        .is_none_or(|b| Self::makespan(&done) > Self::makespan(b))
                    {
                        best = Some(done);
                    }
                }
            }
            return Ok(best);
        }
    }
}

/// Earliest-start execution of `net` in logical ticks, each visible action
/// taking `action_duration` ticks and silent transitions none. Every
/// transition fires at most once, so loops run their body once. Where the net
/// offers a choice, the branch with the longest makespan is scheduled.
pub fn simulate_parallel_execution(
    net: &PetriNet,
    action_duration: u64,
) -> Result<Schedule, SchedulerError> {
    if action_duration == 0 {
        return Err(SchedulerError::ZeroDuration);
    }
    let compiled = CompiledNet::new(net)?;
    let mut consumers = vec![0usize; compiled.places().len()];
    for t in compiled.transitions() {
        for &(p, _) in &t.inputs {
            consumers[p] += 1;
        }
    }
    let conflicting = compiled
        .transitions()
        .iter()
        .map(|t| t.inputs.iter().any(|&(p, _)| consumers[p] > 1))
        .collect();
    let initial = TimedState {
        tokens: compiled
            .initial()
            .iter()
            .map(|&c| vec![0; c as usize])
            .collect(),
        fired: vec![false; compiled.transitions().len()],
        steps: Vec::new(),
    };
    let mut sim = Simulator {
        net: &compiled,
        duration: action_duration,
        conflicting,
        visited: 0,
    };
    let done = sim.explore(initial)?.ok_or(SchedulerError::NoCompleteRun)?;
    let mut steps: Vec<ScheduleStep> = done
        .steps
        .iter()
        .map(|&(t, start, end)| ScheduleStep {
            action: compiled.transitions()[t].label.clone().expect("visible"),
            start,
            end,
        })
        .collect();
    steps.sort_by(|a, b| (a.start, &a.action).cmp(&(b.start, &b.action)));
    Ok(Schedule {
        makespan: Simulator::makespan(&done),
        steps,
    })
}
