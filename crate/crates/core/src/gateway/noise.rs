use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conformance::{Aligner, ConformanceError};
use crate::model::{Action, PetriNet, Trace};

use super::{Thought, ThoughtSource};

/// Half-width of the accepted fitness band around the target.
pub const NOISE_TOLERANCE: f64 = 0.05;
const RESTARTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyThought {
    pub thought: Thought,
    pub target_fitness: f64,
    pub achieved_fitness: f64,
    /// Set when no edited trace landed inside the target band.
    pub best_effort: bool,
    pub edits: usize,
}

struct Noise<'a> {
    rng: ChaCha8Rng,
    alphabet: &'a HashSet<Action>,
}

impl Noise<'_> {
    fn foreign_action(&mut self) -> Action {
        loop {
            let name = format!("noise-{}", self.rng.random_range(0..10_000u32));
            let a = Action::new(name).expect("non-empty");
            if !self.alphabet.contains(&a) {
                return a;
            }
        }
    }

    fn edit(&mut self, actions: &mut Vec<Action>) {
        let n = actions.len();
        let op = if n >= 2 {
            self.rng.random_range(0..3)
        } else {
            2
        };
        match op {
            0 => {
                let i = self.rng.random_range(0..n - 1);
                actions.swap(i, i + 1);
            }
            1 => {
                let i = self.rng.random_range(0..n);
                actions.remove(i);
            }
            _ => {
                let i = self.rng.random_range(0..=n);
                let a = self.foreign_action();
                actions.insert(i, a);
            }
        }
    }
}

/// Degrades `ground_truth` by random adjacent swaps, deletions and insertions
/// of actions outside the model alphabet until its alignment fitness against
/// `net` lies within `NOISE_TOLERANCE` of `target_fitness`.
///
/// A target of 0 replaces every action by a foreign one. Targets above the
/// fitness of the unmodified trace, or bands missed after a bounded number of
/// random walks, yield the closest trace seen with `best_effort` set.
pub fn noisy_planner(
    ground_truth: &Trace,
    net: &PetriNet,
    target_fitness: f64,
    seed: u64,
) -> Result<NoisyThought, ConformanceError> {
    let aligner = Aligner::new(net)?;
    let alphabet: HashSet<Action> = net.alphabet().into_iter().collect();
    let mut noise = Noise {
        rng: ChaCha8Rng::seed_from_u64(seed),
        alphabet: &alphabet,
    };
    let target = target_fitness.clamp(0.0, 1.0);
    let fitness = |actions: &[Action]| -> Result<f64, ConformanceError> {
        Ok(aligner.align(&Trace::new("", actions.to_vec()))?.fitness)
    };
    let inside = |f: f64| (f - target).abs() <= NOISE_TOLERANCE + 1e-12;
    let finish =
        |actions: Vec<Action>, achieved: f64, best_effort: bool, edits: usize| NoisyThought {
            thought: Thought {
                trace: Trace::new(format!("{}:noisy", ground_truth.id), actions),
                source: ThoughtSource::Stub,
                raw_response: None,
                off_catalog: Vec::new(),
            },
            target_fitness: target,
            achieved_fitness: achieved,
            best_effort,
            edits,
        };

    let f0 = fitness(&ground_truth.actions)?;
    if inside(f0) {
        return Ok(finish(ground_truth.actions.clone(), f0, false, 0));
    }
    if target <= 0.0 {
        let replaced: Vec<Action> = (0..ground_truth.len().max(1))
            .map(|_| noise.foreign_action())
            .collect();
        let f = fitness(&replaced)?;
        let edits = replaced.len() + ground_truth.len();
        return Ok(finish(replaced, f, !inside(f), edits));
    }
    if target > f0 {
        return Ok(finish(ground_truth.actions.clone(), f0, true, 0));
    }

    let mut best = (ground_truth.actions.clone(), f0, 0usize);
    let max_steps = 4 * ground_truth.len() + 8;
    for _ in 0..RESTARTS {
        let mut cur = ground_truth.actions.clone();
        for step in 1..=max_steps {
            noise.edit(&mut cur);
            let f = fitness(&cur)?;
            if inside(f) {
                return Ok(finish(cur, f, false, step));
            }
            if (f - target).abs() < (best.1 - target).abs() {
                best = (cur.clone(), f, step);
            }
            if f < target - NOISE_TOLERANCE {
                break;
            }
        }
    }
    let (actions, f, edits) = best;
    Ok(finish(actions, f, true, edits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::petri::tree_to_petri;

    fn worked() -> (Trace, PetriNet) {
        let net =
            tree_to_petri(&"AND(SEQ('A','B'),SEQ('C','D','E','F'))".parse().unwrap()).unwrap();
        (
            Trace::from_names("gt", ["A", "B", "C", "D", "E", "F"]).unwrap(),
            net,
        )
    }

    #[test]
    fn target_one_keeps_trace() {
        let (gt, net) = worked();
        let r = noisy_planner(&gt, &net, 1.0, 1).unwrap();
        assert_eq!(r.thought.trace.actions, gt.actions);
        assert_eq!(r.achieved_fitness, 1.0);
        assert!(!r.best_effort);
    }

    #[test]
    fn target_zero_replaces_everything() {
        let (gt, net) = worked();
        let r = noisy_planner(&gt, &net, 0.0, 1).unwrap();
        assert_eq!(r.thought.trace.len(), 6);
        assert!(r
            .thought
            .trace
            .actions
            .iter()
            .all(|a| !gt.actions.contains(a)));
        assert_eq!(r.achieved_fitness, 0.0);
    }

    #[test]
    fn target_band_and_determinism() {
        let (gt, net) = worked();
        let a = noisy_planner(&gt, &net, 0.7, 42).unwrap();
        let measured = Aligner::new(&net)
            .unwrap()
            .align(&a.thought.trace)
            .unwrap()
            .fitness;
        assert_eq!(measured, a.achieved_fitness);
        assert!((0.65..=0.75).contains(&measured), "{measured}");
        assert_eq!(a, noisy_planner(&gt, &net, 0.7, 42).unwrap());
    }

    #[test]
    fn unattainable_target_is_flagged() {
        let (_, net) = worked();
        let bad = Trace::from_names("x", ["B", "A"]).unwrap();
        let r = noisy_planner(&bad, &net, 1.0, 3).unwrap();
        assert!(r.best_effort);
    }
}
