use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use crate::model::{Action, Marking, PetriNet};

use super::PetriError;

/// Upper bound on distinct markings explored by any reachability search.
pub const DEFAULT_STATE_LIMIT: usize = 1_000_000;

/// Dense marking: token count per place index.
pub type DenseMarking = Vec<u32>;

#[derive(Debug, Clone)]
pub struct CompiledTransition {
    pub id: String,
    pub label: Option<Action>,
    pub inputs: Vec<(usize, u32)>,
    pub outputs: Vec<(usize, u32)>,
}

impl CompiledTransition {
    pub fn is_silent(&self) -> bool {
        self.label.is_none()
    }
}

/// Index-based view of a [`PetriNet`] for fast token-game execution.
#[derive(Debug, Clone)]
pub struct CompiledNet {
    places: Vec<String>,
    place_index: HashMap<String, usize>,
    transitions: Vec<CompiledTransition>,
    transition_index: HashMap<String, usize>,
    consumers: Vec<Vec<usize>>,
    unguarded: Vec<usize>,
    initial: DenseMarking,
    final_marking: DenseMarking,
}

impl CompiledNet {
    pub fn new(net: &PetriNet) -> Result<Self, PetriError> {
        let place_index: HashMap<String, usize> = net
            .places
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        let transition_index: HashMap<String, usize> = net
            .transitions
            .iter()
            .enumerate()
            .map(|(i, t)| (t.id.clone(), i))
            .collect();
        let mut transitions: Vec<CompiledTransition> = net
            .transitions
            .iter()
            .map(|t| CompiledTransition {
                id: t.id.clone(),
                label: t.label.clone(),
                inputs: Vec::new(),
                outputs: Vec::new(),
            })
            .collect();
        for arc in &net.arcs {
            let (place, trans, is_input) = match (
                place_index.get(&arc.from),
                transition_index.get(&arc.to),
                transition_index.get(&arc.from),
                place_index.get(&arc.to),
            ) {
                (Some(&p), Some(&t), _, _) => (p, t, true),
                (_, _, Some(&t), Some(&p)) => (p, t, false),
                _ => {
                    return Err(PetriError::BadArc {
                        from: arc.from.clone(),
                        to: arc.to.clone(),
                    })
                }
            };
            let list = if is_input {
                &mut transitions[trans].inputs
            } else {
                &mut transitions[trans].outputs
            };
            match list.iter_mut().find(|(p, _)| *p == place) {
                Some((_, w)) => *w += 1,
                None => list.push((place, 1)),
            }
        }
        let mut consumers = vec![Vec::new(); net.places.len()];
        let mut unguarded = Vec::new();
        for (ti, t) in transitions.iter().enumerate() {
            if t.inputs.is_empty() {
                unguarded.push(ti);
            }
            for &(p, _) in &t.inputs {
                consumers[p].push(ti);
            }
        }
        let mut compiled = Self {
            places: net.places.clone(),
            place_index,
            transitions,
            transition_index,
            consumers,
            unguarded,
            initial: Vec::new(),
            final_marking: Vec::new(),
        };
        compiled.initial = compiled.densify(&net.initial_marking)?;
        compiled.final_marking = compiled.densify(&net.final_marking)?;
        Ok(compiled)
    }

    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[CompiledTransition] {
        &self.transitions
    }

    pub fn transition_index(&self, id: &str) -> Option<usize> {
        self.transition_index.get(id).copied()
    }

    pub fn place_index(&self, id: &str) -> Option<usize> {
        self.place_index.get(id).copied()
    }

    pub fn initial(&self) -> &DenseMarking {
        &self.initial
    }

    pub fn final_marking(&self) -> &DenseMarking {
        &self.final_marking
    }

    pub fn densify(&self, marking: &Marking) -> Result<DenseMarking, PetriError> {
        let mut dense = vec![0; self.places.len()];
        for (place, count) in marking.iter() {
            let idx = self
                .place_index
                .get(place)
                .ok_or_else(|| PetriError::UnknownPlace(place.to_owned()))?;
            dense[*idx] = count;
        }
        Ok(dense)
    }

    pub fn sparsify(&self, dense: &[u32]) -> Marking {
        dense
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (self.places[i].clone(), c))
            .collect()
    }

    pub fn is_enabled(&self, marking: &[u32], t: usize) -> bool {
        self.transitions[t]
            .inputs
            .iter()
            .all(|&(p, w)| marking[p] >= w)
    }

    /// Enabled transition indices, ascending.
    pub fn enabled(&self, marking: &[u32]) -> Vec<usize> {
        let mut candidates: Vec<usize> = self.unguarded.clone();
        for (p, &c) in marking.iter().enumerate() {
            if c > 0 {
                candidates.extend_from_slice(&self.consumers[p]);
            }
        }
        candidates.sort_unstable();
        candidates.dedup();
        candidates.retain(|&t| self.is_enabled(marking, t));
        candidates
    }

    /// Fires `t`, assuming it is enabled.
    pub fn fire_unchecked(&self, marking: &[u32], t: usize) -> DenseMarking {
        let mut next = marking.to_vec();
        let tr = &self.transitions[t];
        for &(p, w) in &tr.inputs {
            next[p] -= w;
        }
        for &(p, w) in &tr.outputs {
            next[p] += w;
        }
        next
    }

    pub fn fire(&self, marking: &[u32], t: usize) -> Result<DenseMarking, PetriError> {
        if !self.is_enabled(marking, t) {
            return Err(PetriError::NotEnabled(self.transitions[t].id.clone()));
        }
        Ok(self.fire_unchecked(marking, t))
    }

    /// Minimum number of visible firings from the initial to the final marking.
    /// Silent firings are free.
    pub fn shortest_visible_path(&self, state_limit: usize) -> Result<u32, PetriError> {
        let mut dist: HashMap<DenseMarking, u32> = HashMap::new();
        let mut queue: VecDeque<(DenseMarking, u32)> = VecDeque::new();
        dist.insert(self.initial.clone(), 0);
        queue.push_back((self.initial.clone(), 0));
        while let Some((m, d)) = queue.pop_front() {
            if dist.get(&m).is_some_and(|&best| best < d) {
                continue;
            }
            if m == self.final_marking {
                return Ok(d);
            }
            for t in self.enabled(&m) {
                let next = self.fire_unchecked(&m, t);
                let step = u32::from(!self.transitions[t].is_silent());
                let nd = d + step;
                if dist.get(&next).is_none_or(|&best| nd < best) {
                    if dist.len() >= state_limit && !dist.contains_key(&next) {
                        return Err(PetriError::StateLimit(state_limit));
                    }
                    dist.insert(next.clone(), nd);
                    if step == 0 {
                        queue.push_front((next, nd));
                    } else {
                        queue.push_back((next, nd));
                    }
                }
            }
        }
        Err(PetriError::FinalUnreachable)
    }

    /// All visible label sequences of length at most `max_len` that lead from
    /// the initial to the final marking.
    pub fn visible_language(
        &self,
        max_len: usize,
        state_limit: usize,
    ) -> Result<BTreeSet<Vec<Action>>, PetriError> {
        let mut out = BTreeSet::new();
        let mut seen: HashSet<(DenseMarking, Vec<Action>)> = HashSet::new();
        let mut stack = vec![(self.initial.clone(), Vec::<Action>::new())];
        seen.insert(stack[0].clone());
        while let Some((m, word)) = stack.pop() {
            if m == self.final_marking {
                out.insert(word.clone());
            }
            for t in self.enabled(&m) {
                let next = self.fire_unchecked(&m, t);
                let mut w = word.clone();
                if let Some(label) = &self.transitions[t].label {
                    if w.len() == max_len {
                        continue;
                    }
                    w.push(label.clone());
                }
                let key = (next, w);
                if !seen.contains(&key) {
                    if seen.len() >= state_limit {
                        return Err(PetriError::StateLimit(state_limit));
                    }
                    seen.insert(key.clone());
                    stack.push(key);
                }
            }
        }
        Ok(out)
    }
}

/// Ids of the transitions enabled at `marking`.
pub fn enabled_transitions(
    net: &PetriNet,
    marking: &Marking,
) -> Result<BTreeSet<String>, PetriError> {
    let c = CompiledNet::new(net)?;
    let dense = c.densify(marking)?;
    Ok(c.enabled(&dense)
        .into_iter()
        .map(|t| c.transitions[t].id.clone())
        .collect())
}

/// Fires transition `transition` at `marking`.
pub fn fire(net: &PetriNet, marking: &Marking, transition: &str) -> Result<Marking, PetriError> {
    let c = CompiledNet::new(net)?;
    let dense = c.densify(marking)?;
    let t = c
        .transition_index(transition)
        .ok_or_else(|| PetriError::UnknownTransition(transition.to_owned()))?;
    Ok(c.sparsify(&c.fire(&dense, t)?))
}

pub fn shortest_model_path_cost(net: &PetriNet) -> Result<u32, PetriError> {
    CompiledNet::new(net)?.shortest_visible_path(DEFAULT_STATE_LIMIT)
}

pub fn visible_language(
    net: &PetriNet,
    max_len: usize,
) -> Result<BTreeSet<Vec<Action>>, PetriError> {
    CompiledNet::new(net)?.visible_language(max_len, DEFAULT_STATE_LIMIT)
}
