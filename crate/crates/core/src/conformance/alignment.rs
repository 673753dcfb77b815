use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use serde::Serialize;

use crate::model::{Action, Alignment, Marking, Move, NetArc, PetriNet, Skill, Trace, Transition};
use crate::petri::{CompiledNet, DenseMarking, DEFAULT_STATE_LIMIT};

use super::ConformanceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    Sync,
    Log,
    Model,
    ModelSilent,
}

impl MoveKind {
    pub fn cost(self) -> u32 {
        match self {
            MoveKind::Sync | MoveKind::ModelSilent => 0,
            MoveKind::Log | MoveKind::Model => 1,
        }
    }
}

/// Typing of one product transition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProductMove {
    pub kind: MoveKind,
    pub action: Option<Action>,
    /// Trace position consumed by log and sync moves.
    pub trace_position: Option<usize>,
}

/// Product of a trace (as a sequence net) and a model net.
///
/// `moves[i]` types `net.transitions[i]`. The first `trace.len() + 1` places
/// are the trace positions; model places follow, prefixed with `model:`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncProduct {
    pub net: PetriNet,
    pub moves: Vec<ProductMove>,
}

impl SyncProduct {
    pub fn count(&self, kind: MoveKind) -> usize {
        self.moves.iter().filter(|m| m.kind == kind).count()
    }
}

pub fn synchronous_product(trace: &Trace, net: &PetriNet) -> Result<SyncProduct, ConformanceError> {
    let model = CompiledNet::new(net)?;
    Ok(build_product(trace, net, &model))
}

fn build_product(trace: &Trace, net: &PetriNet, model: &CompiledNet) -> SyncProduct {
    let n = trace.len();
    let trace_place = |i: usize| format!("trace:{i}");
    let model_place = |p: &str| format!("model:{p}");
    let mut places: Vec<String> = (0..=n).map(trace_place).collect();
    places.extend(net.places.iter().map(|p| model_place(p)));

    let mut transitions = Vec::new();
    let mut arcs = Vec::new();
    let mut moves = Vec::new();
    let model_arcs = |tid: String, t: usize, arcs: &mut Vec<NetArc>| {
        let tr = &model.transitions()[t];
        for &(p, w) in &tr.inputs {
            for _ in 0..w {
                arcs.push(NetArc::new(model_place(&model.places()[p]), tid.clone()));
            }
        }
        for &(p, w) in &tr.outputs {
            for _ in 0..w {
                arcs.push(NetArc::new(tid.clone(), model_place(&model.places()[p])));
            }
        }
    };

    // Sync moves first so that ties in the search prefer them.
    for (i, a) in trace.actions.iter().enumerate() {
        for (t, tr) in model.transitions().iter().enumerate() {
            if tr.label.as_ref() == Some(a) {
                let id = format!("sync:{i}:{}", tr.id);
                arcs.push(NetArc::new(trace_place(i), id.clone()));
                arcs.push(NetArc::new(id.clone(), trace_place(i + 1)));
                model_arcs(id.clone(), t, &mut arcs);
                transitions.push(Transition::visible(id, a.clone()));
                moves.push(ProductMove {
                    kind: MoveKind::Sync,
                    action: Some(a.clone()),
                    trace_position: Some(i),
                });
            }
        }
    }
    for (t, tr) in model.transitions().iter().enumerate() {
        let id = format!("model:{}", tr.id);
        model_arcs(id.clone(), t, &mut arcs);
        transitions.push(Transition {
            id,
            label: tr.label.clone(),
        });
        moves.push(ProductMove {
            kind: if tr.is_silent() {
                MoveKind::ModelSilent
            } else {
                MoveKind::Model
            },
            action: tr.label.clone(),
            trace_position: None,
        });
    }
    for (i, a) in trace.actions.iter().enumerate() {
        let id = format!("log:{i}");
        arcs.push(NetArc::new(trace_place(i), id.clone()));
        arcs.push(NetArc::new(id.clone(), trace_place(i + 1)));
        transitions.push(Transition::visible(id, a.clone()));
        moves.push(ProductMove {
            kind: MoveKind::Log,
            action: Some(a.clone()),
            trace_position: Some(i),
        });
    }

    let mut initial = Marking::single(trace_place(0));
    for (p, c) in net.initial_marking.iter() {
        initial.add(model_place(p), c);
    }
    let mut fin = Marking::single(trace_place(n));
    for (p, c) in net.final_marking.iter() {
        fin.add(model_place(p), c);
    }
    SyncProduct {
        net: PetriNet {
            places,
            transitions,
            arcs,
            initial_marking: initial,
            final_marking: fin,
        },
        moves,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Sync(usize),
    Model(usize),
    Silent(usize),
    Log,
}

impl Step {
    fn kind(self) -> MoveKind {
        match self {
            Step::Sync(_) => MoveKind::Sync,
            Step::Model(_) => MoveKind::Model,
            Step::Silent(_) => MoveKind::ModelSilent,
            Step::Log => MoveKind::Log,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Heuristic {
    /// Plain uniform-cost search.
    #[default]
    Zero,
    /// Counts remaining trace events whose label no model transition carries;
    /// each of them forces one log move.
    UnmatchableEvents,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignmentOptions {
    pub heuristic: Heuristic,
    pub state_limit: usize,
}

impl Default for AlignmentOptions {
    fn default() -> Self {
        Self {
            heuristic: Heuristic::Zero,
            state_limit: DEFAULT_STATE_LIMIT,
        }
    }
}

/// Computes optimal alignments of traces against one model net.
///
/// Searches the synchronous product implicitly, over pairs of trace position
/// and model marking, reusing the compiled model and its shortest visible
/// path across traces.
#[derive(Debug, Clone)]
pub struct Aligner {
    model: CompiledNet,
    shortest_path: u32,
    alphabet: HashSet<Action>,
    options: AlignmentOptions,
}

impl Aligner {
    pub fn new(net: &PetriNet) -> Result<Self, ConformanceError> {
        Self::with_options(net, AlignmentOptions::default())
    }

    pub fn with_options(
        net: &PetriNet,
        options: AlignmentOptions,
    ) -> Result<Self, ConformanceError> {
        let model = CompiledNet::new(net)?;
        let shortest_path = model.shortest_visible_path(options.state_limit)?;
        let alphabet = net.alphabet().into_iter().collect();
        Ok(Self {
            model,
            shortest_path,
            alphabet,
            options,
        })
    }

    pub fn shortest_model_path(&self) -> u32 {
        self.shortest_path
    }

    pub fn align(&self, trace: &Trace) -> Result<Alignment, ConformanceError> {
        let n = trace.len();
        let model = &self.model;
        let mut unmatchable_suffix = vec![0u32; n + 1];
        if self.options.heuristic == Heuristic::UnmatchableEvents {
            for i in (0..n).rev() {
                unmatchable_suffix[i] = unmatchable_suffix[i + 1]
                    + u32::from(!self.alphabet.contains(&trace.actions[i]));
            }
        }

        // State key: trace position followed by the model marking.
        let key = |pos: usize, m: &[u32]| -> Vec<u32> {
            let mut k = Vec::with_capacity(m.len() + 1);
            k.push(pos as u32);
            k.extend_from_slice(m);
            k
        };
        struct Node {
            key: Vec<u32>,
            cost: u32,
            logs: u32,
            parent: Option<(usize, Step)>,
        }
        let mut nodes: Vec<Node> = Vec::new();
        let mut best: HashMap<Vec<u32>, usize> = HashMap::new();
        // (f, log moves, insertion order, node)
        let mut open: BinaryHeap<Reverse<(u32, u32, usize, usize)>> = BinaryHeap::new();
        let start = key(0, model.initial());
        let goal = key(n, model.final_marking());
        nodes.push(Node {
            key: start.clone(),
            cost: 0,
            logs: 0,
            parent: None,
        });
        best.insert(start, 0);
        open.push(Reverse((unmatchable_suffix[0], 0, 0, 0)));
        let mut counter = 1usize;
        let mut succ: Vec<(Step, usize, DenseMarking)> = Vec::new();

        let found = loop {
            let Some(Reverse((_, _, _, idx))) = open.pop() else {
                return Err(ConformanceError::FinalUnreachable);
            };
            if best.get(&nodes[idx].key) != Some(&idx) {
                continue;
            }
            if nodes[idx].key == goal {
                break idx;
            }
            let pos = nodes[idx].key[0] as usize;
            let marking = nodes[idx].key[1..].to_vec();
            succ.clear();
            let enabled = model.enabled(&marking);
            if pos < n {
                for &t in &enabled {
                    if model.transitions()[t].label.as_ref() == Some(&trace.actions[pos]) {
                        succ.push((Step::Sync(t), pos + 1, model.fire_unchecked(&marking, t)));
                    }
                }
            }
            for &t in &enabled {
                let step = if model.transitions()[t].is_silent() {
                    Step::Silent(t)
                } else {
                    Step::Model(t)
                };
                succ.push((step, pos, model.fire_unchecked(&marking, t)));
            }
            if pos < n {
                succ.push((Step::Log, pos + 1, marking.clone()));
            }
            for (step, npos, next) in succ.drain(..) {
                let cost = nodes[idx].cost + step.kind().cost();
                let logs = nodes[idx].logs + u32::from(step == Step::Log);
                let k = key(npos, &next);
                let known = best.get(&k).copied();
                if let Some(j) = known {
                    if (cost, logs) >= (nodes[j].cost, nodes[j].logs) {
                        continue;
                    }
                } else if best.len() >= self.options.state_limit {
                    return Err(ConformanceError::StateLimit(self.options.state_limit));
                }
                nodes.push(Node {
                    key: k.clone(),
                    cost,
                    logs,
                    parent: Some((idx, step)),
                });
                let j = nodes.len() - 1;
                best.insert(k, j);
                open.push(Reverse((cost + unmatchable_suffix[npos], logs, counter, j)));
                counter += 1;
            }
        };

        let mut moves = Vec::new();
        let mut cur = found;
        while let Some((prev, step)) = nodes[cur].parent {
            let pos = nodes[prev].key[0] as usize;
            let label = |t: usize| {
                model.transitions()[t]
                    .label
                    .clone()
                    .expect("visible transition")
            };
            moves.push(match step {
                Step::Sync(t) => Move::Sync(label(t)),
                Step::Model(t) => Move::Model(label(t)),
                Step::Silent(_) => Move::ModelSilent,
                Step::Log => Move::Log(trace.actions[pos].clone()),
            });
            cur = prev;
        }
        moves.reverse();
        let cost = nodes[found].cost;
        Ok(Alignment {
            moves,
            cost: f64::from(cost),
            fitness: self.fitness(cost, n),
        })
    }

    fn fitness(&self, cost: u32, trace_len: usize) -> f64 {
        let worst = trace_len as f64 + f64::from(self.shortest_path);
        if worst == 0.0 {
            return 1.0;
        }
        (1.0 - f64::from(cost) / worst).clamp(0.0, 1.0)
    }
}

/// Minimum-cost alignment of `trace` against `net`, with
/// `fitness = 1 - cost / (|trace| + shortest model path)`.
pub fn optimal_alignment(trace: &Trace, net: &PetriNet) -> Result<Alignment, ConformanceError> {
    Aligner::new(net)?.align(trace)
}

pub fn alignment_fitness(trace: &Trace, skill: &Skill) -> Result<f64, ConformanceError> {
    Ok(optimal_alignment(trace, &skill.net)?.fitness)
}
