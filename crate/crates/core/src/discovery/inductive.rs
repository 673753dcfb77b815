//! Noise-free inductive miner over directly-follows graphs.
//!
//! Each recursion step first handles the base cases (empty traces, a single
//! activity), then tries the exclusive-choice, sequence, parallel and loop
//! cuts in that order. When no cut applies, a strict tau-loop split is tried
//! and finally the flower model is returned. Every input trace is in the
//! language of the result when no frequency filtering is applied.

use petgraph::unionfind::UnionFind;

use crate::model::{Action, EventLog, ProcessTree, Provenance, Skill};

use super::{DirectlyFollowsGraph, DiscoveryError};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiscoveryOptions {
    /// Directly-follows edges with a count below this fraction of the most
    /// frequent edge are ignored during cut detection. `0.0` disables filtering.
    pub edge_frequency_threshold: f64,
}

pub fn discover(log: &EventLog) -> Result<ProcessTree, DiscoveryError> {
    discover_with(log, &DiscoveryOptions::default())
}

pub fn discover_with(
    log: &EventLog,
    options: &DiscoveryOptions,
) -> Result<ProcessTree, DiscoveryError> {
    if log.traces.is_empty() {
        return Err(DiscoveryError::EmptyLog(log.process_id.clone()));
    }
    let traces: Vec<Vec<Action>> = log.traces.iter().map(|t| t.actions.clone()).collect();
    Ok(mine(traces, options))
}

pub fn discover_skill(log: &EventLog) -> Result<Skill, DiscoveryError> {
    discover_skill_with(log, &DiscoveryOptions::default())
}

pub fn discover_skill_with(
    log: &EventLog,
    options: &DiscoveryOptions,
) -> Result<Skill, DiscoveryError> {
    let tree = discover_with(log, options)?;
    let provenance = Provenance {
        num_cases: log.traces.len(),
        num_variants: log.num_variants(),
    };
    Ok(Skill::from_tree(
        log.process_id.clone(),
        tree,
        log.query_texts.clone(),
        provenance,
    )?)
}

/// `LOOP(TAU, XOR(a1, ..., an))`: accepts every sequence over the alphabet.
pub fn flower_model(alphabet: &[Action]) -> ProcessTree {
    let mut leaves: Vec<Action> = alphabet.to_vec();
    leaves.sort();
    leaves.dedup();
    let redo = match leaves.len() {
        0 => ProcessTree::Tau,
        1 => ProcessTree::Leaf(leaves.pop().expect("one leaf")),
        _ => ProcessTree::Xor(leaves.into_iter().map(ProcessTree::Leaf).collect()),
    };
    ProcessTree::looped(ProcessTree::Tau, redo)
}

type Log = Vec<Vec<Action>>;

fn mine(traces: Log, options: &DiscoveryOptions) -> ProcessTree {
    if traces.iter().all(Vec::is_empty) {
        return ProcessTree::Tau;
    }
    if traces.iter().any(Vec::is_empty) {
        let rest: Log = traces.into_iter().filter(|t| !t.is_empty()).collect();
        return combine(Kind::Xor, vec![ProcessTree::Tau, mine(rest, options)]);
    }

    let dfg = DirectlyFollowsGraph::from_sequences(traces.iter().map(Vec::as_slice));
    let alphabet: Vec<Action> = dfg.nodes.iter().cloned().collect();
    if alphabet.len() == 1 {
        let leaf = ProcessTree::Leaf(alphabet[0].clone());
        return if traces.iter().all(|t| t.len() == 1) {
            leaf
        } else {
            ProcessTree::looped(leaf, ProcessTree::Tau)
        };
    }

    let g = Graph::new(&dfg, &alphabet, options.edge_frequency_threshold);

    if let Some(groups) = g.xor_cut() {
        let sublogs = split_exclusive(&traces, &g, &groups);
        let children = sublogs.into_iter().map(|l| mine(l, options)).collect();
        return combine(Kind::Xor, children);
    }
    if let Some(groups) = g.sequence_cut() {
        let sublogs = project(&traces, &g, &groups);
        let children = sublogs.into_iter().map(|l| mine(l, options)).collect();
        return combine(Kind::Seq, children);
    }
    if let Some(groups) = g.parallel_cut() {
        let sublogs = project(&traces, &g, &groups);
        let children = sublogs.into_iter().map(|l| mine(l, options)).collect();
        return combine(Kind::And, children);
    }
    if let Some(body) = g.loop_cut() {
        let (body_log, redo_log) = split_loop(&traces, &g, &body);
        return ProcessTree::looped(mine(body_log, options), mine(redo_log, options));
    }
    if let Some(split) = tau_loop_split(&traces, &g) {
        return ProcessTree::looped(mine(split, options), ProcessTree::Tau);
    }
    flower_model(&alphabet)
}

#[derive(Clone, Copy)]
enum Kind {
    Seq,
    Xor,
    And,
}

/// Builds an n-ary node, inlining children of the same operator.
fn combine(kind: Kind, children: Vec<ProcessTree>) -> ProcessTree {
    let mut flat = Vec::with_capacity(children.len());
    for c in children {
        match (kind, c) {
            (Kind::Seq, ProcessTree::Seq(cs))
            | (Kind::Xor, ProcessTree::Xor(cs))
            | (Kind::And, ProcessTree::And(cs)) => flat.extend(cs),
            (_, c) => flat.push(c),
        }
    }
    if flat.len() == 1 {
        return flat.pop().expect("one child");
    }
    match kind {
        Kind::Seq => ProcessTree::Seq(flat),
        Kind::Xor => ProcessTree::Xor(flat),
        Kind::And => ProcessTree::And(flat),
    }
}

/// Dense view of a DFG over a sorted alphabet.
struct Graph<'a> {
    alphabet: &'a [Action],
    edge: Vec<Vec<bool>>,
    start: Vec<bool>,
    end: Vec<bool>,
}

impl<'a> Graph<'a> {
    fn new(dfg: &DirectlyFollowsGraph, alphabet: &'a [Action], threshold: f64) -> Self {
        let n = alphabet.len();
        let max = dfg.edges.values().copied().max().unwrap_or(0) as f64;
        let cutoff = threshold.max(0.0) * max;
        let mut edge = vec![vec![false; n]; n];
        for ((a, b), &count) in &dfg.edges {
            if (count as f64) < cutoff {
                continue;
            }
            let i = alphabet
                .binary_search(a)
                .expect("edge endpoint in alphabet");
            let j = alphabet
                .binary_search(b)
                .expect("edge endpoint in alphabet");
            edge[i][j] = true;
        }
        let start = alphabet
            .iter()
            .map(|a| dfg.start_activities.contains_key(a))
            .collect();
        let end = alphabet
            .iter()
            .map(|a| dfg.end_activities.contains_key(a))
            .collect();
        Self {
            alphabet,
            edge,
            start,
            end,
        }
    }

    fn n(&self) -> usize {
        self.alphabet.len()
    }

    fn index(&self, a: &Action) -> usize {
        self.alphabet.binary_search(a).expect("action in alphabet")
    }

    /// Groups of a union-find partition, each sorted and ordered by smallest member.
    fn groups(&self, uf: &mut UnionFind<usize>, members: &[usize]) -> Vec<Vec<usize>> {
        let mut by_root: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for &i in members {
            by_root.entry(uf.find_mut(i)).or_default().push(i);
        }
        let mut groups: Vec<Vec<usize>> = by_root.into_values().collect();
        groups.iter_mut().for_each(|g| g.sort_unstable());
        groups.sort_by_key(|g| g[0]);
        groups
    }

    fn all(&self) -> Vec<usize> {
        (0..self.n()).collect()
    }

    fn xor_cut(&self) -> Option<Vec<Vec<usize>>> {
        let n = self.n();
        let mut uf = UnionFind::new(n);
        for i in 0..n {
            for j in 0..n {
                if self.edge[i][j] {
                    uf.union(i, j);
                }
            }
        }
        let groups = self.groups(&mut uf, &self.all());
        (groups.len() > 1).then_some(groups)
    }

    fn reachability(&self) -> Vec<Vec<bool>> {
        let n = self.n();
        let mut reach = self.edge.clone();
        for k in 0..n {
            for i in 0..n {
                if reach[i][k] {
                    for j in 0..n {
                        if reach[k][j] {
                            reach[i][j] = true;
                        }
                    }
                }
            }
        }
        reach
    }

    fn sequence_cut(&self) -> Option<Vec<Vec<usize>>> {
        let n = self.n();
        let reach = self.reachability();
        let mut uf = UnionFind::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                if reach[i][j] == reach[j][i] {
                    uf.union(i, j);
                }
            }
        }
        let mut groups = self.groups(&mut uf, &self.all());
        if groups.len() < 2 {
            return None;
        }
        let reaches = |x: &[usize], y: &[usize]| x.iter().any(|&a| y.iter().any(|&b| reach[a][b]));
        let rank = |g: &Vec<usize>, groups: &[Vec<usize>]| {
            groups.iter().filter(|o| *o != g && reaches(o, g)).count()
        };
        let keys: Vec<usize> = groups.iter().map(|g| rank(g, &groups)).collect();
        let mut order: Vec<usize> = (0..groups.len()).collect();
        order.sort_by_key(|&i| (keys[i], groups[i][0]));
        groups = order.into_iter().map(|i| groups[i].clone()).collect();
        for (x, gx) in groups.iter().enumerate() {
            for gy in &groups[x + 1..] {
                for &a in gx {
                    for &b in gy {
                        if !reach[a][b] || reach[b][a] {
                            return None;
                        }
                    }
                }
            }
        }
        Some(groups)
    }

    fn parallel_cut(&self) -> Option<Vec<Vec<usize>>> {
        let n = self.n();
        let mut uf = UnionFind::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                if !(self.edge[i][j] && self.edge[j][i]) {
                    uf.union(i, j);
                }
            }
        }
        let groups = self.groups(&mut uf, &self.all());
        if groups.len() < 2 {
            return None;
        }
        let complete =
            |g: &Vec<usize>| g.iter().any(|&i| self.start[i]) && g.iter().any(|&i| self.end[i]);
        let (mut good, bad): (Vec<Vec<usize>>, Vec<Vec<usize>>) =
            groups.into_iter().partition(complete);
        if good.len() < 2 {
            return None;
        }
        for g in bad {
            good[0].extend(g);
        }
        good.iter_mut().for_each(|g| g.sort_unstable());
        good.sort_by_key(|g| g[0]);
        Some(good)
    }

    /// Returns the body membership vector when a loop cut exists.
    fn loop_cut(&self) -> Option<Vec<bool>> {
        let n = self.n();
        let mut body: Vec<bool> = (0..n).map(|i| self.start[i] || self.end[i]).collect();
        let rest: Vec<usize> = (0..n).filter(|&i| !body[i]).collect();
        if rest.is_empty() {
            return None;
        }
        let mut uf = UnionFind::new(n);
        for &i in &rest {
            for &j in &rest {
                if self.edge[i][j] {
                    uf.union(i, j);
                }
            }
        }
        let starts: Vec<usize> = (0..n).filter(|&i| self.start[i]).collect();
        let ends: Vec<usize> = (0..n).filter(|&i| self.end[i]).collect();
        let mut any_redo = false;
        for component in self.groups(&mut uf, &rest) {
            let mut ok = true;
            for &a in &component {
                for b in 0..n {
                    if !body[b] {
                        continue;
                    }
                    // redo -> body only into start activities
                    if self.edge[a][b] && !self.start[b] {
                        ok = false;
                    }
                    // body -> redo only out of end activities
                    if self.edge[b][a] && !self.end[b] {
                        ok = false;
                    }
                }
                let from_ends = ends.iter().filter(|&&e| self.edge[e][a]).count();
                if from_ends > 0 && from_ends < ends.len() {
                    ok = false;
                }
                let to_starts = starts.iter().filter(|&&s| self.edge[a][s]).count();
                if to_starts > 0 && to_starts < starts.len() {
                    ok = false;
                }
            }
            if ok {
                any_redo = true;
            } else {
                for &a in &component {
                    body[a] = true;
                }
            }
        }
        any_redo.then_some(body)
    }
}

fn split_exclusive(traces: &Log, g: &Graph, groups: &[Vec<usize>]) -> Vec<Log> {
    let mut member = vec![0usize; g.n()];
    for (gi, grp) in groups.iter().enumerate() {
        for &a in grp {
            member[a] = gi;
        }
    }
    let mut out = vec![Log::new(); groups.len()];
    for t in traces {
        let mut counts = vec![0usize; groups.len()];
        for a in t {
            counts[member[g.index(a)]] += 1;
        }
        // Without filtering every trace lies in exactly one group.
        let best = (0..groups.len())
            .max_by_key(|&i| (counts[i], std::cmp::Reverse(i)))
            .unwrap_or(0);
        out[best].push(
            t.iter()
                .filter(|a| member[g.index(a)] == best)
                .cloned()
                .collect(),
        );
    }
    out
}

fn project(traces: &Log, g: &Graph, groups: &[Vec<usize>]) -> Vec<Log> {
    let mut member = vec![0usize; g.n()];
    for (gi, grp) in groups.iter().enumerate() {
        for &a in grp {
            member[a] = gi;
        }
    }
    let mut out = vec![Log::new(); groups.len()];
    for t in traces {
        for (gi, sub) in out.iter_mut().enumerate() {
            sub.push(
                t.iter()
                    .filter(|a| member[g.index(a)] == gi)
                    .cloned()
                    .collect(),
            );
        }
    }
    out
}

fn split_loop(traces: &Log, g: &Graph, body: &[bool]) -> (Log, Log) {
    let mut body_log = Log::new();
    let mut redo_log = Log::new();
    for t in traces {
        let mut current: Vec<Action> = Vec::new();
        let mut in_body = true;
        for a in t {
            let b = body[g.index(a)];
            if b != in_body && !current.is_empty() {
                let seg = std::mem::take(&mut current);
                if in_body {
                    body_log.push(seg);
                } else {
                    redo_log.push(seg);
                }
            }
            in_body = b;
            current.push(a.clone());
        }
        if !current.is_empty() {
            if in_body {
                body_log.push(current);
            } else {
                redo_log.push(current);
            }
        }
    }
    (body_log, redo_log)
}

/// Splits traces wherever an end activity is directly followed by a start
/// activity. Returns `None` when no trace is split.
fn tau_loop_split(traces: &Log, g: &Graph) -> Option<Log> {
    let mut out = Log::new();
    let mut split_any = false;
    for t in traces {
        let mut current = Vec::new();
        for (i, a) in t.iter().enumerate() {
            current.push(a.clone());
            if let Some(next) = t.get(i + 1) {
                if g.end[g.index(a)] && g.start[g.index(next)] {
                    out.push(std::mem::take(&mut current));
                    split_any = true;
                }
            }
        }
        out.push(current);
    }
    split_any.then_some(out)
}
