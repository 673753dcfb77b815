//! Reference implementations used as test oracles. They work directly on
//! process-tree semantics and share no code with the library's Petri net or
//! search machinery.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use skillmine::model::{Action, ProcessTree};

pub type Word = Vec<String>;

pub fn act(name: &str) -> Action {
    Action::new(name).unwrap()
}

pub fn names(actions: &[Action]) -> Word {
    actions.iter().map(|a| a.as_str().to_owned()).collect()
}

/// Every word of the tree's language with at most `max_len` actions.
pub fn bounded_language(tree: &ProcessTree, max_len: usize) -> BTreeSet<Word> {
    match tree {
        ProcessTree::Leaf(a) => {
            if max_len >= 1 {
                BTreeSet::from([vec![a.as_str().to_owned()]])
            } else {
                BTreeSet::new()
            }
        }
        ProcessTree::Tau => BTreeSet::from([Vec::new()]),
        ProcessTree::Seq(children) => {
            children
                .iter()
                .fold(BTreeSet::from([Vec::new()]), |acc, c| {
                    let lang = bounded_language(c, max_len);
                    let mut out = BTreeSet::new();
                    for x in &acc {
                        for y in &lang {
                            if x.len() + y.len() <= max_len {
                                out.insert([x.as_slice(), y.as_slice()].concat());
                            }
                        }
                    }
                    out
                })
        }
        ProcessTree::Xor(children) => children
            .iter()
            .flat_map(|c| bounded_language(c, max_len))
            .collect(),
        ProcessTree::And(children) => {
            children
                .iter()
                .fold(BTreeSet::from([Vec::new()]), |acc, c| {
                    let lang = bounded_language(c, max_len);
                    let mut out = BTreeSet::new();
                    for x in &acc {
                        for y in &lang {
                            if x.len() + y.len() <= max_len {
                                shuffles(x, y, &mut Vec::new(), &mut out);
                            }
                        }
                    }
                    out
                })
        }
        ProcessTree::Loop(body, redo) => {
            let b = bounded_language(body, max_len);
            let r = bounded_language(redo, max_len);
            let mut all = b.clone();
            let mut frontier = b.clone();
            while !frontier.is_empty() {
                let mut next = BTreeSet::new();
                for x in &frontier {
                    for y in &r {
                        for z in &b {
                            if x.len() + y.len() + z.len() <= max_len {
                                let w = [x.as_slice(), y.as_slice(), z.as_slice()].concat();
                                if all.insert(w.clone()) {
                                    next.insert(w);
                                }
                            }
                        }
                    }
                }
                frontier = next;
            }
            all
        }
    }
}

fn shuffles(x: &[String], y: &[String], prefix: &mut Word, out: &mut BTreeSet<Word>) {
    if x.is_empty() || y.is_empty() {
        let mut w = prefix.clone();
        w.extend_from_slice(x);
        w.extend_from_slice(y);
        out.insert(w);
        return;
    }
    prefix.push(x[0].clone());
    shuffles(&x[1..], y, prefix, out);
    prefix.pop();
    prefix.push(y[0].clone());
    shuffles(x, &y[1..], prefix, out);
    prefix.pop();
}

/// Length of the shortest word of the tree's language.
pub fn shortest_word(tree: &ProcessTree) -> usize {
    match tree {
        ProcessTree::Leaf(_) => 1,
        ProcessTree::Tau => 0,
        ProcessTree::Seq(c) | ProcessTree::And(c) => c.iter().map(shortest_word).sum(),
        ProcessTree::Xor(c) => c.iter().map(shortest_word).min().unwrap_or(0),
        ProcessTree::Loop(body, _) => shortest_word(body),
    }
}

/// Prefix tree over a set of words, used to share edit-distance rows between
/// words with a common prefix.
pub struct Trie {
    children: Vec<BTreeMap<String, usize>>,
    terminal: Vec<bool>,
}

impl Trie {
    pub fn new<'a>(words: impl IntoIterator<Item = &'a Word>) -> Self {
        let mut t = Self {
            children: vec![BTreeMap::new()],
            terminal: vec![false],
        };
        for w in words {
            let mut node = 0;
            for a in w {
                node = match t.children[node].get(a) {
                    Some(&n) => n,
                    None => {
                        t.children.push(BTreeMap::new());
                        t.terminal.push(false);
                        let n = t.children.len() - 1;
                        t.children[node].insert(a.clone(), n);
                        n
                    }
                };
            }
            t.terminal[node] = true;
        }
        t
    }

    /// Minimum over stored words `w` of the insert/delete edit distance
    /// between `trace` and `w`, starting from the upper bound `bound`.
    pub fn min_distance(&self, trace: &[String], bound: usize) -> usize {
        let row: Vec<usize> = (0..=trace.len()).collect();
        let mut best = bound;
        self.search(0, trace, &row, &mut best);
        best
    }

    fn search(&self, node: usize, trace: &[String], row: &[usize], best: &mut usize) {
        if self.terminal[node] {
            *best = (*best).min(row[trace.len()]);
        }
        if row.iter().copied().min().unwrap_or(0) >= *best {
            return;
        }
        for (a, &child) in &self.children[node] {
            let mut next = vec![row[0] + 1; trace.len() + 1];
            for j in 1..=trace.len() {
                let mut v = (row[j] + 1).min(next[j - 1] + 1);
                if &trace[j - 1] == a {
                    v = v.min(row[j - 1]);
                }
                next[j] = v;
            }
            self.search(child, trace, &next, best);
        }
    }
}

/// Minimal alignment cost of `trace` against `tree`: the fewest log-only and
/// model-only moves that turn the trace into some word of the language.
pub struct AlignmentOracle {
    trie: Trie,
    shortest: usize,
}

impl AlignmentOracle {
    /// Covers traces of length up to `max_trace_len`. A word longer than
    /// `2 * max_trace_len + shortest` costs more than the trivial alignment
    /// and can be skipped.
    pub fn new(tree: &ProcessTree, max_trace_len: usize) -> Self {
        let shortest = shortest_word(tree);
        let words = bounded_language(tree, 2 * max_trace_len + shortest);
        Self {
            trie: Trie::new(&words),
            shortest,
        }
    }

    pub fn cost(&self, trace: &[String]) -> usize {
        self.trie.min_distance(trace, trace.len() + self.shortest)
    }

    pub fn fitness(&self, trace: &[String]) -> f64 {
        let worst = trace.len() + self.shortest;
        if worst == 0 {
            1.0
        } else {
            1.0 - self.cost(trace) as f64 / worst as f64
        }
    }

    pub fn shortest(&self) -> usize {
        self.shortest
    }
}

/// All words over `alphabet` with length at most `max_len`.
pub fn all_traces(alphabet: &[&str], max_len: usize) -> Vec<Word> {
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Word> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w| {
                alphabet.iter().map(move |a| {
                    let mut n = w.clone();
                    n.push((*a).to_owned());
                    n
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// Random tree with at most `depth` operator levels and at most `max_leaves`
/// leaves. Labels may repeat; `TAU` and `LOOP` nodes appear when allowed.
pub fn random_tree<R: Rng>(
    rng: &mut R,
    labels: &[&str],
    depth: usize,
    max_leaves: usize,
    full: bool,
) -> ProcessTree {
    let mut budget = max_leaves;
    gen(rng, labels, depth, &mut budget, full)
}

fn gen<R: Rng>(
    rng: &mut R,
    labels: &[&str],
    depth: usize,
    budget: &mut usize,
    full: bool,
) -> ProcessTree {
    let leaf = depth == 0 || *budget <= 1 || rng.random_bool(0.25);
    if leaf {
        *budget = budget.saturating_sub(1);
        if full && rng.random_bool(0.1) {
            return ProcessTree::Tau;
        }
        return ProcessTree::Leaf(act(labels[rng.random_range(0..labels.len())]));
    }
    let op = rng.random_range(0..if full { 4 } else { 3 });
    if op == 3 {
        let body = gen(rng, labels, depth - 1, budget, full);
        let redo = if *budget == 0 {
            ProcessTree::Tau
        } else {
            gen(rng, labels, depth - 1, budget, full)
        };
        return ProcessTree::Loop(Box::new(body), Box::new(redo));
    }
    let n = rng.random_range(2..=3).min((*budget).max(2));
    let mut children = Vec::new();
    for _ in 0..n {
        if *budget == 0 {
            break;
        }
        children.push(gen(rng, labels, depth - 1, budget, full));
    }
    if children.len() < 2 {
        children.push(ProcessTree::Tau);
    }
    match op {
        0 => ProcessTree::Seq(children),
        1 => ProcessTree::Xor(children),
        _ => ProcessTree::And(children),
    }
}

/// Tree over distinct labels built from SEQ, XOR and AND only.
pub fn random_block_tree<R: Rng>(rng: &mut R, labels: &[&str], depth: usize) -> ProcessTree {
    fn build<R: Rng>(rng: &mut R, labels: &[&str], depth: usize) -> ProcessTree {
        if labels.len() == 1 {
            return ProcessTree::Leaf(act(labels[0]));
        }
        if depth == 0 {
            return ProcessTree::Seq(labels.iter().map(|l| ProcessTree::Leaf(act(l))).collect());
        }
        let parts = rng.random_range(2..=labels.len().min(3));
        let mut cuts: Vec<usize> = (1..labels.len()).collect();
        for i in (1..cuts.len()).rev() {
            cuts.swap(i, rng.random_range(0..=i));
        }
        let mut cuts: Vec<usize> = cuts.into_iter().take(parts - 1).collect();
        cuts.sort_unstable();
        let mut children = Vec::new();
        let mut start = 0;
        for c in cuts.into_iter().chain([labels.len()]) {
            children.push(build(rng, &labels[start..c], depth - 1));
            start = c;
        }
        match rng.random_range(0..3) {
            0 => ProcessTree::Seq(children),
            1 => ProcessTree::Xor(children),
            _ => ProcessTree::And(children),
        }
    }
    build(rng, labels, depth)
}

/// Mean reciprocal rank computed straight from rank positions (0 = absent).
pub fn mrr_of_ranks(ranks: &[usize]) -> f64 {
    ranks
        .iter()
        .map(|&r| if r == 0 { 0.0 } else { 1.0 / r as f64 })
        .sum::<f64>()
        / ranks.len() as f64
}
