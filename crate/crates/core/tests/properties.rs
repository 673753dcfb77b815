mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{
    all_traces, bounded_language, names, random_block_tree, random_tree, AlignmentOracle,
};
use skillmine::conformance::{token_replay, Aligner};
use skillmine::discovery::discover_skill;
use skillmine::evaluation::{f1_score, macro_f1, mrr, RetrievalTrial};
use skillmine::gateway::{embed, HashEmbedder};
use skillmine::ingestion::{load_library, save_library};
use skillmine::model::{EventLog, ProcessTree, Trace};
use skillmine::petri::{dag_to_petri, tree_to_petri, visible_language, DagEdge, DagModel, DagNode};
use skillmine::retrieval::{
    embed_library, retrieve_by_conformance, EmbeddingSource, RankedEntry, RankedSkillList,
    RetrievalMethod,
};
use skillmine::scheduler::{
    critical_path_length, sequential_length, simulate_parallel_execution, speedup,
};
use skillmine::synth::synthetic_suite;

const ABCD: [&str; 4] = ["A", "B", "C", "D"];

fn tree_from(seed: u64, depth: usize, full: bool) -> ProcessTree {
    random_tree(&mut ChaCha8Rng::seed_from_u64(seed), &ABCD, depth, 5, full)
}

fn word_set(lang: BTreeSet<Vec<skillmine::model::Action>>) -> BTreeSet<Vec<String>> {
    lang.into_iter().map(|w| names(&w)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tree_text_round_trips(seed in any::<u64>()) {
        let tree = tree_from(seed, 4, true);
        let text = tree.to_string();
        let back: ProcessTree = text.parse().unwrap();
        prop_assert_eq!(back.to_string(), text);
        prop_assert_eq!(bounded_language(&back, 6), bounded_language(&tree, 6));
    }

    #[test]
    fn net_language_matches_tree_language(seed in any::<u64>()) {
        let tree = tree_from(seed, 3, true);
        let net = tree_to_petri(&tree).unwrap();
        prop_assert_eq!(word_set(visible_language(&net, 6).unwrap()), bounded_language(&tree, 6));
    }

    #[test]
    fn dag_language_is_its_topological_orders(n in 1usize..=6, bits in any::<u32>()) {
        let nodes: Vec<DagNode> = (0..n)
            .map(|i| DagNode { id: format!("n{i}"), action: common::act(&format!("T{i}")) })
            .collect();
        let mut edges = Vec::new();
        let mut bit = 0;
        for i in 0..n {
            for j in i + 1..n {
                if bits >> (bit % 32) & 1 == 1 {
                    edges.push(DagEdge { from: format!("n{i}"), to: format!("n{j}") });
                }
                bit += 1;
            }
        }
        let dag = DagModel::new(nodes, edges.clone());
        let net = dag_to_petri(&dag).unwrap();
        let got = word_set(visible_language(&net, n).unwrap());

        let mut expected = BTreeSet::new();
        let mut perm: Vec<usize> = (0..n).collect();
        permutations(&mut perm, 0, &mut |p| {
            let pos: Vec<usize> = (0..n).map(|v| p.iter().position(|&x| x == v).unwrap()).collect();
            let ok = edges.iter().all(|e| {
                let a: usize = e.from[1..].parse().unwrap();
                let b: usize = e.to[1..].parse().unwrap();
                pos[a] < pos[b]
            });
            if ok {
                expected.insert(p.iter().map(|i| format!("T{i}")).collect::<Vec<_>>());
            }
        });
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn alignment_cost_matches_oracle(seed in any::<u64>(), trace_seed in any::<u64>()) {
        let tree = tree_from(seed, 3, true);
        let oracle = AlignmentOracle::new(&tree, 5);
        let aligner = Aligner::new(&tree_to_petri(&tree).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(trace_seed);
        for _ in 0..20 {
            let len = rand::Rng::random_range(&mut rng, 0..=5);
            let w: Vec<String> = (0..len).map(|_| ABCD[rand::Rng::random_range(&mut rng, 0..4)].to_owned()).collect();
            let a = aligner.align(&Trace::from_names("t", &w).unwrap()).unwrap();
            prop_assert_eq!(a.cost, oracle.cost(&w) as f64, "{} on {:?}", tree, w);
            prop_assert!((a.fitness - oracle.fitness(&w)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a.fitness));
        }
    }

    #[test]
    fn rediscovered_model_fits_its_log(seed in any::<u64>(), n in 2usize..=6) {
        let labels = &["A", "B", "C", "D", "E", "F"][..n];
        let tree = random_block_tree(&mut ChaCha8Rng::seed_from_u64(seed), labels, 3);
        let words = bounded_language(&tree, n);
        let traces: Vec<Trace> = words.iter().map(|w| Trace::from_names("t", w).unwrap()).collect();
        let skill = discover_skill(&EventLog::new("p", vec![], traces.clone())).unwrap();
        for t in &traces {
            prop_assert_eq!(token_replay(t, &skill.net).unwrap().fitness, 1.0);
        }
        prop_assert_eq!(bounded_language(&skill.tree, n), words);
    }

    #[test]
    fn makespan_is_critical_path(seed in any::<u64>(), duration in 1u64..=3) {
        let tree = tree_from(seed, 4, false);
        let schedule = simulate_parallel_execution(&tree_to_petri(&tree).unwrap(), duration).unwrap();
        let cp = critical_path_length(&tree);
        prop_assert_eq!(schedule.makespan, cp * duration);
        for s in &schedule.steps {
            prop_assert_eq!(s.end + 1 - s.start, duration);
            prop_assert!(s.start >= 1 && s.end <= schedule.makespan);
        }
        prop_assert_eq!(schedule.steps.iter().map(|s| s.end).max().unwrap_or(0), schedule.makespan);
        let seq = sequential_length(&tree);
        prop_assert!(cp <= seq);
        if cp > 0 {
            let s = speedup(&tree).unwrap();
            prop_assert!(s >= 1.0);
            prop_assert_eq!(s, seq as f64 / cp as f64);
        }
    }

    #[test]
    fn metric_invariants(ranks in prop::collection::vec(0usize..=4, 1..30)) {
        let pool = ["a", "b", "c", "d"];
        let trials: Vec<RetrievalTrial> = ranks
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let truth = pool[i % 4];
                let mut order: Vec<&str> = pool.iter().copied().filter(|s| *s != truth).collect();
                if r > 0 {
                    order.insert(r - 1, truth);
                }
                trial(truth, &order)
            })
            .collect();
        let f1 = f1_score(&trials).unwrap();
        let m = mrr(&trials).unwrap();
        let macro_ = macro_f1(&trials).unwrap();
        prop_assert!((0.0..=1.0).contains(&f1));
        prop_assert!((0.0..=1.0).contains(&macro_));
        prop_assert!(f1 <= m + 1e-12);
        prop_assert!((m - common::mrr_of_ranks(&ranks)).abs() < 1e-12);
        let hits = ranks.iter().filter(|&&r| r == 1).count();
        prop_assert_eq!(f1, hits as f64 / ranks.len() as f64);
    }
}

fn permutations(p: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, visit);
        p.swap(k, i);
    }
}

fn trial(truth: &str, order: &[&str]) -> RetrievalTrial {
    RetrievalTrial {
        query: truth.into(),
        language: None,
        method: "m".into(),
        true_skill_id: truth.into(),
        ranked: RankedSkillList {
            method: RetrievalMethod::Embed,
            entries: order
                .iter()
                .enumerate()
                .map(|(i, s)| RankedEntry {
                    skill_id: (*s).into(),
                    score: 1.0 / (i + 1) as f64,
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
fn oracle_reproduces_worked_example() {
    let tree: ProcessTree = "AND(SEQ('A','B'),SEQ('C','D','E','F'))".parse().unwrap();
    let oracle = AlignmentOracle::new(&tree, 6);
    let w: Vec<String> = ["E", "F", "A", "B", "C", "D"].map(String::from).to_vec();
    assert_eq!(oracle.cost(&w), 4);
    assert!((oracle.fitness(&w) - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(oracle.shortest(), 6);
}

#[test]
fn trace_enumeration_size() {
    assert_eq!(all_traces(&ABCD, 6).len(), (4usize.pow(7) - 1) / 3);
}

#[test]
fn conformance_ranking_is_deterministic_and_text_blind() {
    let suite = synthetic_suite(3);
    let mut reworded = suite.library.clone();
    for s in reworded.iter_mut() {
        s.query_texts = vec!["completely unrelated words".into()];
    }
    for q in suite.queries.iter().take(20) {
        let t = Trace::new("t", q.thought.clone().unwrap());
        let a = retrieve_by_conformance(&t, &suite.library, 5).unwrap();
        let b = retrieve_by_conformance(&t, &suite.library, 5).unwrap();
        let c = retrieve_by_conformance(&t, &reworded, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }
}

#[test]
fn library_round_trips_through_disk() {
    let suite = synthetic_suite(5);
    let lib = embed_library(
        &suite.library,
        &HashEmbedder::default(),
        EmbeddingSource::Canonical,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_library(&lib, dir.path()).unwrap();
    let back = load_library(dir.path()).unwrap();
    assert_eq!(back, lib);
    let q = embed("anything", &HashEmbedder::default()).unwrap();
    let a = skillmine::retrieval::retrieve_by_embedding(&q, &lib, 4).unwrap();
    let b = skillmine::retrieval::retrieve_by_embedding(&q, &back, 4).unwrap();
    assert_eq!(a, b);
}
