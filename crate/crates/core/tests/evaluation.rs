use skillmine::conformance::optimal_alignment;
use skillmine::evaluation::{
    run_retrieval_experiment, sensitivity_analysis, EvalQuery, ExperimentConfig, ExperimentContext,
};
use skillmine::gateway::{noisy_planner, Embedder, HashEmbedder, ScriptedChat, NOISE_TOLERANCE};
use skillmine::model::Trace;
use skillmine::retrieval::{embed_library, EmbeddingSource};
use skillmine::synth::{collision_suite, synthetic_suite};

fn hash_ctx<'a>(
    hash: &'a HashEmbedder,
    suite: &skillmine::synth::SynthSuite,
) -> ExperimentContext<'a> {
    ExperimentContext {
        embedders: vec![("stub-hash".into(), hash as &dyn Embedder)],
        planner: None,
        catalog: suite.catalog.clone(),
    }
}

#[test]
fn filtering_noisy_thoughts_does_not_hurt_hybrid() {
    let suite = collision_suite()
        .with_noisy_thoughts(&[0.5, 0.7, 0.9], 9)
        .unwrap();
    let hash = HashEmbedder::default();
    let lib = embed_library(&suite.library, &hash, EmbeddingSource::Canonical).unwrap();
    let config = ExperimentConfig {
        methods: vec![
            "embed".parse().unwrap(),
            "conform".parse().unwrap(),
            "hybrid@3".parse().unwrap(),
        ],
        ..ExperimentConfig::default()
    };
    let report =
        run_retrieval_experiment(&lib, &suite.queries, &config, &hash_ctx(&hash, &suite)).unwrap();
    let grid = sensitivity_analysis(&report, &[0.0, 0.7]);
    let f1 = |m: &str, t: f64| grid.cell(m, t).unwrap().scores.as_ref().unwrap().f1;
    assert!(f1("hybrid@3", 0.7) >= f1("hybrid@3", 0.0));
    assert!(f1("conform", 0.7) >= f1("conform", 0.0));
    let kept = grid
        .cell("hybrid@3", 0.7)
        .unwrap()
        .scores
        .as_ref()
        .unwrap()
        .trials;
    assert!(
        kept < report
            .trials
            .iter()
            .filter(|t| t.method == "hybrid@3")
            .count()
    );
}

#[test]
fn noisy_planner_hits_its_targets() {
    let suite = synthetic_suite(7);
    for (i, q) in suite.queries.iter().take(30).enumerate() {
        let net = &suite.library.get(&q.true_skill_id).unwrap().net;
        let gt = Trace::new("gt", q.thought.clone().unwrap());
        for target in [0.0, 0.5, 0.7, 0.9, 1.0] {
            let n = noisy_planner(&gt, net, target, i as u64).unwrap();
            let measured = optimal_alignment(&n.thought.trace, net).unwrap().fitness;
            assert!((measured - n.achieved_fitness).abs() < 1e-12);
            if !n.best_effort {
                assert!(
                    (measured - target).abs() <= NOISE_TOLERANCE + 1e-12,
                    "target {target} got {measured}"
                );
            }
        }
    }
}

#[test]
fn planner_failures_are_excluded_not_fatal() {
    let suite = synthetic_suite(7);
    let hash = HashEmbedder::default();
    let lib = embed_library(&suite.library, &hash, EmbeddingSource::Canonical).unwrap();
    let queries: Vec<EvalQuery> = suite
        .queries
        .iter()
        .take(6)
        .map(|q| EvalQuery {
            thought: None,
            ..q.clone()
        })
        .collect();
    let mut chat = ScriptedChat::new();
    for q in queries.iter().take(4) {
        let t = suite
            .queries
            .iter()
            .find(|x| x.text == q.text)
            .unwrap()
            .thought
            .clone()
            .unwrap();
        let names: Vec<&str> = t.iter().map(|a| a.as_str()).collect();
        chat.insert_plan(q.text.clone(), &names);
    }
    let ctx = ExperimentContext {
        planner: Some(&chat),
        ..hash_ctx(&hash, &suite)
    };
    let report =
        run_retrieval_experiment(&lib, &queries, &ExperimentConfig::default(), &ctx).unwrap();
    let by = |m: &str| report.methods.iter().find(|s| s.method == m).unwrap();
    assert_eq!(by("embed").excluded, 0);
    assert_eq!(by("embed").scores.as_ref().unwrap().trials, 6);
    assert_eq!(by("conform").excluded, 2);
    assert_eq!(by("conform").scores.as_ref().unwrap().trials, 4);
    assert_eq!(
        report
            .failures
            .iter()
            .filter(|f| f.method == "conform")
            .count(),
        2
    );
}

#[test]
fn per_language_scores_partition_the_trials() {
    let suite = synthetic_suite(7);
    let hash = HashEmbedder::default();
    let lib = embed_library(&suite.library, &hash, EmbeddingSource::Canonical).unwrap();
    let report = run_retrieval_experiment(
        &lib,
        &suite.queries,
        &ExperimentConfig::default(),
        &hash_ctx(&hash, &suite),
    )
    .unwrap();
    for m in &report.methods {
        let total: usize = m.per_language.values().map(|s| s.trials).sum();
        assert_eq!(total, m.scores.as_ref().unwrap().trials);
        assert_eq!(
            m.per_language.keys().cloned().collect::<Vec<_>>(),
            ["da", "en", "fr"]
        );
    }
}
