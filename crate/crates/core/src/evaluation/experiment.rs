use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformance::{optimal_alignment, token_replay};
use crate::gateway::{embed, generate_thought, ChatClient, Embedder, ToolCatalog};
use crate::model::{Action, SkillLibrary, Trace};
use crate::retrieval::{
    embed_library, is_embedded_with, retrieve_by_conformance, retrieve_by_embedding,
    retrieve_hybrid, EmbeddingSource, DEFAULT_K_FIRST,
};

use super::{EvalError, RetrievalTrial, Scores};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalQuery {
    pub text: String,
    pub true_skill_id: String,
    #[serde(default)]
    pub language: Option<String>,
    /// Plan to use instead of asking the planner.
    #[serde(default)]
    pub thought: Option<Vec<Action>>,
}

/// A retrieval method. `embedder` names an entry of the experiment context;
/// `None` selects the first one.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MethodSpec {
    Embed {
        embedder: Option<String>,
    },
    Conform,
    Hybrid {
        embedder: Option<String>,
        k_first: usize,
    },
}

impl MethodSpec {
    pub fn needs_thought(&self) -> bool {
        !matches!(self, MethodSpec::Embed { .. })
    }

    pub fn embedder(&self) -> Option<Option<&str>> {
        match self {
            MethodSpec::Embed { embedder } | MethodSpec::Hybrid { embedder, .. } => {
                Some(embedder.as_deref())
            }
            MethodSpec::Conform => None,
        }
    }

    pub fn k_first(&self) -> Option<usize> {
        match self {
            MethodSpec::Hybrid { k_first, .. } => Some(*k_first),
            _ => None,
        }
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let named = |base: &str, e: &Option<String>| match e {
            Some(e) => format!("{base}:{e}"),
            None => base.to_owned(),
        };
        match self {
            MethodSpec::Embed { embedder } => f.write_str(&named("embed", embedder)),
            MethodSpec::Conform => f.write_str("conform"),
            MethodSpec::Hybrid { embedder, k_first } => {
                write!(f, "{}@{k_first}", named("hybrid", embedder))
            }
        }
    }
}

/// Accepts `embed`, `embed:NAME`, `conform`, `hybrid`, `hybrid@K`,
/// `hybrid:NAME` and `hybrid:NAME@K`.
impl FromStr for MethodSpec {
    type Err = EvalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (head, k) = match s.split_once('@') {
            Some((h, k)) => (
                h,
                Some(
                    k.parse::<usize>()
                        .map_err(|_| EvalError::UnknownMethod(s.into()))?,
                ),
            ),
            None => (s, None),
        };
        let (base, embedder) = match head.split_once(':') {
            Some((b, e)) if !e.is_empty() => (b, Some(e.to_owned())),
            Some(_) => return Err(EvalError::UnknownMethod(s.into())),
            None => (head, None),
        };
        match (base, k) {
            ("embed", None) => Ok(MethodSpec::Embed { embedder }),
            ("conform", None) if embedder.is_none() => Ok(MethodSpec::Conform),
            ("hybrid", k) if k != Some(0) => Ok(MethodSpec::Hybrid {
                embedder,
                k_first: k.unwrap_or(DEFAULT_K_FIRST),
            }),
            _ => Err(EvalError::UnknownMethod(s.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub methods: Vec<MethodSpec>,
    /// Length of each ranked list; the whole library when `None`.
    pub k: Option<usize>,
    pub embedding_source: EmbeddingSource,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            methods: vec![
                MethodSpec::Embed { embedder: None },
                MethodSpec::Conform,
                MethodSpec::Hybrid {
                    embedder: None,
                    k_first: DEFAULT_K_FIRST,
                },
            ],
            k: None,
            embedding_source: EmbeddingSource::Canonical,
        }
    }
}

/// Services an experiment may call.
pub struct ExperimentContext<'a> {
    pub embedders: Vec<(String, &'a dyn Embedder)>,
    pub planner: Option<&'a dyn ChatClient>,
    pub catalog: ToolCatalog,
}

impl ExperimentContext<'_> {
    fn embedder(&self, name: Option<&str>) -> Result<(&str, &dyn Embedder), EvalError> {
        match name {
            None => self
                .embedders
                .first()
                .map(|(n, e)| (n.as_str(), *e))
                .ok_or_else(|| EvalError::UnknownEmbedder("<default>".into())),
            Some(name) => self
                .embedders
                .iter()
                .find(|(n, e)| n == name || e.model_tag() == name)
                .map(|(n, e)| (n.as_str(), *e))
                .ok_or_else(|| EvalError::UnknownEmbedder(name.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub query: String,
    pub method: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub scores: Option<Scores>,
    pub excluded: usize,
    pub per_language: BTreeMap<String, Scores>,
}

impl MethodSummary {
    pub(crate) fn from_trials(method: String, trials: &[&RetrievalTrial], excluded: usize) -> Self {
        let owned: Vec<RetrievalTrial> = trials.iter().map(|t| (*t).clone()).collect();
        let mut by_lang: BTreeMap<String, Vec<RetrievalTrial>> = BTreeMap::new();
        for t in &owned {
            if let Some(l) = &t.language {
                by_lang.entry(l.clone()).or_default().push(t.clone());
            }
        }
        Self {
            method,
            scores: Scores::of(&owned).ok(),
            excluded,
            per_language: by_lang
                .into_iter()
                .filter_map(|(l, ts)| Scores::of(&ts).ok().map(|s| (l, s)))
                .collect(),
        }
    }
}

/// Fitness of the thoughts against their true skills, by both metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThoughtStats {
    pub thoughts: usize,
    pub mean_alignment_fitness: f64,
    pub mean_replay_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub methods: Vec<MethodSummary>,
    pub trials: Vec<RetrievalTrial>,
    pub failures: Vec<TrialFailure>,
    pub thought_stats: Option<ThoughtStats>,
}

struct Prepared {
    thought: Option<Result<Trace, String>>,
    alignment_fitness: Option<f64>,
    replay_fitness: Option<f64>,
}

/// Runs every query through every method. Per-query failures are recorded and
/// excluded from the scores of the method they occurred in.
pub fn run_retrieval_experiment(
    library: &SkillLibrary,
    queries: &[EvalQuery],
    config: &ExperimentConfig,
    ctx: &ExperimentContext<'_>,
) -> Result<ExperimentReport, EvalError> {
    if queries.is_empty() {
        return Err(EvalError::NoQueries);
    }
    if config.methods.is_empty() {
        return Err(EvalError::NoMethods);
    }
    if library.is_empty() {
        return Err(EvalError::Setup("library is empty".into()));
    }
    for q in queries {
        if !library.contains(&q.true_skill_id) {
            return Err(EvalError::UnknownSkill(q.true_skill_id.clone()));
        }
    }
    let k = config.k.unwrap_or(library.len()).max(1);

    let mut embedded: BTreeMap<String, SkillLibrary> = BTreeMap::new();
    for m in &config.methods {
        if let Some(name) = m.embedder() {
            let (key, e) = ctx.embedder(name)?;
            if !embedded.contains_key(key) {
                let lib = if is_embedded_with(library, e.model_tag()) {
                    library.clone()
                } else {
                    embed_library(library, e, config.embedding_source)
                        .map_err(|e| EvalError::Setup(e.to_string()))?
                };
                embedded.insert(key.to_owned(), lib);
            }
        }
    }
    let needs_thought = config.methods.iter().any(MethodSpec::needs_thought);

    let per_query: Vec<(Prepared, Vec<Result<RetrievalTrial, TrialFailure>>)> = queries
        .par_iter()
        .map(|q| {
            let thought = q
                .thought
                .as_ref()
                .map(|a| Ok(Trace::new(format!("thought:{}", q.text), a.clone())))
                .or_else(|| {
                    (needs_thought).then(|| match ctx.planner {
                        Some(p) => generate_thought(&q.text, &ctx.catalog, p)
                            .map(|t| t.trace)
                            .map_err(|e| e.to_string()),
                        None => Err("no planner configured".to_owned()),
                    })
                });
            let truth = library.get(&q.true_skill_id).expect("checked above");
            let (alignment_fitness, replay_fitness) = match &thought {
                Some(Ok(t)) => (
                    optimal_alignment(t, &truth.net).ok().map(|a| a.fitness),
                    token_replay(t, &truth.net).ok().map(|r| r.fitness),
                ),
                _ => (None, None),
            };
            let prepared = Prepared {
                thought,
                alignment_fitness,
                replay_fitness,
            };
            let results = config
                .methods
                .iter()
                .map(|m| run_one(q, m, &prepared, &embedded, ctx, library, k))
                .collect();
            (prepared, results)
        })
        .collect();

    let mut trials = Vec::new();
    let mut failures = Vec::new();
    let mut fitness = Vec::new();
    for (prepared, results) in per_query {
        if let (Some(a), Some(r)) = (prepared.alignment_fitness, prepared.replay_fitness) {
            fitness.push((a, r));
        }
        for r in results {
            match r {
                Ok(t) => trials.push(t),
                Err(f) => failures.push(f),
            }
        }
    }
    let methods = config
        .methods
        .iter()
        .map(|m| {
            let label = m.to_string();
            let ts: Vec<&RetrievalTrial> = trials.iter().filter(|t| t.method == label).collect();
            let excluded = failures.iter().filter(|f| f.method == label).count();
            MethodSummary::from_trials(label, &ts, excluded)
        })
        .collect();
    let thought_stats = (!fitness.is_empty()).then(|| ThoughtStats {
        thoughts: fitness.len(),
        mean_alignment_fitness: fitness.iter().map(|f| f.0).sum::<f64>() / fitness.len() as f64,
        mean_replay_fitness: fitness.iter().map(|f| f.1).sum::<f64>() / fitness.len() as f64,
    });
    Ok(ExperimentReport {
        methods,
        trials,
        failures,
        thought_stats,
    })
}

fn run_one(
    q: &EvalQuery,
    method: &MethodSpec,
    prepared: &Prepared,
    embedded: &BTreeMap<String, SkillLibrary>,
    ctx: &ExperimentContext<'_>,
    library: &SkillLibrary,
    k: usize,
) -> Result<RetrievalTrial, TrialFailure> {
    let label = method.to_string();
    let fail = |error: String| TrialFailure {
        query: q.text.clone(),
        method: label.clone(),
        error,
    };
    let thought = || match &prepared.thought {
        Some(Ok(t)) => Ok(t),
        Some(Err(e)) => Err(fail(e.clone())),
        None => Err(fail("no thought".into())),
    };
    let query_vec = |name: Option<&str>| -> Result<_, TrialFailure> {
        let (key, e) = ctx.embedder(name).map_err(|e| fail(e.to_string()))?;
        let v = embed(&q.text, e).map_err(|e| fail(e.to_string()))?;
        Ok((v, &embedded[key]))
    };
    let ranked = match method {
        MethodSpec::Embed { embedder } => {
            let (v, lib) = query_vec(embedder.as_deref())?;
            retrieve_by_embedding(&v, lib, k)
        }
        MethodSpec::Conform => retrieve_by_conformance(thought()?, library, k),
        MethodSpec::Hybrid { embedder, k_first } => {
            let (v, lib) = query_vec(embedder.as_deref())?;
            retrieve_hybrid(
                &v,
                thought()?,
                lib,
                (*k_first).max(1),
                (*k_first).clamp(1, k),
            )
        }
    }
    .map_err(|e| fail(e.to_string()))?;
    Ok(RetrievalTrial {
        query: q.text.clone(),
        language: q.language.clone(),
        method: label,
        true_skill_id: q.true_skill_id.clone(),
        ranked,
        thought_fitness: prepared.alignment_fitness,
    })
}
