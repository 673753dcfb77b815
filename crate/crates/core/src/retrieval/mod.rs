//! Ranking stored skills for a query by embedding similarity, by alignment
//! fitness of a thought, or by both in two stages.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformance::Aligner;
use crate::gateway::{embed, Embedder, GatewayError};
use crate::model::{Alignment, EmbeddingVector, Skill, SkillLibrary, Trace};

pub const DEFAULT_K_FIRST: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RetrievalError {
    #[error("embedding dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("embedding tags differ: '{0}' vs '{1}'")]
    TagMismatch(String, String),
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("skill '{0}' has no embedding")]
    Unembedded(String),
    #[error("skill '{0}' has no query text to embed")]
    NoText(String),
    #[error("library is empty")]
    EmptyLibrary,
    #[error("thought is empty")]
    EmptyThought,
    #[error("invalid k: {0}")]
    InvalidK(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetrievalMethod {
    Embed,
    Conform,
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub skill_id: String,
    pub score: f64,
    pub rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment: Option<Alignment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSkillList {
    pub method: RetrievalMethod,
    pub entries: Vec<RankedEntry>,
}

impl RankedSkillList {
    pub fn top(&self) -> Option<&str> {
        self.entries.first().map(|e| e.skill_id.as_str())
    }

    /// 1-based rank of `skill_id`, if listed.
    pub fn rank_of(&self, skill_id: &str) -> Option<usize> {
        self.entries
            .iter()
            .find(|e| e.skill_id == skill_id)
            .map(|e| e.rank)
    }
}

pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, RetrievalError> {
    if a.dim() != b.dim() {
        return Err(RetrievalError::DimensionMismatch(a.dim(), b.dim()));
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(RetrievalError::ZeroVector);
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

fn by_score_then_id(a: &RankedEntry, b: &RankedEntry) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.skill_id.cmp(&b.skill_id))
}

fn finalize(method: RetrievalMethod, mut entries: Vec<RankedEntry>, k: usize) -> RankedSkillList {
    entries.truncate(k);
    for (i, e) in entries.iter_mut().enumerate() {
        e.rank = i + 1;
    }
    RankedSkillList { method, entries }
}

fn check_k(k: usize) -> Result<(), RetrievalError> {
    if k == 0 {
        return Err(RetrievalError::InvalidK("k must be at least 1".into()));
    }
    Ok(())
}

pub fn retrieve_by_embedding(
    query: &EmbeddingVector,
    library: &SkillLibrary,
    k: usize,
) -> Result<RankedSkillList, RetrievalError> {
    check_k(k)?;
    if library.is_empty() {
        return Err(RetrievalError::EmptyLibrary);
    }
    let mut entries = library
        .iter()
        .map(|s| {
            let e = s
                .embedding
                .as_ref()
                .ok_or_else(|| RetrievalError::Unembedded(s.skill_id.clone()))?;
            if e.model_tag != query.model_tag {
                return Err(RetrievalError::TagMismatch(
                    query.model_tag.clone(),
                    e.model_tag.clone(),
                ));
            }
            Ok(RankedEntry {
                skill_id: s.skill_id.clone(),
                score: cosine_similarity(query, e)?,
                rank: 0,
                alignment: None,
                error: None,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    entries.sort_by(by_score_then_id);
    Ok(finalize(RetrievalMethod::Embed, entries, k))
}

fn conformance_entry(thought: &Trace, skill: &Skill) -> RankedEntry {
    let result = Aligner::new(&skill.net).and_then(|a| a.align(thought));
    let (score, alignment, error) = match result {
        Ok(al) => (al.fitness, Some(al), None),
        Err(e) => (0.0, None, Some(e.to_string())),
    };
    RankedEntry {
        skill_id: skill.skill_id.clone(),
        score,
        rank: 0,
        alignment,
        error,
    }
}

/// Scores every skill by the alignment fitness of `thought`; a skill whose
/// alignment fails scores 0 and carries the error.
pub fn retrieve_by_conformance(
    thought: &Trace,
    library: &SkillLibrary,
    k: usize,
) -> Result<RankedSkillList, RetrievalError> {
    check_k(k)?;
    if thought.is_empty() {
        return Err(RetrievalError::EmptyThought);
    }
    if library.is_empty() {
        return Err(RetrievalError::EmptyLibrary);
    }
    let skills: Vec<&Skill> = library.iter().collect();
    let mut entries: Vec<RankedEntry> = skills
        .par_iter()
        .map(|s| conformance_entry(thought, s))
        .collect();
    entries.sort_by(by_score_then_id);
    Ok(finalize(RetrievalMethod::Conform, entries, k))
}

/// Embedding shortlist of `k_first` skills reranked by alignment fitness.
/// Equal fitness falls back to the shortlist score, then to the skill id.
pub fn retrieve_hybrid(
    query: &EmbeddingVector,
    thought: &Trace,
    library: &SkillLibrary,
    k_first: usize,
    k_final: usize,
) -> Result<RankedSkillList, RetrievalError> {
    check_k(k_final)?;
    if k_first < k_final {
        return Err(RetrievalError::InvalidK(format!(
            "k_first {k_first} is below k_final {k_final}"
        )));
    }
    if thought.is_empty() {
        return Err(RetrievalError::EmptyThought);
    }
    let shortlist = retrieve_by_embedding(query, library, k_first)?;
    let mut scored: Vec<(f64, RankedEntry)> = shortlist
        .entries
        .par_iter()
        .map(|e| {
            let skill = library.get(&e.skill_id).expect("shortlisted skill exists");
            (e.score, conformance_entry(thought, skill))
        })
        .collect();
    scored.sort_by(|(sa, a), (sb, b)| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| sb.partial_cmp(sa).unwrap_or(Ordering::Equal))
            .then_with(|| a.skill_id.cmp(&b.skill_id))
    });
    let entries = scored.into_iter().map(|(_, e)| e).collect();
    Ok(finalize(RetrievalMethod::Hybrid, entries, k_final))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingSource {
    /// The first query text of the skill.
    #[default]
    Canonical,
    /// Mean of the embeddings of all query texts.
    MeanOfTexts,
}

pub fn skill_embedding(
    skill: &Skill,
    embedder: &dyn Embedder,
    source: EmbeddingSource,
) -> Result<EmbeddingVector, RetrievalError> {
    match source {
        EmbeddingSource::Canonical => {
            let text = skill
                .canonical_text()
                .ok_or_else(|| RetrievalError::NoText(skill.skill_id.clone()))?;
            Ok(embed(text, embedder)?)
        }
        EmbeddingSource::MeanOfTexts => {
            if skill.query_texts.is_empty() {
                return Err(RetrievalError::NoText(skill.skill_id.clone()));
            }
            let vecs = skill
                .query_texts
                .iter()
                .map(|t| embed(t, embedder))
                .collect::<Result<Vec<_>, _>>()?;
            let dim = vecs[0].dim();
            let mut mean = vec![0.0; dim];
            for v in &vecs {
                if v.dim() != dim {
                    return Err(RetrievalError::DimensionMismatch(dim, v.dim()));
                }
                for (m, x) in mean.iter_mut().zip(&v.values) {
                    *m += x / vecs.len() as f64;
                }
            }
            Ok(EmbeddingVector::new(mean, embedder.model_tag()))
        }
    }
}

/// Returns a copy of `library` with every skill embedded by `embedder`.
pub fn embed_library(
    library: &SkillLibrary,
    embedder: &dyn Embedder,
    source: EmbeddingSource,
) -> Result<SkillLibrary, RetrievalError> {
    let mut out = SkillLibrary::new();
    for s in library.iter() {
        let mut s = s.clone();
        s.embedding = Some(skill_embedding(&s, embedder, source)?);
        out.insert(s).expect("uniform embeddings");
    }
    Ok(out)
}

/// True when every skill already carries an embedding tagged `tag`.
pub fn is_embedded_with(library: &SkillLibrary, tag: &str) -> bool {
    library
        .iter()
        .all(|s| s.embedding.as_ref().is_some_and(|e| e.model_tag == tag))
}
