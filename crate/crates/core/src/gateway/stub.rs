use std::collections::HashMap;
use std::hash::Hasher;
use std::sync::atomic::{AtomicUsize, Ordering};

use fnv::FnvHasher;

use super::{ChatClient, ChatRequest, Embedder, GatewayError, Language, ThoughtSource};

pub const STUB_DIMENSION: usize = 256;

/// Offline chat client: thoughts come from a script keyed by query,
/// paraphrases from fixed per-language templates.
#[derive(Debug, Default)]
pub struct ScriptedChat {
    responses: HashMap<String, String>,
    calls: AtomicUsize,
}

impl ScriptedChat {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_response(mut self, query: impl Into<String>, raw: impl Into<String>) -> Self {
        self.responses.insert(query.into(), raw.into());
        self
    }

    pub fn with_plan<S: AsRef<str>>(self, query: impl Into<String>, plan: &[S]) -> Self {
        let raw = plan
            .iter()
            .enumerate()
            .map(|(i, a)| format!("{}. {}\n", i + 1, a.as_ref()))
            .collect::<String>();
        self.with_response(query, raw)
    }

    pub fn insert_plan<S: AsRef<str>>(&mut self, query: impl Into<String>, plan: &[S]) {
        let this = std::mem::take(self);
        *self = this.with_plan(query, plan);
    }

    /// Number of `complete` calls served so far.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

const EN: [&str; 6] = [
    "{q}",
    "Please help me: {q}",
    "I need the following done: {q}",
    "Could you {q}?",
    "Task for today: {q}",
    "My request is simple, {q}",
];
const DA: [&str; 6] = [
    "Hjælp mig venligst: {q}",
    "Jeg har brug for dette: {q}",
    "Kan du {q}?",
    "Opgave: {q}",
    "Min anmodning er: {q}",
    "Vær sød at {q}",
];
const FR: [&str; 6] = [
    "Aidez-moi s'il vous plaît : {q}",
    "J'ai besoin de ceci : {q}",
    "Pouvez-vous {q} ?",
    "Tâche : {q}",
    "Ma demande est : {q}",
    "Merci de {q}",
];

fn stub_paraphrases(query: &str, language: Language, n: usize) -> String {
    let templates = match language {
        Language::En => &EN,
        Language::Da => &DA,
        Language::Fr => &FR,
    };
    (0..n)
        .map(|i| {
            let base = templates[i % templates.len()].replace("{q}", query);
            let text = match i / templates.len() {
                0 => base,
                round => format!("{base} ({round})"),
            };
            format!("{}. {}\n", i + 1, text)
        })
        .collect()
}

impl ChatClient for ScriptedChat {
    fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        match request {
            ChatRequest::Thought { query, .. } => self
                .responses
                .get(query)
                .cloned()
                .ok_or_else(|| GatewayError::Unscripted(query.clone())),
            ChatRequest::Rephrase {
                query, language, n, ..
            } => Ok(stub_paraphrases(query, *language, *n)),
        }
    }

    fn source(&self) -> ThoughtSource {
        ThoughtSource::Stub
    }
}

fn hash(s: &str) -> u64 {
    let mut h = FnvHasher::default();
    h.write(s.as_bytes());
    h.finish()
}

fn accumulate(v: &mut [f64], feature: &str) {
    let h = hash(feature);
    let idx = (h % v.len() as u64) as usize;
    v[idx] += if h >> 63 == 0 { 1.0 } else { -1.0 };
}

fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
}

/// Signed feature hashing of lower-cased words.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
    tag: String,
}

impl HashEmbedder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            tag: format!("stub-hash-{dim}"),
        }
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self::new(STUB_DIMENSION)
    }
}

impl Embedder for HashEmbedder {
    fn model_tag(&self) -> &str {
        &self.tag
    }

    fn embed_raw(&self, text: &str) -> Result<Vec<f64>, GatewayError> {
        let mut v = vec![0.0; self.dim];
        for w in words(text) {
            accumulate(&mut v, &w);
        }
        Ok(v)
    }
}

/// Signed feature hashing of character trigrams of each padded word.
#[derive(Debug, Clone)]
pub struct TrigramEmbedder {
    dim: usize,
    tag: String,
}

impl TrigramEmbedder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            tag: format!("stub-trigram-{dim}"),
        }
    }
}

impl Default for TrigramEmbedder {
    fn default() -> Self {
        Self::new(STUB_DIMENSION)
    }
}

impl Embedder for TrigramEmbedder {
    fn model_tag(&self) -> &str {
        &self.tag
    }

    fn embed_raw(&self, text: &str) -> Result<Vec<f64>, GatewayError> {
        let mut v = vec![0.0; self.dim];
        for w in words(text) {
            let chars: Vec<char> = format!(" {w} ").chars().collect();
            for g in chars.windows(3) {
                accumulate(&mut v, &g.iter().collect::<String>());
            }
        }
        Ok(v)
    }
}
