//! Access to language-model services for plans ("thoughts"), paraphrases and
//! embeddings, with deterministic offline stand-ins.

mod noise;
mod remote;
mod stub;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{Action, EmbeddingVector, ModelError, Trace};

pub use noise::{noisy_planner, NoisyThought, NOISE_TOLERANCE};
pub use remote::{FixtureMode, RemoteChat, RemoteConfig, RemoteEmbedder};
pub use stub::{HashEmbedder, ScriptedChat, TrigramEmbedder, STUB_DIMENSION};

pub const THOUGHT_TEMPLATE: &str = include_str!("../../templates/thought_v1.txt");
pub const REPHRASE_TEMPLATE: &str = include_str!("../../templates/rephrase_v1.txt");
pub const TEMPLATE_VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GatewayError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("unparseable response: {message}")]
    Unparseable { message: String, raw: String },
    #[error("no scripted response for query '{0}'")]
    Unscripted(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("tool catalog is empty")]
    EmptyCatalog,
    #[error("duplicate tool '{0}' in catalog")]
    DuplicateTool(String),
    #[error("missing configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl GatewayError {
    /// True for failures of a remote service, as opposed to bad input.
    pub fn is_remote(&self) -> bool {
        matches!(self, Self::Transport(_) | Self::Unparseable { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tool {
    pub name: Action,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Tool>", into = "Vec<Tool>")]
pub struct ToolCatalog {
    tools: Vec<Tool>,
}

impl ToolCatalog {
    pub fn new(tools: Vec<Tool>) -> Result<Self, GatewayError> {
        let mut seen = BTreeSet::new();
        for t in &tools {
            if !seen.insert(&t.name) {
                return Err(GatewayError::DuplicateTool(t.name.to_string()));
            }
        }
        Ok(Self { tools })
    }

    /// Catalog of bare tool names without descriptions.
    pub fn from_actions(actions: impl IntoIterator<Item = Action>) -> Self {
        let set: BTreeSet<Action> = actions.into_iter().collect();
        Self {
            tools: set
                .into_iter()
                .map(|name| Tool {
                    name,
                    description: String::new(),
                })
                .collect(),
        }
    }

    pub fn tools(&self) -> &[Tool] {
        &self.tools
    }

    pub fn contains(&self, a: &Action) -> bool {
        self.tools.iter().any(|t| &t.name == a)
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tools.len()
    }
}

impl TryFrom<Vec<Tool>> for ToolCatalog {
    type Error = GatewayError;
    fn try_from(tools: Vec<Tool>) -> Result<Self, Self::Error> {
        Self::new(tools)
    }
}

impl From<ToolCatalog> for Vec<Tool> {
    fn from(c: ToolCatalog) -> Self {
        c.tools
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThoughtSource {
    Remote,
    Stub,
}

/// A one-shot plan produced for a query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thought {
    pub trace: Trace,
    pub source: ThoughtSource,
    #[serde(default)]
    pub raw_response: Option<String>,
    /// Positions in `trace` whose action is not in the catalog.
    #[serde(default)]
    pub off_catalog: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Language {
    #[serde(rename = "en")]
    En,
    #[serde(rename = "da")]
    Da,
    #[serde(rename = "fr")]
    Fr,
}

impl Language {
    pub const ALL: [Language; 3] = [Language::En, Language::Da, Language::Fr];

    pub fn code(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Da => "da",
            Language::Fr => "fr",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Language::En => "English",
            Language::Da => "Danish",
            Language::Fr => "French",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl std::str::FromStr for Language {
    type Err = GatewayError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "en" | "english" => Ok(Language::En),
            "da" | "danish" => Ok(Language::Da),
            "fr" | "french" => Ok(Language::Fr),
            other => Err(GatewayError::InvalidRequest(format!(
                "unknown language '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChatRequest {
    Thought {
        query: String,
        tools: Vec<String>,
        prompt: String,
    },
    Rephrase {
        query: String,
        language: Language,
        n: usize,
        prompt: String,
    },
}

impl ChatRequest {
    pub fn prompt(&self) -> &str {
        match self {
            ChatRequest::Thought { prompt, .. } | ChatRequest::Rephrase { prompt, .. } => prompt,
        }
    }
}

pub trait ChatClient: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError>;
    fn source(&self) -> ThoughtSource;
}

pub trait Embedder: Send + Sync {
    fn model_tag(&self) -> &str;
    fn embed_raw(&self, text: &str) -> Result<Vec<f64>, GatewayError>;
}

fn render(template: &str, vars: &[(&str, &str)]) -> String {
    vars.iter().fold(template.to_owned(), |acc, (k, v)| {
        acc.replace(&format!("{{{{{k}}}}}"), v)
    })
}

/// Lines of the form `1. item` or `1) item`, in order. Other lines are ignored.
pub fn parse_numbered_list(text: &str) -> Vec<String> {
    text.lines()
        .filter_map(|line| {
            let line = line.trim();
            let digits = line.chars().take_while(char::is_ascii_digit).count();
            if digits == 0 {
                return None;
            }
            let rest = line[digits..].strip_prefix(['.', ')'])?;
            let item = rest
                .trim()
                .trim_matches(|c| matches!(c, '"' | '\'' | '`' | '*'))
                .trim();
            (!item.is_empty()).then(|| item.to_owned())
        })
        .collect()
}

pub fn thought_request(query: &str, catalog: &ToolCatalog) -> ChatRequest {
    let tools: Vec<String> = catalog.tools().iter().map(|t| t.name.to_string()).collect();
    let listing = catalog
        .tools()
        .iter()
        .map(|t| {
            if t.description.is_empty() {
                format!("- {}", t.name)
            } else {
                format!("- {}: {}", t.name, t.description)
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    ChatRequest::Thought {
        query: query.to_owned(),
        tools,
        prompt: render(THOUGHT_TEMPLATE, &[("tools", &listing), ("query", query)]),
    }
}

pub fn generate_thought(
    query: &str,
    catalog: &ToolCatalog,
    client: &dyn ChatClient,
) -> Result<Thought, GatewayError> {
    if catalog.is_empty() {
        return Err(GatewayError::EmptyCatalog);
    }
    let raw = client.complete(&thought_request(query, catalog))?;
    let items = parse_numbered_list(&raw);
    if items.is_empty() {
        return Err(GatewayError::Unparseable {
            message: "no numbered list in response".into(),
            raw,
        });
    }
    let trace = Trace::from_names(format!("thought:{query}"), &items)?;
    let off_catalog = trace
        .actions
        .iter()
        .enumerate()
        .filter(|(_, a)| !catalog.contains(a))
        .map(|(i, _)| i)
        .collect();
    Ok(Thought {
        trace,
        source: client.source(),
        raw_response: Some(raw),
        off_catalog,
    })
}

pub fn rephrase_request(query: &str, language: Language, n: usize) -> ChatRequest {
    ChatRequest::Rephrase {
        query: query.to_owned(),
        language,
        n,
        prompt: render(
            REPHRASE_TEMPLATE,
            &[
                ("query", query),
                ("n", &n.to_string()),
                ("language", language.name()),
            ],
        ),
    }
}

pub fn rephrase(
    query: &str,
    language: Language,
    n: usize,
    client: &dyn ChatClient,
) -> Result<Vec<String>, GatewayError> {
    if n == 0 {
        return Err(GatewayError::InvalidRequest("n must be at least 1".into()));
    }
    let raw = client.complete(&rephrase_request(query, language, n))?;
    let mut items = parse_numbered_list(&raw);
    if items.len() < n {
        return Err(GatewayError::Unparseable {
            message: format!("expected {n} paraphrases, found {}", items.len()),
            raw,
        });
    }
    items.truncate(n);
    Ok(items)
}

pub fn embed(text: &str, embedder: &dyn Embedder) -> Result<EmbeddingVector, GatewayError> {
    if text.trim().is_empty() {
        return Err(GatewayError::InvalidRequest(
            "cannot embed empty text".into(),
        ));
    }
    Ok(EmbeddingVector::new(
        embedder.embed_raw(text)?,
        embedder.model_tag(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog(names: &[&str]) -> ToolCatalog {
        ToolCatalog::from_actions(names.iter().map(|n| Action::new(n).unwrap()))
    }

    #[test]
    fn numbered_list_parsing() {
        let raw = "Here is the plan:\n1. Image Editing\n2) `Text Summarization`\n  3.  OCR \nDone.";
        assert_eq!(
            parse_numbered_list(raw),
            ["Image Editing", "Text Summarization", "OCR"]
        );
        assert!(parse_numbered_list("no list here").is_empty());
    }

    #[test]
    fn scripted_thought_round_trip() {
        let chat = ScriptedChat::new().with_plan("q", &["A", "B", "C", "D", "E", "F"]);
        let t = generate_thought("q", &catalog(&["A", "B", "C", "D", "E", "F"]), &chat).unwrap();
        assert_eq!(t.trace.len(), 6);
        assert_eq!(t.source, ThoughtSource::Stub);
        assert!(t.off_catalog.is_empty());
        assert_eq!(chat.calls(), 1);
    }

    #[test]
    fn off_catalog_flagged() {
        let chat = ScriptedChat::new().with_response("q", "1. A\n2. Teleport\n");
        let t = generate_thought("q", &catalog(&["A"]), &chat).unwrap();
        assert_eq!(t.trace.len(), 2);
        assert_eq!(t.off_catalog, [1]);
    }

    #[test]
    fn unparseable_keeps_raw() {
        let chat = ScriptedChat::new().with_response("q", "I cannot help.");
        match generate_thought("q", &catalog(&["A"]), &chat) {
            Err(GatewayError::Unparseable { raw, .. }) => assert_eq!(raw, "I cannot help."),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            generate_thought("q", &ToolCatalog::default(), &chat),
            Err(GatewayError::EmptyCatalog)
        );
    }

    #[test]
    fn rephrase_stub() {
        let chat = ScriptedChat::new();
        let out = rephrase("translate the invoice", Language::En, 2, &chat).unwrap();
        assert_eq!(out.len(), 2);
        assert_ne!(out[0], out[1]);
        assert!(out.iter().all(|s| s.contains("translate the invoice")));
        assert_eq!(
            out,
            rephrase("translate the invoice", Language::En, 2, &chat).unwrap()
        );
        for lang in Language::ALL {
            assert_eq!(rephrase("x y", lang, 7, &chat).unwrap().len(), 7);
        }
        assert!(matches!(
            rephrase("q", Language::Fr, 0, &chat),
            Err(GatewayError::InvalidRequest(_))
        ));
    }

    #[test]
    fn embed_rejects_empty() {
        let e = HashEmbedder::default();
        assert!(embed("  ", &e).is_err());
        let v = embed("hello world", &e).unwrap();
        assert_eq!(v.dim(), STUB_DIMENSION);
        assert_eq!(v, embed("hello world", &e).unwrap());
    }

    #[test]
    fn templates_render() {
        let r = thought_request("do it", &catalog(&["A"]));
        assert!(r.prompt().contains("- A"));
        assert!(r.prompt().contains("Request: do it"));
        assert!(!r.prompt().contains("{{"));
    }
}
