use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{ChatClient, ChatRequest, Embedder, GatewayError, ThoughtSource};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum FixtureMode {
    /// Always call the endpoint; nothing is written.
    #[default]
    Off,
    /// Call the endpoint and store each exchange in the fixture directory.
    Record,
    /// Answer only from the fixture directory; never touch the network.
    Replay,
}

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub model: Option<String>,
    pub fixtures: Option<PathBuf>,
    pub mode: FixtureMode,
    pub timeout: Duration,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            api_key: None,
            model: None,
            fixtures: None,
            mode: FixtureMode::Off,
            timeout: Duration::from_secs(60),
        }
    }

    pub fn with_fixtures(mut self, dir: impl Into<PathBuf>, mode: FixtureMode) -> Self {
        self.fixtures = Some(dir.into());
        self.mode = mode;
        self
    }

    /// Reads `{prefix}_ENDPOINT`, `{prefix}_API_KEY` and `{prefix}_MODEL`.
    pub fn from_env(prefix: &str) -> Result<Self, GatewayError> {
        let var = |name: &str| {
            std::env::var(format!("{prefix}_{name}"))
                .ok()
                .filter(|v| !v.is_empty())
        };
        let endpoint = var("ENDPOINT")
            .ok_or_else(|| GatewayError::Config(format!("{prefix}_ENDPOINT is not set")))?;
        let mut cfg = Self::new(endpoint);
        cfg.api_key = var("API_KEY");
        cfg.model = var("MODEL");
        Ok(cfg)
    }

    pub fn chat_from_env() -> Result<Self, GatewayError> {
        Self::from_env("LLM")
    }

    pub fn embed_from_env() -> Result<Self, GatewayError> {
        Self::from_env("EMBED")
    }
}

struct Exchange<'a> {
    cfg: &'a RemoteConfig,
    agent: ureq::Agent,
    kind: &'static str,
}

impl Exchange<'_> {
    fn fixture_path(dir: &Path, kind: &str, body: &Value) -> PathBuf {
        let key = json!({ "kind": kind, "body": body }).to_string();
        dir.join(format!(
            "{}.json",
            hex::encode(Sha256::digest(key.as_bytes()))
        ))
    }

    fn send(&self, body: Value) -> Result<Value, GatewayError> {
        let fixture = self
            .cfg
            .fixtures
            .as_deref()
            .map(|d| Self::fixture_path(d, self.kind, &body));
        if self.cfg.mode == FixtureMode::Replay {
            let path = fixture.ok_or_else(|| {
                GatewayError::Config("replay mode needs a fixture directory".into())
            })?;
            let text = fs::read_to_string(&path).map_err(|e| {
                GatewayError::Transport(format!("no recorded exchange {}: {e}", path.display()))
            })?;
            let stored: Value = serde_json::from_str(&text).map_err(|e| {
                GatewayError::Transport(format!("bad fixture {}: {e}", path.display()))
            })?;
            return Ok(stored["response"].clone());
        }
        let mut req = self.agent.post(&self.cfg.endpoint);
        if let Some(key) = &self.cfg.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(&body)
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        let value: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| GatewayError::Transport(format!("response is not JSON: {e}")))?;
        if let (FixtureMode::Record, Some(path)) = (self.cfg.mode, fixture) {
            let record = json!({ "request": body, "response": value });
            let write = || -> std::io::Result<()> {
                fs::create_dir_all(path.parent().expect("fixture file has a parent"))?;
                fs::write(&path, serde_json::to_vec_pretty(&record)?)
            };
            write().map_err(|e| GatewayError::Transport(format!("cannot record exchange: {e}")))?;
        }
        Ok(value)
    }
}

fn agent(cfg: &RemoteConfig) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(cfg.timeout))
        .build()
        .into()
}

/// Chat-completion client speaking the common `messages`/`choices` JSON shape.
pub struct RemoteChat {
    cfg: RemoteConfig,
    agent: ureq::Agent,
}

impl RemoteChat {
    pub fn new(cfg: RemoteConfig) -> Self {
        let agent = agent(&cfg);
        Self { cfg, agent }
    }
}

impl ChatClient for RemoteChat {
    fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let mut body = json!({
            "messages": [{ "role": "user", "content": request.prompt() }],
            "temperature": 0,
        });
        if let Some(m) = &self.cfg.model {
            body["model"] = json!(m);
        }
        let ex = Exchange {
            cfg: &self.cfg,
            agent: self.agent.clone(),
            kind: "chat",
        };
        let value = ex.send(body)?;
        let content = value
            .pointer("/choices/0/message/content")
            .or_else(|| value.get("content"))
            .and_then(Value::as_str);
        content
            .map(str::to_owned)
            .ok_or_else(|| GatewayError::Unparseable {
                message: "response has no message content".into(),
                raw: value.to_string(),
            })
    }

    fn source(&self) -> ThoughtSource {
        ThoughtSource::Remote
    }
}

/// Embedding client speaking the common `input`/`data[0].embedding` JSON shape.
pub struct RemoteEmbedder {
    cfg: RemoteConfig,
    agent: ureq::Agent,
    tag: String,
}

impl RemoteEmbedder {
    pub fn new(cfg: RemoteConfig) -> Self {
        let agent = agent(&cfg);
        let tag = cfg.model.clone().unwrap_or_else(|| "remote".into());
        Self { cfg, agent, tag }
    }
}

impl Embedder for RemoteEmbedder {
    fn model_tag(&self) -> &str {
        &self.tag
    }

    fn embed_raw(&self, text: &str) -> Result<Vec<f64>, GatewayError> {
        let mut body = json!({ "input": text });
        if let Some(m) = &self.cfg.model {
            body["model"] = json!(m);
        }
        let ex = Exchange {
            cfg: &self.cfg,
            agent: self.agent.clone(),
            kind: "embed",
        };
        let value = ex.send(body)?;
        let arr = value
            .pointer("/data/0/embedding")
            .or_else(|| value.get("embedding"))
            .and_then(Value::as_array)
            .ok_or_else(|| GatewayError::Unparseable {
                message: "response has no embedding array".into(),
                raw: value.to_string(),
            })?;
        arr.iter()
            .map(|x| {
                x.as_f64().ok_or_else(|| GatewayError::Unparseable {
                    message: "embedding contains a non-number".into(),
                    raw: value.to_string(),
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{rephrase, Language};

    fn write_fixture(dir: &Path, kind: &str, body: Value, response: Value) {
        let path = Exchange::fixture_path(dir, kind, &body);
        fs::write(
            path,
            json!({ "request": body, "response": response }).to_string(),
        )
        .unwrap();
    }

    #[test]
    fn replayed_rephrase_parses() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RemoteConfig::new("http://127.0.0.1:9/unused")
            .with_fixtures(dir.path(), FixtureMode::Replay);
        let chat = RemoteChat::new(cfg);
        let req_prompt = match crate::gateway::rephrase_request("book a flight", Language::Da, 3) {
            ChatRequest::Rephrase { prompt, .. } => prompt,
            _ => unreachable!(),
        };
        write_fixture(
            dir.path(),
            "chat",
            json!({ "messages": [{ "role": "user", "content": req_prompt }], "temperature": 0 }),
            json!({ "choices": [{ "message": { "content": "1. Book et fly\n2. Bestil en flyrejse\n3. Find et fly" } }] }),
        );
        let out = rephrase("book a flight", Language::Da, 3, &chat).unwrap();
        assert_eq!(out, ["Book et fly", "Bestil en flyrejse", "Find et fly"]);
    }

    #[test]
    fn replay_miss_is_transport_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RemoteConfig::new("http://127.0.0.1:9/unused")
            .with_fixtures(dir.path(), FixtureMode::Replay);
        let e = RemoteEmbedder::new(cfg);
        assert!(matches!(e.embed_raw("x"), Err(GatewayError::Transport(_))));
    }

    #[test]
    fn replayed_embedding() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg =
            RemoteConfig::new("http://unused").with_fixtures(dir.path(), FixtureMode::Replay);
        cfg.model = Some("emb-1".into());
        write_fixture(
            dir.path(),
            "embed",
            json!({ "input": "hi", "model": "emb-1" }),
            json!({ "data": [{ "embedding": [0.5, -1.0] }] }),
        );
        let e = RemoteEmbedder::new(cfg);
        assert_eq!(e.model_tag(), "emb-1");
        assert_eq!(e.embed_raw("hi").unwrap(), [0.5, -1.0]);
    }

    #[test]
    fn unreachable_endpoint() {
        let mut cfg = RemoteConfig::new("http://127.0.0.1:9/");
        cfg.timeout = Duration::from_secs(2);
        let chat = RemoteChat::new(cfg);
        let r = chat.complete(&crate::gateway::rephrase_request("x", Language::En, 1));
        assert!(r.unwrap_err().is_remote());
    }
}
