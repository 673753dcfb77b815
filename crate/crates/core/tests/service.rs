use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;

use skillmine::gateway::{ChatClient, HashEmbedder, ScriptedChat};
use skillmine::ingestion::save_library;
use skillmine::service::{router, ServiceState};
use skillmine::synth::synthetic_suite;

struct Fixture {
    app: Router,
    chat: Arc<ScriptedChat>,
    _dir: tempfile::TempDir,
    query: String,
    thought: Vec<String>,
    truth: String,
}

fn fixture(token: Option<&str>) -> Fixture {
    let suite = synthetic_suite(7);
    let dir = tempfile::tempdir().unwrap();
    save_library(&suite.library, dir.path()).unwrap();
    let q = &suite.queries[0];
    let chat = Arc::new(suite.scripted_chat());
    let state = ServiceState::new(
        suite.library.clone(),
        dir.path(),
        chat.clone() as Arc<dyn ChatClient>,
        Arc::new(HashEmbedder::default()),
    )
    .unwrap()
    .with_token(token.map(String::from));
    Fixture {
        app: router(Arc::new(state)),
        chat,
        _dir: dir,
        query: q.text.clone(),
        thought: q
            .thought
            .iter()
            .flatten()
            .map(|a| a.as_str().to_owned())
            .collect(),
        truth: q.true_skill_id.clone(),
    }
}

async fn call(
    app: &Router,
    method: &str,
    uri: &str,
    body: Option<Value>,
    token: Option<&str>,
) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header("authorization", format!("Bearer {t}"));
    }
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    raw(app, req.body(body).unwrap()).await
}

async fn raw(app: &Router, req: Request<Body>) -> (StatusCode, Value) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (
        status,
        serde_json::from_slice(&bytes).unwrap_or(Value::Null),
    )
}

#[tokio::test]
async fn healthz_reports_skill_count() {
    let f = fixture(None);
    let (status, v) = call(&f.app, "GET", "/healthz", None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["skills"], 20);
}

#[tokio::test]
async fn retrieve_with_thought_skips_the_planner() {
    let f = fixture(None);
    let thought = f.thought.clone();
    let before = f.chat.calls();
    let (status, v) = call(
        &f.app,
        "POST",
        "/retrieve",
        Some(json!({"query": f.query, "mode": "conform", "k": 3, "thought": thought})),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(f.chat.calls(), before);
    assert_eq!(v["entries"][0]["skill_id"], f.truth.as_str());
    assert_eq!(v["entries"].as_array().unwrap().len(), 3);
}

#[tokio::test]
async fn retrieve_without_thought_asks_the_planner_once() {
    let f = fixture(None);
    let (status, v) = call(
        &f.app,
        "POST",
        "/retrieve",
        Some(json!({"query": f.query, "mode": "hybrid"})),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(f.chat.calls(), 1);
    assert_eq!(v["method"], "hybrid");
    assert_eq!(v["entries"][0]["skill_id"], f.truth.as_str());

    let (status, _) = call(
        &f.app,
        "POST",
        "/retrieve",
        Some(json!({"query": f.query, "mode": "embed"})),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(f.chat.calls(), 1);
}

#[tokio::test]
async fn planner_failure_is_bad_gateway() {
    let f = fixture(None);
    let (status, v) = call(
        &f.app,
        "POST",
        "/retrieve",
        Some(json!({"query": "no script for this", "mode": "conform"})),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert!(v["error"].is_string());
}

#[tokio::test]
async fn malformed_bodies_are_rejected() {
    let f = fixture(None);
    let req = Request::builder()
        .method("POST")
        .uri("/retrieve")
        .body(Body::from("{not json"))
        .unwrap();
    assert_eq!(raw(&f.app, req).await.0, StatusCode::BAD_REQUEST);
    let (status, _) = call(
        &f.app,
        "POST",
        "/retrieve",
        Some(json!({"query": "x", "mode": "psychic"})),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(
        &f.app,
        "POST",
        "/conformance",
        Some(json!({"skill_id": "skill-00"})),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn skills_and_conformance_endpoints() {
    let f = fixture(None);
    let (status, v) = call(&f.app, "GET", "/skills/skill-03", None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["skill_id"], "skill-03");
    assert_eq!(
        call(&f.app, "GET", "/skills/nope", None, None).await.0,
        StatusCode::NOT_FOUND
    );

    let (status, v) = call(
        &f.app,
        "POST",
        "/conformance",
        Some(json!({"skill_id": "skill-03", "trace": ["Weather"]})),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert!(v["fitness"].as_f64().unwrap() <= 1.0);
    let (status, _) = call(
        &f.app,
        "POST",
        "/conformance",
        Some(json!({"skill_id": "zz", "trace": []})),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn adding_a_skill_persists_and_conflicts_on_repeat() {
    let f = fixture(None);
    let log = json!({
        "process_id": "new-skill",
        "query_texts": ["water the plants"],
        "traces": [{"id": "1", "actions": ["Weather", "Send Email"]}],
    });
    let (status, v) = call(&f.app, "POST", "/skills", Some(log.clone()), None).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    assert_eq!(v["tree"], "SEQ('Weather','Send Email')");
    let (_, h) = call(&f.app, "GET", "/healthz", None, None).await;
    assert_eq!(h["skills"], 21);
    let on_disk = skillmine::ingestion::load_library(f._dir.path()).unwrap();
    assert!(on_disk.contains("new-skill"));

    assert_eq!(
        call(&f.app, "POST", "/skills", Some(log), None).await.0,
        StatusCode::CONFLICT
    );
}

#[tokio::test]
async fn concurrent_writer_lock_gives_conflict() {
    let f = fixture(None);
    let _held = skillmine::ingestion::LibraryLock::acquire(f._dir.path()).unwrap();
    let log = json!({"process_id": "x", "query_texts": ["read it"], "traces": [{"id": "1", "actions": ["OCR"]}]});
    assert_eq!(
        call(&f.app, "POST", "/skills", Some(log), None).await.0,
        StatusCode::CONFLICT
    );
}

#[tokio::test]
async fn bearer_token_is_enforced() {
    let f = fixture(Some("s3cret"));
    assert_eq!(
        call(&f.app, "GET", "/healthz", None, None).await.0,
        StatusCode::OK
    );
    assert_eq!(
        call(&f.app, "GET", "/skills/skill-00", None, None).await.0,
        StatusCode::UNAUTHORIZED
    );
    assert_eq!(
        call(&f.app, "GET", "/skills/skill-00", None, Some("wrong"))
            .await
            .0,
        StatusCode::UNAUTHORIZED
    );
    assert_eq!(
        call(&f.app, "GET", "/skills/skill-00", None, Some("s3cret"))
            .await
            .0,
        StatusCode::OK
    );
}
