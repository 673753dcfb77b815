//! HTTP service exposing retrieval, conformance and skill registration.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use crate::conformance::optimal_alignment;
use crate::discovery::{discover_skill_with, DiscoveryOptions};
use crate::gateway::{embed, generate_thought, ChatClient, Embedder, GatewayError, ToolCatalog};
use crate::ingestion::{append_skill, IngestError};
use crate::model::{Action, EventLog, SkillLibrary, Trace};
use crate::retrieval::{
    embed_library, is_embedded_with, retrieve_by_conformance, retrieve_by_embedding,
    retrieve_hybrid, skill_embedding, EmbeddingSource, RetrievalError, RetrievalMethod,
    DEFAULT_K_FIRST,
};

pub struct ServiceState {
    library: RwLock<SkillLibrary>,
    dir: PathBuf,
    chat: Arc<dyn ChatClient>,
    embedder: Arc<dyn Embedder>,
    catalog: Option<ToolCatalog>,
    token: Option<String>,
    writer: tokio::sync::Mutex<()>,
    source: EmbeddingSource,
}

impl ServiceState {
    /// Embeds any skill not yet embedded by `embedder`.
    pub fn new(
        library: SkillLibrary,
        dir: impl Into<PathBuf>,
        chat: Arc<dyn ChatClient>,
        embedder: Arc<dyn Embedder>,
    ) -> Result<Self, RetrievalError> {
        let source = EmbeddingSource::Canonical;
        let library = if is_embedded_with(&library, embedder.model_tag()) {
            library
        } else {
            embed_library(&library, embedder.as_ref(), source)?
        };
        Ok(Self {
            library: RwLock::new(library),
            dir: dir.into(),
            chat,
            embedder,
            catalog: None,
            token: None,
            writer: tokio::sync::Mutex::new(()),
            source,
        })
    }

    pub fn with_token(mut self, token: Option<String>) -> Self {
        self.token = token;
        self
    }

    /// Catalog offered to the planner; defaults to the library's actions.
    pub fn with_catalog(mut self, catalog: Option<ToolCatalog>) -> Self {
        self.catalog = catalog;
        self
    }

    fn catalog(&self, library: &SkillLibrary) -> ToolCatalog {
        self.catalog.clone().unwrap_or_else(|| {
            ToolCatalog::from_actions(library.iter().flat_map(|s| s.net.alphabet()))
        })
    }
}

#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

fn bad_request(e: impl std::fmt::Display) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, e.to_string())
}

fn from_gateway(e: GatewayError) -> ApiError {
    if e.is_remote() || matches!(e, GatewayError::Unscripted(_) | GatewayError::Config(_)) {
        ApiError(StatusCode::BAD_GATEWAY, e.to_string())
    } else {
        bad_request(e)
    }
}

fn from_retrieval(e: RetrievalError) -> ApiError {
    match e {
        RetrievalError::Gateway(g) => from_gateway(g),
        other => bad_request(other),
    }
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(bad_request)
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

#[derive(Debug, Deserialize)]
struct RetrieveRequest {
    query: String,
    mode: RetrievalMethod,
    #[serde(default)]
    k: Option<usize>,
    #[serde(default)]
    k_first: Option<usize>,
    #[serde(default)]
    thought: Option<Vec<Action>>,
}

async fn retrieve(
    State(state): State<Arc<ServiceState>>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: RetrieveRequest = parse(&body)?;
    let list = blocking(move || {
        let library = state.library.read().expect("library lock");
        let k = req.k.unwrap_or(library.len()).max(1);
        let thought = || -> Result<Trace, ApiError> {
            match &req.thought {
                Some(a) => Ok(Trace::new("thought", a.clone())),
                None => generate_thought(&req.query, &state.catalog(&library), state.chat.as_ref())
                    .map(|t| t.trace)
                    .map_err(from_gateway),
            }
        };
        let query_vec = || embed(&req.query, state.embedder.as_ref()).map_err(from_gateway);
        match req.mode {
            RetrievalMethod::Embed => retrieve_by_embedding(&query_vec()?, &library, k),
            RetrievalMethod::Conform => retrieve_by_conformance(&thought()?, &library, k),
            RetrievalMethod::Hybrid => {
                let k_first = req.k_first.unwrap_or(DEFAULT_K_FIRST);
                retrieve_hybrid(
                    &query_vec()?,
                    &thought()?,
                    &library,
                    k_first,
                    k.min(k_first),
                )
            }
        }
        .map_err(from_retrieval)
    })
    .await?;
    Ok(Json(list).into_response())
}

async fn get_skill(
    State(state): State<Arc<ServiceState>>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let library = state.library.read().expect("library lock");
    match library.get(&id) {
        Some(s) => Ok(Json(s).into_response()),
        None => Err(ApiError(
            StatusCode::NOT_FOUND,
            format!("unknown skill '{id}'"),
        )),
    }
}

#[derive(Debug, Deserialize)]
struct ConformanceRequest {
    skill_id: String,
    trace: Vec<Action>,
}

async fn conformance(
    State(state): State<Arc<ServiceState>>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: ConformanceRequest = parse(&body)?;
    let alignment = blocking(move || {
        let library = state.library.read().expect("library lock");
        let skill = library.get(&req.skill_id).ok_or_else(|| {
            ApiError(
                StatusCode::NOT_FOUND,
                format!("unknown skill '{}'", req.skill_id),
            )
        })?;
        optimal_alignment(&Trace::new("trace", req.trace), &skill.net).map_err(bad_request)
    })
    .await?;
    Ok(Json(alignment).into_response())
}

async fn add_skill(
    State(state): State<Arc<ServiceState>>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let log: EventLog = parse(&body)?;
    let Ok(_guard) = state.writer.try_lock() else {
        return Err(ApiError(
            StatusCode::CONFLICT,
            "another write is in progress".into(),
        ));
    };
    let st = state.clone();
    let skill = blocking(move || {
        if st
            .library
            .read()
            .expect("library lock")
            .contains(&log.process_id)
        {
            return Err(ApiError(
                StatusCode::CONFLICT,
                format!("skill '{}' already exists", log.process_id),
            ));
        }
        let mut skill =
            discover_skill_with(&log, &DiscoveryOptions::default()).map_err(bad_request)?;
        skill.embedding =
            Some(skill_embedding(&skill, st.embedder.as_ref(), st.source).map_err(from_retrieval)?);
        append_skill(&st.dir, &skill).map_err(|e| match e {
            IngestError::Locked(_) | IngestError::Conflict(_) => {
                ApiError(StatusCode::CONFLICT, e.to_string())
            }
            other => ApiError(StatusCode::INTERNAL_SERVER_ERROR, other.to_string()),
        })?;
        st.library
            .write()
            .expect("library lock")
            .insert(skill.clone())
            .map_err(bad_request)?;
        Ok(skill)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(skill)).into_response())
}

async fn healthz(State(state): State<Arc<ServiceState>>) -> Response {
    let n = state.library.read().expect("library lock").len();
    Json(json!({ "status": "ok", "skills": n })).into_response()
}

async fn auth(
    State(state): State<Arc<ServiceState>>,
    req: Request,
    next: Next,
) -> Result<Response, ApiError> {
    if let Some(token) = &state.token {
        let given = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if given != Some(token.as_str()) {
            return Err(ApiError(
                StatusCode::UNAUTHORIZED,
                "missing or wrong bearer token".into(),
            ));
        }
    }
    Ok(next.run(req).await)
}

pub fn router(state: Arc<ServiceState>) -> Router {
    let api = Router::new()
        .route("/retrieve", post(retrieve))
        .route("/skills", post(add_skill))
        .route("/skills/{id}", get(get_skill))
        .route("/conformance", post(conformance))
        .route_layer(middleware::from_fn_with_state(state.clone(), auth));
    Router::new()
        .route("/healthz", get(healthz))
        .merge(api)
        .with_state(state)
}

/// Serves until interrupted.
pub async fn serve(addr: SocketAddr, state: Arc<ServiceState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
