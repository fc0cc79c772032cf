//! HTTP API over documents and navigation sessions. Bodies are JSON.
//!
//! - `POST /documents` with a SEPT document: `{document_id, ...}`
//! - `POST /sessions` with `{document_id, config?, seed?}`: the root scene
//! - `POST /sessions/{id}/expand` with `{frame_id}`: the child scene
//! - `POST /sessions/{id}/back`: the parent scene
//! - `GET /sessions/{id}/scene`: the current scene
//! - `GET /health`

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mindmap_core::{
    builtin_handlers, generate_dmr_with_diagnostics, parse_sept_document, Config, FrameId, MindMapper, MlmrError, Ontology, Scene, SeptError, Session,
};
use serde::{Deserialize, Serialize};

use crate::images::Images;
use crate::store::{now, CachedScene, Store, StoreError, StoredSession};

pub struct AppState {
    pub ontology: Ontology,
    pub config: Config,
    pub store: Store,
    pub images: Images,
    locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
}

impl AppState {
    pub fn new(ontology: Ontology, config: Config, store: Store, images: Images) -> Self {
        Self {
            ontology,
            config,
            store,
            images,
            locks: Mutex::new(HashMap::new()),
        }
    }

    fn lock_for(&self, id: &str) -> Arc<tokio::sync::Mutex<()>> {
        let mut locks = self.locks.lock().expect("lock table is not poisoned");
        locks.entry(id.to_string()).or_default().clone()
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    diagnostics: Vec<String>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
            diagnostics: vec![],
        }
    }

    fn bad_request(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::BAD_REQUEST, e.to_string())
    }

    fn invalid(message: impl Into<String>, diagnostics: Vec<String>) -> Self {
        Self {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            message: message.into(),
            diagnostics,
        }
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(_) => Self::new(StatusCode::NOT_FOUND, e.to_string()),
            StoreError::Unrecoverable(_) => Self::internal(e),
            StoreError::Io(..) => Self::internal(e),
        }
    }
}

impl From<MlmrError> for ApiError {
    fn from(e: MlmrError) -> Self {
        match e {
            MlmrError::NotAGroup(_) | MlmrError::AtRoot => Self::new(StatusCode::CONFLICT, e.to_string()),
            MlmrError::EmptyGraph => Self::invalid(e.to_string(), vec![]),
            MlmrError::Summarize(_) => Self::internal(e),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        #[derive(Serialize)]
        struct Body {
            error: String,
            #[serde(skip_serializing_if = "Vec::is_empty")]
            diagnostics: Vec<String>,
        }
        let body = Body {
            error: self.message,
            diagnostics: self.diagnostics,
        };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentCreated {
    pub document_id: String,
    pub statements: usize,
    pub frames: usize,
    pub relations: usize,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneResponse {
    pub session_id: String,
    pub document_id: String,
    /// Group frames expanded from the root to reach this scene.
    pub path: Vec<FrameId>,
    pub stack_depth: usize,
    pub can_go_back: bool,
    pub scene: Scene,
    pub svg: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    document_id: String,
    #[serde(default)]
    config: Option<serde_json::Value>,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpandRequest {
    frame_id: FrameId,
}

fn parse_json<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(ApiError::bad_request)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?
}

fn path_key(path: &[FrameId]) -> String {
    path.iter().map(FrameId::as_str).collect::<Vec<_>>().join("/")
}

/// Draws the current node unless its scene is cached, then builds the reply.
fn current_scene(app: &AppState, stored: &mut StoredSession, config: &Config) -> Result<SceneResponse, ApiError> {
    let key = path_key(stored.state.path());
    if !stored.scenes.contains_key(&key) {
        let mapper = MindMapper {
            ontology: &app.ontology,
            config,
            provider: app.images.provider(),
            cache: app.images.cache(),
        };
        let map = mapper.draw_node(stored.state.current()).map_err(ApiError::internal)?;
        stored.scenes.insert(
            key.clone(),
            CachedScene {
                scene: map.scene,
                svg: map.svg,
            },
        );
    }
    let cached = &stored.scenes[&key];
    Ok(SceneResponse {
        session_id: stored.session_id.clone(),
        document_id: stored.document_id.clone(),
        path: stored.state.path().to_vec(),
        stack_depth: stored.state.stack_depth(),
        can_go_back: stored.state.stack_depth() > 1,
        scene: cached.scene.clone(),
        svg: cached.svg.clone(),
    })
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn create_document(State(app): State<Arc<AppState>>, body: Bytes) -> ApiResult<DocumentCreated> {
    blocking(move || {
        let doc = parse_sept_document(&body).map_err(|e| match e {
            SeptError::Syntax { .. } => ApiError::bad_request(e),
            other => ApiError::invalid("SEPT document failed validation", vec![other.to_string()]),
        })?;
        let out = generate_dmr_with_diagnostics(&doc, &app.ontology, &builtin_handlers());
        let diagnostics: Vec<String> = out.diagnostics.iter().map(ToString::to_string).collect();
        if out.graph.is_empty() {
            return Err(ApiError::invalid("document yields an empty meaning graph", diagnostics));
        }
        let document_id = app.store.put_document(&body)?;
        Ok(Json(DocumentCreated {
            document_id,
            statements: doc.septs.len(),
            frames: out.graph.frames.len(),
            relations: out.graph.relations.len(),
            diagnostics,
        }))
    })
    .await
}

async fn create_session(State(app): State<Arc<AppState>>, body: Bytes) -> ApiResult<SceneResponse> {
    let req: CreateSession = parse_json(&body)?;
    blocking(move || {
        let mut config = match req.config {
            Some(v) => Config::from_json(v.to_string().as_bytes()).map_err(|e| ApiError::invalid("invalid session config", vec![e.to_string()]))?,
            None => app.config.clone(),
        };
        if let Some(seed) = req.seed {
            config = config.with_seed(seed);
        }
        let bytes = app.store.document(&req.document_id)?;
        let doc = parse_sept_document(&bytes).map_err(ApiError::internal)?;
        let dmr = generate_dmr_with_diagnostics(&doc, &app.ontology, &builtin_handlers()).graph;
        let state = Session::open(dmr, &app.ontology, config.mlmr.clone())?;
        let t = now();
        let mut stored = StoredSession {
            session_id: uuid::Uuid::new_v4().simple().to_string(),
            document_id: req.document_id,
            config,
            state,
            scenes: Default::default(),
            created_at: t,
            updated_at: t,
        };
        let config = stored.config.clone();
        let reply = current_scene(&app, &mut stored, &config)?;
        app.store.persist(&stored)?;
        Ok(Json(reply))
    })
    .await
}

/// Runs `step` on the stored session under its lock and persists the result.
async fn mutate(
    app: Arc<AppState>,
    id: String,
    step: impl FnOnce(&AppState, &mut StoredSession) -> Result<(), ApiError> + Send + 'static,
) -> ApiResult<SceneResponse> {
    let lock = app.lock_for(&id);
    let _guard = lock.lock().await;
    blocking(move || {
        let mut stored = app.store.load(&id)?;
        step(&app, &mut stored)?;
        let config = stored.config.clone();
        let reply = current_scene(&app, &mut stored, &config)?;
        stored.updated_at = now();
        app.store.persist(&stored)?;
        Ok(Json(reply))
    })
    .await
}

async fn expand(State(app): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<SceneResponse> {
    let req: ExpandRequest = parse_json(&body)?;
    mutate(app, id, move |app, s| {
        s.state.expand(&app.ontology, &req.frame_id)?;
        Ok(())
    })
    .await
}

async fn back(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<SceneResponse> {
    mutate(app, id, |_, s| {
        s.state.go_back()?;
        Ok(())
    })
    .await
}

async fn scene(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<SceneResponse> {
    let lock = app.lock_for(&id);
    let _guard = lock.lock().await;
    blocking(move || {
        let mut stored = app.store.load(&id)?;
        let config = stored.config.clone();
        let had = stored.scenes.len();
        let reply = current_scene(&app, &mut stored, &config)?;
        if stored.scenes.len() != had {
            app.store.persist(&stored)?;
        }
        Ok(Json(reply))
    })
    .await
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/documents", post(create_document))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/expand", post(expand))
        .route("/sessions/{id}/back", post(back))
        .route("/sessions/{id}/scene", get(scene))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
