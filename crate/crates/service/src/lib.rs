//! HTTP front end for steering sessions.
//!
//! Every mutation is appended to the session's action log; with a log
//! directory configured, logs are mirrored to `<dir>/<session>.jsonl` and
//! replayed on start-up.

mod error;
mod store;

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use concord::constraints::ConstraintKind;
use concord::steer::{DeleteOutcome, HistoryEntry, Preview, Session, SessionConfig, SessionLog, SessionMetrics, SessionState};
use serde::{Deserialize, Serialize};
use serde::de::DeserializeOwned;
use tower_http::cors::CorsLayer;

pub use error::ApiError;
pub use store::{CorpusStore, SYNTHETIC_PREFIX};

type Shared = Arc<Mutex<Session>>;

pub struct AppState {
    store: CorpusStore,
    sessions: RwLock<BTreeMap<String, Shared>>,
    next_id: AtomicU64,
    log_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new(store: CorpusStore) -> Self {
        Self { store, sessions: RwLock::default(), next_id: AtomicU64::new(1), log_dir: None }
    }

    /// Mirrors action logs to `dir`, first replaying any logs already there.
    pub fn with_log_dir(mut self, dir: impl Into<PathBuf>) -> concord::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let mut entries: Vec<PathBuf> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        entries.sort();
        let mut max_id = 0;
        for path in entries {
            let id = path.file_stem().expect("has extension").to_string_lossy().into_owned();
            let log = SessionLog::read_lines(&id, BufReader::new(fs::File::open(&path)?))?;
            let session = Session::replay(&log, |r| self.store.load(r))?;
            if let Some(n) = id.strip_prefix('s').and_then(|n| n.parse::<u64>().ok()) {
                max_id = max_id.max(n);
            }
            self.sessions.get_mut().expect("unshared").insert(id, Arc::new(Mutex::new(session)));
        }
        self.next_id = AtomicU64::new(max_id + 1);
        self.log_dir = Some(dir);
        Ok(self)
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.sessions.read().expect("session map").keys().cloned().collect()
    }

    fn fresh_id(&self) -> String {
        format!("s{:04}", self.next_id.fetch_add(1, Ordering::SeqCst))
    }

    fn get(&self, id: &str) -> Result<Shared, ApiError> {
        self.sessions
            .read()
            .expect("session map")
            .get(id)
            .cloned()
            .ok_or_else(|| concord::Error::UnknownSession(id.into()).into())
    }

    fn persist(&self, session: &Session, all: bool) -> Result<(), ApiError> {
        let Some(dir) = &self.log_dir else { return Ok(()) };
        let log = session.log();
        let lines = if all { log } else { SessionLog { session_id: log.session_id, actions: log.actions.last().cloned().into_iter().collect() } };
        let path = dir.join(format!("{}.jsonl", session.id()));
        let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(concord::Error::from)?;
        let mut buf = Vec::new();
        lines.write_lines(&mut buf)?;
        f.write_all(&buf).map_err(concord::Error::from)?;
        Ok(())
    }

    fn insert(&self, session: Session) -> Result<SessionState, ApiError> {
        self.persist(&session, true)?;
        let state = session.state();
        self.sessions.write().expect("session map").insert(session.id().to_string(), Arc::new(Mutex::new(session)));
        Ok(state)
    }

    /// Runs `f` on the session under its lock. Mutating calls persist the
    /// action they appended.
    fn with<T>(&self, id: &str, mutates: bool, f: impl FnOnce(&mut Session) -> Result<T, ApiError>) -> Result<T, ApiError> {
        let shared = self.get(id)?;
        let mut s = shared.lock().map_err(|_| ApiError::internal("session lock poisoned"))?;
        let before = s.log().actions.len();
        let out = f(&mut s)?;
        if mutates && s.log().actions.len() > before {
            self.persist(&s, false)?;
        }
        Ok(out)
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::internal(e.to_string()))?
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(e.to_string()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    pub corpus_ref: String,
    #[serde(default)]
    pub config: SessionConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintRequest {
    pub kind: String,
    pub a: String,
    pub b: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReclusterResponse {
    pub run: HistoryEntry,
    pub state: SessionState,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MetricsPoint {
    pub run_index: usize,
    pub action: String,
    pub metrics: SessionMetrics,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MetricsResponse {
    pub session_id: String,
    pub latest: SessionMetrics,
    pub history: Vec<MetricsPoint>,
}

type AppResult<T> = Result<T, ApiError>;
type Ctx = State<Arc<AppState>>;

async fn create(State(app): Ctx, body: Bytes) -> AppResult<(StatusCode, Json<SessionState>)> {
    let req: CreateRequest = parse(&body)?;
    let state = blocking(move || {
        let (corpus, labels) = app.store.load(&req.corpus_ref)?;
        let session = Session::create(app.fresh_id(), req.corpus_ref, corpus, &labels, req.config)?;
        app.insert(session)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(state)))
}

async fn import(State(app): Ctx, body: Bytes) -> AppResult<(StatusCode, Json<SessionState>)> {
    let mut log: SessionLog = parse(&body)?;
    let state = blocking(move || {
        log.session_id = app.fresh_id();
        let session = Session::replay(&log, |r| app.store.load(r))?;
        app.insert(session)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(state)))
}

async fn list(State(app): Ctx) -> Json<Vec<String>> {
    Json(app.session_ids())
}

async fn show(State(app): Ctx, Path(id): Path<String>) -> AppResult<Json<SessionState>> {
    blocking(move || app.with(&id, false, |s| Ok(s.state()))).await.map(Json)
}

async fn add_constraint(State(app): Ctx, Path(id): Path<String>, body: Bytes) -> AppResult<Json<Preview>> {
    let req: ConstraintRequest = parse(&body)?;
    let kind = ConstraintKind::parse(&req.kind).map_err(|e| ApiError::bad_request(e.to_string()))?;
    blocking(move || {
        app.with(&id, true, |s| s.add_constraint(kind, &req.a, &req.b).map_err(|e| ApiError::from_session(e, s)))
    })
    .await
    .map(Json)
}

async fn remove_constraint(State(app): Ctx, Path((id, idx)): Path<(String, usize)>) -> AppResult<Json<DeleteOutcome>> {
    blocking(move || app.with(&id, true, |s| Ok(s.delete_constraint(idx)?))).await.map(Json)
}

async fn recluster(State(app): Ctx, Path(id): Path<String>) -> AppResult<Json<ReclusterResponse>> {
    blocking(move || {
        app.with(&id, true, |s| {
            let run = s.recluster()?.clone();
            Ok(ReclusterResponse { run, state: s.state() })
        })
    })
    .await
    .map(Json)
}

async fn metrics(State(app): Ctx, Path(id): Path<String>) -> AppResult<Json<MetricsResponse>> {
    blocking(move || {
        app.with(&id, false, |s| {
            Ok(MetricsResponse {
                session_id: s.id().to_string(),
                latest: s.latest_metrics().clone(),
                history: s
                    .history()
                    .iter()
                    .map(|h| MetricsPoint { run_index: h.run_index, action: h.action.clone(), metrics: h.metrics.clone() })
                    .collect(),
            })
        })
    })
    .await
    .map(Json)
}

async fn export(State(app): Ctx, Path(id): Path<String>) -> AppResult<Json<SessionLog>> {
    blocking(move || app.with(&id, false, |s| Ok(s.log()))).await.map(Json)
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create).get(list))
        .route("/sessions/import", post(import))
        .route("/sessions/{id}", get(show))
        .route("/sessions/{id}/constraints", post(add_constraint))
        .route("/sessions/{id}/constraints/{idx}", delete(remove_constraint))
        .route("/sessions/{id}/recluster", post(recluster))
        .route("/sessions/{id}/metrics", get(metrics))
        .route("/sessions/{id}/export", get(export))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Serves `state` on `addr` until the process is stopped.
pub async fn serve(addr: std::net::SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    serve_on(listener, state).await
}

/// Serves `state` on an already bound listener.
pub async fn serve_on(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(Arc::new(state))).await
}
