//! HTTP/JSON session API. Every response carries `schema_version`.
//!
//! ```text
//! POST /v1/sessions                  create from csv text, a path or a fixture
//! GET  /v1/sessions                  list
//! GET  /v1/sessions/{id}             summary
//! GET  /v1/sessions/{id}/question    pending question and graph snapshot
//! POST /v1/sessions/{id}/answer      {query_id, answer}
//! GET  /v1/sessions/{id}/trace       JSON, or CSV with ?format=csv
//! GET  /v1/sessions/{id}/metrics
//! ```

mod session;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use edgecert::model::{parse_edge_list, Config};
use edgecert::oracle::OracleAnswer;
use edgecert::synth::{fixture_dir, read_manifest};
use serde::Deserialize;
use serde_json::{json, Value};

pub use session::{saved_sessions, Session, SessionMeta, Status};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Default)]
pub struct AppState {
    sessions: RwLock<BTreeMap<String, Arc<Session>>>,
    state_dir: Option<PathBuf>,
}

pub type Shared = Arc<AppState>;

impl AppState {
    /// Loads every saved session under `state_dir`; a session that fails to
    /// replay is skipped with a warning.
    pub fn open(state_dir: Option<PathBuf>) -> Self {
        let mut sessions = BTreeMap::new();
        if let Some(root) = &state_dir {
            for dir in saved_sessions(root) {
                match Session::load(&dir) {
                    Ok(s) => {
                        log::info!("resumed session {}", s.meta.id);
                        sessions.insert(s.meta.id.clone(), Arc::new(s));
                    }
                    Err(e) => log::warn!("skipping {}: {e:#}", dir.display()),
                }
            }
        }
        AppState {
            sessions: RwLock::new(sessions),
            state_dir,
        }
    }

    fn get(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no session {id}")))
    }
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/v1/sessions", post(create).get(list))
        .route("/v1/sessions/{id}", get(summary))
        .route("/v1/sessions/{id}/question", get(question))
        .route("/v1/sessions/{id}/answer", post(answer))
        .route("/v1/sessions/{id}/trace", get(trace))
        .route("/v1/sessions/{id}/metrics", get(metrics))
        .with_state(state)
}

pub async fn serve(addr: std::net::SocketAddr, state_dir: Option<PathBuf>) -> anyhow::Result<()> {
    if let Some(d) = &state_dir {
        std::fs::create_dir_all(d)?;
    }
    let state = Arc::new(AppState::open(state_dir));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
    }
}

impl From<edgecert::Error> for ApiError {
    fn from(e: edgecert::Error) -> Self {
        use edgecert::Error as E;
        let (status, code) = match &e {
            E::StaleQuery { .. } => (StatusCode::CONFLICT, "stale_query"),
            E::AnswerMismatch(_) => (StatusCode::UNPROCESSABLE_ENTITY, "answer_mismatch"),
            E::InconsistentAnswer { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "inconsistent_answer"),
            E::InvalidConfig(_) => (StatusCode::BAD_REQUEST, "invalid_config"),
            E::MalformedData(_) | E::Csv(_) | E::TooFewSamples { .. } | E::LengthMismatch { .. } => {
                (StatusCode::BAD_REQUEST, "malformed_data")
            }
            E::MalformedEdgeList { .. } | E::UnknownVariable(_) => (StatusCode::BAD_REQUEST, "malformed_gt"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({
            "schema_version": SCHEMA_VERSION,
            "error": { "code": self.code, "message": self.message },
        });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

fn ok(status: StatusCode, mut body: Value) -> ApiResult {
    body["schema_version"] = json!(SCHEMA_VERSION);
    Ok((status, Json(body)).into_response())
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    /// Inline CSV text.
    pub csv: Option<String>,
    /// Server-side file.
    pub path: Option<PathBuf>,
    /// Name from the fixture manifest; also supplies the ground truth.
    pub fixture: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
pub struct CreateRequest {
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub config: Option<Config>,
    /// Edge list text, one `from to` pair per line; used for metrics.
    #[serde(default)]
    pub gt: Option<String>,
}

fn read_text(p: &std::path::Path) -> Result<String, ApiError> {
    std::fs::read_to_string(p).map_err(|e| {
        ApiError::new(StatusCode::BAD_REQUEST, "malformed_data", format!("{}: {e}", p.display()))
    })
}

fn resolve_dataset(spec: &DatasetSpec) -> Result<(String, Option<String>, Option<String>), ApiError> {
    let bad = |m: &str| ApiError::new(StatusCode::BAD_REQUEST, "malformed_data", m);
    match (&spec.csv, &spec.path, &spec.fixture) {
        (Some(text), None, None) => Ok((text.clone(), None, None)),
        (None, Some(p), None) => Ok((read_text(p)?, None, Some(p.display().to_string()))),
        (None, None, Some(name)) => {
            let dir = fixture_dir();
            let f = read_manifest(&dir)?
                .into_iter()
                .find(|f| &f.name == name)
                .ok_or_else(|| bad(&format!("no fixture named {name:?}")))?;
            Ok((read_text(&dir.join(&f.csv))?, Some(read_text(&dir.join(&f.gt))?), Some(name.clone())))
        }
        _ => Err(bad("dataset needs exactly one of csv, path or fixture")),
    }
}

async fn create(State(st): State<Shared>, Json(req): Json<CreateRequest>) -> ApiResult {
    let (csv, fixture_gt, label) = resolve_dataset(&req.dataset)?;
    let config = req.config.unwrap_or_default();
    config.validate()?;
    let gt_text = req.gt.or(fixture_gt);
    let id = uuid::Uuid::new_v4().simple().to_string();
    let s = blocking(move || -> Result<Session, ApiError> {
        let gt = match gt_text {
            Some(t) => {
                let names: Vec<String> = edgecert::model::Dataset::from_csv_reader(csv.as_bytes())?
                    .names()
                    .to_vec();
                let edges = parse_edge_list(&t, &names)
                    .map_err(|m| ApiError::new(StatusCode::BAD_REQUEST, "malformed_gt", m))?;
                Some(edges.into_iter().collect::<BTreeSet<_>>())
            }
            None => None,
        };
        Ok(Session::create(id, label, csv, config, gt)?)
    })
    .await??;
    if let Some(root) = &st.state_dir {
        s.save(root).map_err(ApiError::internal)?;
    }
    let s = Arc::new(s);
    let body = {
        let p = s.lock();
        json!({ "session": s.summary(&p) })
    };
    st.sessions
        .write()
        .unwrap_or_else(|e| e.into_inner())
        .insert(s.meta.id.clone(), s);
    ok(StatusCode::CREATED, body)
}

async fn list(State(st): State<Shared>) -> ApiResult {
    let all: Vec<Arc<Session>> = st.sessions.read().unwrap_or_else(|e| e.into_inner()).values().cloned().collect();
    let items: Vec<Value> = all
        .iter()
        .map(|s| {
            json!({
                "id": s.meta.id,
                "label": s.meta.label,
                "status": s.status_now(),
                "fingerprint": s.meta.fingerprint,
            })
        })
        .collect();
    ok(StatusCode::OK, json!({ "sessions": items }))
}

async fn summary(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult {
    let s = st.get(&id)?;
    let body = blocking(move || {
        let p = s.lock();
        json!({ "session": s.summary(&p) })
    })
    .await?;
    ok(StatusCode::OK, body)
}

async fn question(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult {
    let s = st.get(&id)?;
    let body = blocking(move || {
        let p = s.lock();
        json!({
            "status": s.status(&p),
            "question": p.pending().map(|q| s.question(q)),
            "dag": s.dag_snapshot(&p),
        })
    })
    .await?;
    ok(StatusCode::OK, body)
}

#[derive(Debug, Deserialize)]
pub struct AnswerRequest {
    pub query_id: u64,
    pub answer: String,
}

async fn answer(State(st): State<Shared>, Path(id): Path<String>, Json(req): Json<AnswerRequest>) -> ApiResult {
    let s = st.get(&id)?;
    let a: OracleAnswer = req
        .answer
        .parse()
        .map_err(|e: edgecert::Error| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "answer_mismatch", e.to_string()))?;
    let root = st.state_dir.clone();
    let body = blocking(move || -> Result<Value, ApiError> {
        let Some(_busy) = s.try_begin() else {
            return Err(ApiError::new(StatusCode::CONFLICT, "busy", "another answer is being applied"));
        };
        let (out, next) = s.answer(req.query_id, a)?;
        if let Some(root) = &root {
            s.save_trace(root).map_err(ApiError::internal)?;
        }
        drop(_busy);
        let p = s.lock();
        Ok(json!({
            "accepted": { "query_id": out.query.id, "answer": out.answer },
            "propagation": s.report(&out.report),
            "guarantee": out.guarantee,
            "status": s.status(&p),
            "question": next.as_ref().map(|q| s.question(q)),
            "dag": s.dag_snapshot(&p),
        }))
    })
    .await??;
    ok(StatusCode::OK, body)
}

#[derive(Debug, Deserialize)]
pub struct TraceParams {
    pub format: Option<String>,
}

async fn trace(State(st): State<Shared>, Path(id): Path<String>, Query(q): Query<TraceParams>) -> ApiResult {
    let s = st.get(&id)?;
    let t = blocking(move || s.lock().trace().clone()).await?;
    match q.format.as_deref() {
        Some("csv") => Ok(([(header::CONTENT_TYPE, "text/csv")], t.to_csv_string()).into_response()),
        None | Some("json") => ok(StatusCode::OK, json!({ "events": t.to_json() })),
        Some(other) => Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "bad_format",
            format!("unknown trace format {other:?}"),
        )),
    }
}

async fn metrics(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult {
    let s = st.get(&id)?;
    let body = blocking(move || {
        let p = s.lock();
        json!({ "status": s.status(&p), "metrics": s.metrics(&p) })
    })
    .await?;
    ok(StatusCode::OK, body)
}
