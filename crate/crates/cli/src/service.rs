//! JSON HTTP API over a shared [`Engine`].
//!
//! | route                | body                                                   |
//! |----------------------|--------------------------------------------------------|
//! | `POST /api/answer`   | `{question, endpoint_url?, dialect?, overrides?}`      |
//! | `POST /api/execute`  | `{query, endpoint_url?, dialect?}`                     |
//! | `POST /api/benchmark`| multipart form with a `file` field                     |
//! | `GET /api/config`    | none                                                   |
//! | `GET /api/health`    | none                                                   |
//!
//! Failures answer `{"error": {phase, kind, message}}`.

use axum::extract::{DefaultBodyLimit, Multipart, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use kgqa::metrics::{parse_benchmark, BenchmarkError};
use kgqa::pipeline::{answer_question, run_benchmark, ConfigOverrides, Engine, Phase, PipelineError};
use kgqa::sparql::Dialect;
use serde::Deserialize;
use serde_json::{json, Value};
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

/// Appends one JSON object per handled request.
#[derive(Debug, Clone)]
pub struct RequestLog {
    file: Arc<Mutex<File>>,
}

impl RequestLog {
    pub fn create(path: &Path) -> std::io::Result<Self> {
        let file = File::options().create(true).append(true).open(path)?;
        Ok(RequestLog { file: Arc::new(Mutex::new(file)) })
    }

    pub fn record(&self, mut entry: Value) {
        let ts = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
        entry["ts"] = json!(ts);
        let mut f = self.file.lock().unwrap();
        if let Err(e) = writeln!(f, "{entry}") {
            tracing::warn!(error = %e, "request log write failed");
        }
    }
}

pub struct AppState {
    pub engine: Engine,
    pub log: Option<RequestLog>,
}

type Shared = Arc<AppState>;

impl AppState {
    fn record(&self, route: &str, status: StatusCode, started: Instant, extra: Value) {
        if let Some(log) = &self.log {
            let mut entry = json!({
                "route": route,
                "status": status.as_u16(),
                "elapsed_ms": started.elapsed().as_secs_f64() * 1e3,
            });
            if let (Some(e), Value::Object(extra)) = (entry.as_object_mut(), extra) {
                e.extend(extra);
            }
            log.record(entry);
        }
    }
}

struct ApiError {
    status: StatusCode,
    error: PipelineError,
}

impl ApiError {
    fn bad_request(kind: &str, message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            error: PipelineError { phase: Phase::Config, kind: kind.into(), message: message.into() },
        }
    }
}

impl From<PipelineError> for ApiError {
    fn from(error: PipelineError) -> Self {
        let status = match (error.phase, error.kind.as_str()) {
            (Phase::Config, _) => StatusCode::BAD_REQUEST,
            (Phase::Understanding, "transport") => StatusCode::BAD_GATEWAY,
            (Phase::Understanding, _) => StatusCode::UNPROCESSABLE_ENTITY,
            (_, "syntax") => StatusCode::BAD_REQUEST,
            (_, "transport" | "endpoint" | "all_plans_failed") => StatusCode::BAD_GATEWAY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError { status, error }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.error }))).into_response()
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/config", get(config))
        .route("/api/answer", post(answer))
        .route("/api/execute", post(execute))
        .route("/api/benchmark", post(benchmark))
        .layer(DefaultBodyLimit::max(8 << 20))
        .with_state(state)
}

/// Engine for one request: the shared one with per-request settings on top.
fn request_engine(
    state: &AppState,
    endpoint_url: Option<String>,
    dialect: Option<Dialect>,
    overrides: ConfigOverrides,
) -> Result<Engine, ApiError> {
    if overrides.embeddings.is_some() {
        return Err(ApiError::bad_request("invalid", "embeddings cannot be changed per request"));
    }
    let top = ConfigOverrides { endpoint_url, dialect, ..Default::default() };
    Ok(state.engine.reconfigured(&overrides.merge(&top))?)
}

async fn health(State(state): State<Shared>) -> Json<Value> {
    Json(json!({ "status": "ok", "endpoint": state.engine.config().endpoint.url }))
}

async fn config(State(state): State<Shared>) -> Json<Value> {
    Json(serde_json::to_value(state.engine.config()).expect("config serializes"))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnswerRequest {
    question: String,
    #[serde(default)]
    endpoint_url: Option<String>,
    #[serde(default)]
    dialect: Option<Dialect>,
    #[serde(default)]
    overrides: ConfigOverrides,
}

async fn answer(State(state): State<Shared>, Json(req): Json<AnswerRequest>) -> Response {
    let started = Instant::now();
    let question = req.question.clone();
    let result = async {
        let engine = request_engine(&state, req.endpoint_url, req.dialect, req.overrides)?;
        Ok::<_, ApiError>(answer_question(&engine, &req.question).await?)
    }
    .await;
    match result {
        Ok(outcome) => {
            let extra = json!({ "question": question, "answers": outcome.answers.kept.len() });
            state.record("answer", StatusCode::OK, started, extra);
            Json(outcome).into_response()
        }
        Err(e) => {
            state.record("answer", e.status, started, json!({ "question": question, "error": e.error.message }));
            e.into_response()
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExecuteRequest {
    query: String,
    #[serde(default)]
    endpoint_url: Option<String>,
    #[serde(default)]
    dialect: Option<Dialect>,
}

async fn execute(State(state): State<Shared>, Json(req): Json<ExecuteRequest>) -> Response {
    let started = Instant::now();
    let result = async {
        if req.query.trim().is_empty() {
            return Err(ApiError::bad_request("empty_query", "query is empty"));
        }
        let engine = request_engine(&state, req.endpoint_url, req.dialect, ConfigOverrides::default())?;
        Ok(engine.execute_raw(&req.query).await?)
    }
    .await;
    match result {
        Ok(results) => {
            state.record("execute", StatusCode::OK, started, json!({}));
            Json(json!({ "results": results })).into_response()
        }
        Err(e) => {
            state.record("execute", e.status, started, json!({ "error": e.error.message }));
            e.into_response()
        }
    }
}

async fn benchmark(State(state): State<Shared>, mut form: Multipart) -> Response {
    let started = Instant::now();
    let result = async {
        let mut text = None;
        while let Some(field) = form.next_field().await.map_err(|e| ApiError::bad_request("multipart", e.to_string()))? {
            if field.name() == Some("file") {
                text = Some(field.text().await.map_err(|e| ApiError::bad_request("multipart", e.to_string()))?);
            }
        }
        let text = text.ok_or_else(|| ApiError::bad_request("multipart", "missing 'file' field"))?;
        let items = parse_benchmark(&text).map_err(|e| {
            let kind = match e {
                BenchmarkError::Malformed { .. } => "malformed_benchmark",
                BenchmarkError::Empty => "empty_benchmark",
            };
            ApiError::bad_request(kind, e.to_string())
        })?;
        Ok::<_, ApiError>(run_benchmark(&state.engine, &items).await)
    }
    .await;
    match result {
        Ok(report) => {
            let extra = json!({ "questions": report.evaluation.per_question.len(), "macro_f1": report.evaluation.macro_scores.f1 });
            state.record("benchmark", StatusCode::OK, started, extra);
            Json(report).into_response()
        }
        Err(e) => {
            state.record("benchmark", e.status, started, json!({ "error": e.error.message }));
            e.into_response()
        }
    }
}
