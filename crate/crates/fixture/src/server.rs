//! SPARQL 1.1 protocol front-end for a [`TripleStore`].

use crate::query::{self, Extensions, QueryResult};
use crate::store::{Term, TripleStore};
use axum::extract::{FromRequest, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Form, Router};
use serde::Deserialize;
use serde_json::{json, Map, Value};
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

pub const RESULTS_JSON: &str = "application/sparql-results+json";

#[derive(Debug, Clone, Default)]
pub struct FixtureOptions {
    pub extensions: Extensions,
    /// Artificial latency added before every response.
    pub delay: Option<Duration>,
}

#[derive(Debug)]
pub struct FixtureState {
    store: TripleStore,
    options: FixtureOptions,
    log: Mutex<Vec<String>>,
    requests: AtomicUsize,
}

impl FixtureState {
    pub fn new(store: TripleStore, options: FixtureOptions) -> Arc<Self> {
        Arc::new(FixtureState { store, options, log: Mutex::new(Vec::new()), requests: AtomicUsize::new(0) })
    }

    /// Every query text received so far, in arrival order.
    pub fn query_log(&self) -> Vec<String> {
        self.log.lock().unwrap().clone()
    }

    pub fn clear_log(&self) {
        self.log.lock().unwrap().clear();
    }

    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    /// Runs a query directly and renders the SPARQL JSON results document.
    pub fn answer(&self, query_text: &str) -> Result<Value, query::SyntaxError> {
        let q = query::parse(query_text, self.options.extensions)?;
        Ok(render_results(&query::evaluate(&q, &self.store)?))
    }
}

pub fn router(state: Arc<FixtureState>) -> Router {
    Router::new().route("/sparql", get(handle_get).post(handle_post)).with_state(state)
}

#[derive(Debug, Deserialize)]
struct QueryParams {
    query: String,
}

async fn handle_get(State(state): State<Arc<FixtureState>>, Query(params): Query<QueryParams>) -> Response {
    respond(&state, params.query).await
}

async fn handle_post(State(state): State<Arc<FixtureState>>, headers: HeaderMap, req: Request) -> Response {
    let content_type = headers.get(header::CONTENT_TYPE).and_then(|v| v.to_str().ok()).unwrap_or_default();
    let text = if content_type.starts_with("application/sparql-query") {
        match axum::body::to_bytes(req.into_body(), 1 << 20).await {
            Ok(b) => String::from_utf8_lossy(&b).into_owned(),
            Err(e) => return (StatusCode::BAD_REQUEST, e.to_string()).into_response(),
        }
    } else {
        match Form::<QueryParams>::from_request(req, &()).await {
            Ok(Form(p)) => p.query,
            Err(e) => return (StatusCode::BAD_REQUEST, e.to_string()).into_response(),
        }
    };
    respond(&state, text).await
}

async fn respond(state: &FixtureState, text: String) -> Response {
    state.requests.fetch_add(1, Ordering::SeqCst);
    state.log.lock().unwrap().push(text.clone());
    if let Some(delay) = state.options.delay {
        tokio::time::sleep(delay).await;
    }
    match state.answer(&text) {
        Ok(body) => ([(header::CONTENT_TYPE, RESULTS_JSON)], body.to_string()).into_response(),
        Err(e) => {
            tracing::debug!(error = %e, "rejecting query");
            (StatusCode::BAD_REQUEST, format!("Virtuoso 37000 Error SP030: SPARQL compiler: {e}")).into_response()
        }
    }
}

fn render_term(t: &Term) -> Value {
    match t {
        Term::Iri(v) => json!({"type": "uri", "value": v}),
        Term::Blank(v) => json!({"type": "bnode", "value": v}),
        Term::Literal { value, datatype, lang } => {
            let mut m = Map::new();
            m.insert("type".into(), json!("literal"));
            m.insert("value".into(), json!(value));
            if let Some(dt) = datatype {
                m.insert("datatype".into(), json!(dt));
            }
            if let Some(l) = lang {
                m.insert("xml:lang".into(), json!(l));
            }
            Value::Object(m)
        }
    }
}

pub fn render_results(result: &QueryResult) -> Value {
    match result {
        QueryResult::Ask(b) => json!({"head": {}, "boolean": b}),
        QueryResult::Select { variables, rows } => {
            let bindings: Vec<Value> = rows
                .iter()
                .map(|row| {
                    let m: Map<String, Value> = variables
                        .iter()
                        .filter_map(|v| row.get(v).map(|t| (v.clone(), render_term(t))))
                        .collect();
                    Value::Object(m)
                })
                .collect();
            json!({"head": {"vars": variables}, "results": {"bindings": bindings}})
        }
    }
}

/// A fixture endpoint running on a background task.
pub struct FixtureServer {
    pub addr: SocketAddr,
    pub state: Arc<FixtureState>,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
}

impl FixtureServer {
    /// Binds `127.0.0.1:0` and serves until dropped.
    pub async fn spawn(store: TripleStore, options: FixtureOptions) -> std::io::Result<Self> {
        Self::spawn_on("127.0.0.1:0".parse().unwrap(), store, options).await
    }

    pub async fn spawn_on(addr: SocketAddr, store: TripleStore, options: FixtureOptions) -> std::io::Result<Self> {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        let addr = listener.local_addr()?;
        let state = FixtureState::new(store, options);
        let app = router(state.clone());
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        tokio::spawn(async move {
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
        Ok(FixtureServer { addr, state, shutdown: Some(tx) })
    }

    pub fn url(&self) -> String {
        format!("http://{}/sparql", self.addr)
    }
}

impl Drop for FixtureServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}
