use super::{parse_results, BindingsTable, Dialect, EndpointConfig, QueryResults, SparqlError};
use reqwest::header::{ACCEPT, CONTENT_TYPE};
use std::collections::HashSet;
use std::sync::{Arc, Mutex};
use std::time::Duration;
use tokio::sync::Semaphore;

const RESULTS_JSON: &str = "application/sparql-results+json";
const EXCERPT_LEN: usize = 300;

/// Shared HTTP client for SPARQL endpoints.
///
/// Cloning is cheap; clones share the connection pool, the in-flight request
/// limit and the record of endpoints downgraded to regex search.
#[derive(Debug, Clone)]
pub struct SparqlClient {
    http: reqwest::Client,
    limit: Arc<Semaphore>,
    downgraded: Arc<Mutex<HashSet<String>>>,
    backoff: Duration,
}

impl Default for SparqlClient {
    fn default() -> Self {
        Self::new(8)
    }
}

impl SparqlClient {
    /// `connection_limit` bounds concurrent requests across all endpoints.
    pub fn new(connection_limit: usize) -> Self {
        SparqlClient {
            http: reqwest::Client::new(),
            limit: Arc::new(Semaphore::new(connection_limit.max(1))),
            downgraded: Arc::new(Mutex::new(HashSet::new())),
            backoff: Duration::from_millis(100),
        }
    }

    /// Base delay between retries; doubles after every failed attempt.
    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    /// Dialect to use for `cfg`, accounting for earlier downgrades.
    pub fn dialect_for(&self, cfg: &EndpointConfig) -> Dialect {
        if self.downgraded.lock().unwrap().contains(&cfg.url) {
            Dialect::GenericRegex
        } else {
            cfg.dialect
        }
    }

    /// Makes every later text search against `url` use regex filters.
    pub fn downgrade(&self, url: &str) {
        if self.downgraded.lock().unwrap().insert(url.to_string()) {
            tracing::warn!(url, "endpoint rejected free-text search; falling back to regex");
        }
    }

    pub async fn execute(&self, cfg: &EndpointConfig, query: &str) -> Result<QueryResults, SparqlError> {
        let body = self.fetch(cfg, query).await?;
        parse_results(&body)
    }

    pub async fn execute_select(&self, cfg: &EndpointConfig, query: &str) -> Result<BindingsTable, SparqlError> {
        match self.execute(cfg, query).await? {
            QueryResults::Bindings(t) => Ok(t),
            QueryResults::Boolean(_) => Err(SparqlError::MalformedResults("expected bindings, got a boolean".into())),
        }
    }

    pub async fn execute_ask(&self, cfg: &EndpointConfig, query: &str) -> Result<bool, SparqlError> {
        match self.execute(cfg, query).await? {
            QueryResults::Boolean(b) => Ok(b),
            QueryResults::Bindings(_) => Err(SparqlError::MalformedResults("expected a boolean, got bindings".into())),
        }
    }

    async fn fetch(&self, cfg: &EndpointConfig, query: &str) -> Result<String, SparqlError> {
        let mut form: Vec<(&str, &str)> = vec![("query", query)];
        if let Some(g) = &cfg.default_graph {
            form.push(("default-graph-uri", g));
        }
        let mut attempt = 0;
        loop {
            attempt += 1;
            let outcome = {
                let _permit = self.limit.acquire().await.expect("semaphore is never closed");
                self.send_once(cfg, &form).await
            };
            match outcome {
                Ok(body) => return Ok(body),
                Err(Failure::Http(e)) => return Err(e),
                Err(Failure::Transport(message)) => {
                    if attempt > cfg.max_retries {
                        return Err(SparqlError::Transport { attempts: attempt, message });
                    }
                    let delay = self.backoff * 2u32.saturating_pow(attempt - 1);
                    tracing::debug!(url = %cfg.url, attempt, ?delay, %message, "retrying SPARQL request");
                    tokio::time::sleep(delay).await;
                }
            }
        }
    }

    async fn send_once(&self, cfg: &EndpointConfig, form: &[(&str, &str)]) -> Result<String, Failure> {
        let reply = self
            .http
            .post(&cfg.url)
            .header(ACCEPT, RESULTS_JSON)
            .timeout(cfg.request_timeout)
            .form(form)
            .send()
            .await
            .map_err(|e| Failure::Transport(e.to_string()))?;
        let status = reply.status();
        let is_json = reply
            .headers()
            .get(CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .is_some_and(|v| v.contains("json"));
        let body = reply.text().await.map_err(|e| Failure::Transport(e.to_string()))?;
        if !status.is_success() {
            let excerpt: String = body.chars().take(EXCERPT_LEN).collect();
            return Err(Failure::Http(SparqlError::EndpointError { status: status.as_u16(), excerpt }));
        }
        if !is_json {
            tracing::debug!(url = %cfg.url, "response lacks a JSON content type; parsing anyway");
        }
        Ok(body)
    }
}

enum Failure {
    Transport(String),
    Http(SparqlError),
}
