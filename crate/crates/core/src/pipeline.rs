//! End-to-end question answering: understanding, linking, execution.

use crate::affinity::{AffinityError, CoarseProvider, EmbeddingStore, Scorer};
use crate::execution::{execute_plans, filter_answers, AnswerSet, ExecError, DEFAULT_PARALLELISM, DEFAULT_TAU};
use crate::graph::{build_pgp, classify_shape, Agp, Pgp, Shape};
use crate::linker::{LinkError, Linker, LinkerParams, ProbeLog};
use crate::metrics::{score_question, BenchmarkItem, EvaluationReport, QuestionReport};
use crate::planner::{plan, PlanError, QueryPlan, DEFAULT_TOP_K};
use crate::sparql::{Dialect, EndpointConfig, QueryResults, SparqlClient};
use crate::understanding::{AnswerTypePrediction, DataType, QuProvider, QuProviderConfig};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};
use thiserror::Error;

/// Dimension of the character-trigram vectors used when no word vectors
/// are configured.
pub const CHAR_ONLY_DIMENSION: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub endpoint: EndpointConfig,
    pub linker: LinkerParams,
    /// Number of ranked plans to execute.
    pub top_k: usize,
    pub qu: QuProviderConfig,
    /// Word vectors in text format. Without them every token falls back to
    /// character trigrams.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedding_path: Option<PathBuf>,
    /// Whole-label embedding service; replaces word vectors for linking.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coarse_url: Option<String>,
    /// Minimum class affinity for a typed answer to survive the filter.
    pub tau: f64,
    /// Plans executed concurrently.
    pub parallelism: usize,
    /// Requests in flight across all endpoints.
    pub connection_limit: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            endpoint: EndpointConfig::new("http://localhost:8890/sparql"),
            linker: LinkerParams::default(),
            top_k: DEFAULT_TOP_K,
            qu: QuProviderConfig::default(),
            embedding_path: None,
            coarse_url: None,
            tau: DEFAULT_TAU,
            parallelism: DEFAULT_PARALLELISM,
            connection_limit: 8,
        }
    }
}

/// Partial settings layered over a [`PipelineConfig`]. Config files, command
/// line flags and API requests all go through this one type.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigOverrides {
    pub endpoint_url: Option<String>,
    pub dialect: Option<Dialect>,
    pub embeddings: Option<PathBuf>,
    pub max_vr: Option<usize>,
    pub k_vertices: Option<usize>,
    pub k_predicates: Option<usize>,
    pub max_queries: Option<usize>,
    pub tau: Option<f64>,
    pub parallelism: Option<usize>,
    pub qu_url: Option<String>,
    pub coarse_url: Option<String>,
}

impl ConfigOverrides {
    pub fn is_empty(&self) -> bool {
        *self == ConfigOverrides::default()
    }

    /// Fields set in `other` win.
    pub fn merge(mut self, other: &ConfigOverrides) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f.clone(); } )* };
        }
        take!(endpoint_url, dialect, embeddings, max_vr, k_vertices, k_predicates, max_queries, tau, parallelism, qu_url, coarse_url);
        self
    }
}

impl PipelineConfig {
    pub fn apply(&mut self, o: &ConfigOverrides) {
        if let Some(v) = &o.endpoint_url {
            self.endpoint.url = v.clone();
        }
        if let Some(v) = o.dialect {
            self.endpoint.dialect = v;
        }
        if let Some(v) = &o.embeddings {
            self.embedding_path = Some(v.clone());
        }
        if let Some(v) = o.max_vr {
            self.linker.max_fetched_vertices = v;
        }
        if let Some(v) = o.k_vertices {
            self.linker.vertices_per_node = v;
        }
        if let Some(v) = o.k_predicates {
            self.linker.predicates_per_edge = v;
        }
        if let Some(v) = o.max_queries {
            self.top_k = v;
        }
        if let Some(v) = o.tau {
            self.tau = v;
        }
        if let Some(v) = o.parallelism {
            self.parallelism = v;
        }
        if let Some(v) = &o.qu_url {
            self.qu = QuProviderConfig { timeout: self.qu.timeout, ..QuProviderConfig::remote(v.clone()) };
        }
        if let Some(v) = &o.coarse_url {
            self.coarse_url = Some(v.clone());
        }
    }

    pub fn with_overrides(mut self, o: &ConfigOverrides) -> Self {
        self.apply(o);
        self
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let config = |m: String| PipelineError::new(Phase::Config, m);
        self.endpoint.validate().map_err(|e| config(e.to_string()))?;
        self.linker.validate().map_err(|e| config(e.to_string()))?;
        self.qu.validate().map_err(|e| config(e.to_string()))?;
        if self.top_k == 0 {
            return Err(config("top_k must be positive".into()));
        }
        if self.parallelism == 0 || self.connection_limit == 0 {
            return Err(config("parallelism and connection_limit must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(config(format!("tau {} is outside [0, 1]", self.tau)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Config,
    Understanding,
    Linking,
    Planning,
    Execution,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::Config => "config",
            Phase::Understanding => "understanding",
            Phase::Linking => "linking",
            Phase::Planning => "planning",
            Phase::Execution => "execution",
        })
    }
}

/// Failure of one pipeline phase.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{phase} failed: {message}")]
pub struct PipelineError {
    pub phase: Phase,
    /// Short machine-readable cause, such as `transport` or `no_patterns`.
    pub kind: String,
    pub message: String,
}

impl PipelineError {
    pub fn new(phase: Phase, message: impl Into<String>) -> Self {
        PipelineError { phase, kind: "invalid".into(), message: message.into() }
    }

    fn with_kind(phase: Phase, kind: &str, message: impl Into<String>) -> Self {
        PipelineError { phase, kind: kind.into(), message: message.into() }
    }
}

fn link_error(e: LinkError) -> PipelineError {
    let kind = match &e {
        LinkError::Sparql(crate::sparql::SparqlError::Transport { .. }) | LinkError::Unanchored(_) => "transport",
        LinkError::Sparql(_) => "endpoint",
        LinkError::Affinity(_) => "affinity",
        LinkError::NoAnchorVertices(_) => "unanchored",
        LinkError::InvalidParams(_) => "invalid",
    };
    PipelineError::with_kind(Phase::Linking, kind, e.to_string())
}

/// Wall-clock time per phase. Planning counts towards execution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    #[serde(with = "crate::serde_secs")]
    pub understanding: Duration,
    #[serde(with = "crate::serde_secs")]
    pub linking: Duration,
    #[serde(with = "crate::serde_secs")]
    pub execution: Duration,
    #[serde(with = "crate::serde_secs")]
    pub total: Duration,
}

impl PhaseTimings {
    pub fn phase_sum(&self) -> Duration {
        self.understanding + self.linking + self.execution
    }

    /// Component-wise mean.
    pub fn mean(all: &[PhaseTimings]) -> PhaseTimings {
        if all.is_empty() {
            return PhaseTimings::default();
        }
        let n = all.len() as u32;
        let sum = |f: fn(&PhaseTimings) -> Duration| all.iter().map(f).sum::<Duration>() / n;
        PhaseTimings {
            understanding: sum(|t| t.understanding),
            linking: sum(|t| t.linking),
            execution: sum(|t| t.execution),
            total: sum(|t| t.total),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub question: String,
    pub answers: AnswerSet,
    pub plans: Vec<QueryPlan>,
    pub pgp: Pgp,
    pub agp: Agp,
    pub shape: Shape,
    pub prediction: AnswerTypePrediction,
    pub timings: PhaseTimings,
    pub diagnostics: Vec<String>,
}

/// Shared, read-only state for answering questions.
#[derive(Debug, Clone)]
pub struct Engine {
    config: PipelineConfig,
    client: SparqlClient,
    store: Arc<EmbeddingStore>,
    scorer: Scorer,
    qu: QuProvider,
    probe_log: ProbeLog,
}

fn load_store(config: &PipelineConfig) -> Result<EmbeddingStore, PipelineError> {
    match &config.embedding_path {
        Some(path) => EmbeddingStore::load(path).map_err(|e| {
            let message = match e {
                AffinityError::Load { line: 0, message } => message,
                other => format!("{}: {other}", path.display()),
            };
            PipelineError::new(Phase::Config, message)
        }),
        None => Ok(EmbeddingStore::char_only(CHAR_ONLY_DIMENSION)),
    }
}

impl Engine {
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let store = load_store(&config)?;
        Self::build(config, Arc::new(store), None)
    }

    /// Uses an already loaded embedding store, ignoring `embedding_path`.
    pub fn with_store(config: PipelineConfig, store: EmbeddingStore) -> Result<Self, PipelineError> {
        config.validate()?;
        Self::build(config, Arc::new(store), None)
    }

    fn build(config: PipelineConfig, store: Arc<EmbeddingStore>, client: Option<SparqlClient>) -> Result<Self, PipelineError> {
        let qu = QuProvider::from_config(&config.qu).map_err(|e| PipelineError::new(Phase::Config, e.to_string()))?;
        let scorer = match &config.coarse_url {
            Some(url) => Scorer::Coarse(
                CoarseProvider::new(url, config.qu.timeout).map_err(|e| PipelineError::new(Phase::Config, e.to_string()))?,
            ),
            None => Scorer::Fine(store.clone()),
        };
        let client = client.unwrap_or_else(|| SparqlClient::new(config.connection_limit));
        Ok(Engine { config, client, store, scorer, qu, probe_log: ProbeLog::new() })
    }

    /// A copy with `overrides` applied. Connections, the probe log and,
    /// unless the embedding path changes, the word vectors are shared.
    pub fn reconfigured(&self, overrides: &ConfigOverrides) -> Result<Self, PipelineError> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let config = self.config.clone().with_overrides(overrides);
        config.validate()?;
        let store = if config.embedding_path == self.config.embedding_path {
            self.store.clone()
        } else {
            Arc::new(load_store(&config)?)
        };
        let mut engine = Self::build(config, store, Some(self.client.clone()))?;
        engine.probe_log = self.probe_log.clone();
        Ok(engine)
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn client(&self) -> &SparqlClient {
        &self.client
    }

    pub fn store(&self) -> &EmbeddingStore {
        &self.store
    }

    /// Every linking probe sent by this engine and its reconfigured copies.
    pub fn probe_log(&self) -> &ProbeLog {
        &self.probe_log
    }

    pub fn linker(&self) -> Result<Linker, PipelineError> {
        Linker::new(self.client.clone(), self.config.endpoint.clone(), self.scorer.clone(), self.config.linker)
            .map(|l| l.with_probe_log(self.probe_log.clone()))
            .map_err(|e| PipelineError::new(Phase::Config, e.to_string()))
    }

    /// Sends `query` unchanged to the configured endpoint.
    pub async fn execute_raw(&self, query: &str) -> Result<QueryResults, PipelineError> {
        self.client.execute(&self.config.endpoint, query).await.map_err(|e| {
            let kind = if e.is_syntax_error() { "syntax" } else { "endpoint" };
            PipelineError::with_kind(Phase::Execution, kind, e.to_string())
        })
    }
}

/// Answers one question.
///
/// An element that cannot be linked leaves the answer set empty and is
/// reported in `diagnostics`; only unreachable services and failing plans
/// are errors.
pub async fn answer_question(engine: &Engine, question: &str) -> Result<Outcome, PipelineError> {
    let started = Instant::now();
    let cfg = engine.config();

    let phase_started = Instant::now();
    let understanding = |e: &dyn std::fmt::Display, kind: &str| PipelineError::with_kind(Phase::Understanding, kind, e.to_string());
    let patterns = engine.qu.extract_triple_patterns(question).await.map_err(|e| {
        let kind = match e {
            crate::understanding::QuError::EmptyQuestion => "empty_question",
            crate::understanding::QuError::NoPatternsExtracted(_) => "no_patterns",
            crate::understanding::QuError::ProviderUnavailable(_) => "transport",
            _ => "invalid",
        };
        understanding(&e, kind)
    })?;
    let prediction = engine.qu.predict_answer_type(question).await.map_err(|e| understanding(&e, "transport"))?;
    let mut pgp = build_pgp(&patterns, prediction.data_type == DataType::Boolean).map_err(|e| understanding(&e, "graph"))?;
    pgp.prediction = Some(prediction.clone());
    let understanding_time = phase_started.elapsed();

    let phase_started = Instant::now();
    let annotation = engine.linker()?.annotate(&pgp).await.map_err(link_error)?;
    let linking_time = phase_started.elapsed();
    let mut diagnostics = annotation.diagnostics;
    let agp = annotation.agp;

    let phase_started = Instant::now();
    let plans = match plan(&agp, Some(&prediction), cfg.top_k) {
        Ok(plans) => plans,
        Err(e @ PlanError::NoViableBgp(_)) => {
            diagnostics.push(e.to_string());
            Vec::new()
        }
        Err(e) => return Err(PipelineError::new(Phase::Planning, e.to_string())),
    };
    let answers = if plans.is_empty() {
        AnswerSet::default()
    } else {
        let execution = execute_plans(engine.client(), &cfg.endpoint, &plans, cfg.parallelism).await.map_err(|e| {
            let kind = match e {
                ExecError::NoPlans => "no_plans",
                ExecError::AllPlansFailed { .. } => "all_plans_failed",
            };
            PipelineError::with_kind(Phase::Execution, kind, e.to_string())
        })?;
        for f in &execution.failures {
            diagnostics.push(format!("plan {} failed: {}", f.rank, f.error));
        }
        let mut set = filter_answers(execution.raw, &prediction, engine.store(), cfg.tau);
        set.boolean = execution.boolean;
        set
    };
    let execution_time = phase_started.elapsed();

    let shape = classify_shape(&pgp);
    Ok(Outcome {
        question: question.to_string(),
        answers,
        plans,
        pgp,
        agp,
        shape,
        prediction,
        timings: PhaseTimings {
            understanding: understanding_time,
            linking: linking_time,
            execution: execution_time,
            total: started.elapsed(),
        },
        diagnostics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    #[serde(flatten)]
    pub evaluation: EvaluationReport,
    pub mean_timings: PhaseTimings,
}

/// Answers every item in order and scores it against the gold answers.
/// A question whose pipeline run fails scores zero.
pub async fn run_benchmark(engine: &Engine, items: &[BenchmarkItem]) -> BenchmarkReport {
    let mut reports: Vec<QuestionReport> = Vec::with_capacity(items.len());
    let mut timings = Vec::with_capacity(items.len());
    for item in items {
        let (predicted, error) = match answer_question(engine, &item.question).await {
            Ok(outcome) => {
                timings.push(outcome.timings);
                (outcome.answers.answer_strings(), None)
            }
            Err(e) => (Vec::new(), Some(e.to_string())),
        };
        let mut report = score_question(&item.question, predicted, item.answers.clone(), error.clone());
        if error.is_some() {
            report.scores = Default::default();
        }
        reports.push(report);
    }
    BenchmarkReport { evaluation: EvaluationReport::from_questions(reports), mean_timings: PhaseTimings::mean(&timings) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = PipelineConfig::default();
        assert_eq!(
            (c.linker.max_fetched_vertices, c.linker.vertices_per_node, c.linker.predicates_per_edge, c.top_k),
            (400, 1, 20, 40)
        );
        assert_eq!((c.tau, c.parallelism), (0.5, 4));
        c.validate().unwrap();
    }

    #[test]
    fn overrides_layer() {
        let file = ConfigOverrides { max_vr: Some(100), tau: Some(0.3), ..Default::default() };
        let flags = ConfigOverrides { tau: Some(0.7), ..Default::default() };
        let c = PipelineConfig::default().with_overrides(&file.merge(&flags));
        assert_eq!((c.linker.max_fetched_vertices, c.tau), (100, 0.7));
    }

    #[test]
    fn rejects_bad_config() {
        let mut c = PipelineConfig::default();
        c.tau = 1.5;
        assert_eq!(c.validate().unwrap_err().phase, Phase::Config);
        let c = PipelineConfig::default().with_overrides(&ConfigOverrides { max_queries: Some(0), ..Default::default() });
        assert!(Engine::new(c).is_err());
    }

    #[test]
    fn config_round_trips_json() {
        let c = PipelineConfig::default();
        let back: PipelineConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        let partial: PipelineConfig = serde_json::from_str(r#"{"top_k": 5}"#).unwrap();
        assert_eq!((partial.top_k, partial.tau), (5, 0.5));
    }
}
