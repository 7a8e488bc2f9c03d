//! Plan execution and answer-type filtering.

use crate::affinity::{affinity, EmbeddingStore};
use crate::linker::{local_name, split_local_name};
use crate::planner::{QueryPlan, CLASS_VAR};
use crate::sparql::{EndpointConfig, QueryResults, RdfTerm, SparqlClient, SparqlError, XSD};
use crate::understanding::{AnswerTypePrediction, DataType};
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

pub const DEFAULT_PARALLELISM: usize = 4;
pub const DEFAULT_TAU: f64 = 0.5;

const MAIN_VAR: &str = "unknown1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawAnswer {
    pub term: RdfTerm,
    /// Every `rdf:type` bound alongside the term, in first-seen order.
    #[serde(default)]
    pub class_types: Vec<String>,
    pub source_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFailure {
    pub rank: usize,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Execution {
    /// Union of SELECT answers, one entry per distinct term.
    pub raw: Vec<RawAnswer>,
    /// Result of the best-ranked ASK plan that succeeded.
    pub boolean: Option<bool>,
    pub failures: Vec<PlanFailure>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("no plans to execute")]
    NoPlans,
    #[error("all {count} plans failed; first error: {first}")]
    AllPlansFailed { count: usize, first: String },
}

/// Runs every plan, at most `parallelism` at a time, and unions the answers.
/// A term found by several plans keeps the best rank and all its classes.
pub async fn execute_plans(
    client: &SparqlClient,
    endpoint: &EndpointConfig,
    plans: &[QueryPlan],
    parallelism: usize,
) -> Result<Execution, ExecError> {
    if plans.is_empty() {
        return Err(ExecError::NoPlans);
    }
    let mut ordered: Vec<(usize, String)> = plans.iter().map(|p| (p.rank, p.sparql.clone())).collect();
    ordered.sort_by_key(|(rank, _)| *rank);
    // owned futures keep the stream Send for any caller lifetime
    let jobs = ordered.into_iter().map(|(rank, sparql)| {
        let (client, endpoint) = (client.clone(), endpoint.clone());
        async move { (rank, client.execute(&endpoint, &sparql).await) }
    });
    let results: Vec<(usize, Result<QueryResults, SparqlError>)> = stream::iter(jobs)
        .buffered(parallelism.max(1))
        .collect()
        .await;

    let mut out = Execution::default();
    let mut index: HashMap<RdfTerm, usize> = HashMap::new();
    let mut succeeded = 0;
    for (rank, result) in results {
        match result {
            Err(e) => {
                tracing::warn!(rank, error = %e, "plan failed");
                out.failures.push(PlanFailure { rank, error: e.to_string() });
            }
            Ok(QueryResults::Boolean(b)) => {
                succeeded += 1;
                out.boolean.get_or_insert(b);
            }
            Ok(QueryResults::Bindings(table)) => {
                succeeded += 1;
                for row in &table.rows {
                    let Some(term) = row.get(MAIN_VAR) else { continue };
                    let class = row.get(CLASS_VAR).filter(|c| c.is_iri()).map(|c| c.value.clone());
                    let slot = *index.entry(term.clone()).or_insert_with(|| {
                        out.raw.push(RawAnswer { term: term.clone(), class_types: Vec::new(), source_rank: rank });
                        out.raw.len() - 1
                    });
                    let answer = &mut out.raw[slot];
                    answer.source_rank = answer.source_rank.min(rank);
                    if let Some(c) = class {
                        if !answer.class_types.contains(&c) {
                            answer.class_types.push(c);
                        }
                    }
                }
            }
        }
    }
    if succeeded == 0 {
        return Err(ExecError::AllPlansFailed {
            count: out.failures.len(),
            first: out.failures.first().map(|f| f.error.clone()).unwrap_or_default(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    /// Literal datatype outside the predicted family, or not a literal.
    DtypeMismatch,
    /// No class close enough to the predicted semantic type.
    SemanticMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedAnswer {
    pub answer: RawAnswer,
    pub reason: DropReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStats {
    /// String answers kept only because they carry no class.
    pub untyped_kept: usize,
    pub dtype_dropped: usize,
    pub semantic_dropped: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnswerSet {
    #[serde(rename = "answers")]
    pub kept: Vec<RawAnswer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boolean: Option<bool>,
    pub dropped: Vec<DroppedAnswer>,
    pub stats: FilterStats,
}

impl AnswerSet {
    /// Answer strings for evaluation: IRIs and literal lexical forms, or
    /// `"true"`/`"false"` for boolean questions.
    pub fn answer_strings(&self) -> Vec<String> {
        match self.boolean {
            Some(b) => vec![b.to_string()],
            None => self.kept.iter().map(|a| a.term.value.clone()).collect(),
        }
    }
}

const DATE_TYPES: &[&str] = &["date", "dateTime", "gYear", "gYearMonth"];
const NUMERIC_TYPES: &[&str] = &["integer", "decimal", "double", "float", "long", "int", "nonNegativeInteger"];

/// Whether a term's datatype belongs to the family of `data_type`.
pub fn matches_data_type(term: &RdfTerm, data_type: DataType) -> bool {
    let family: &[&str] = match data_type {
        DataType::Date => DATE_TYPES,
        DataType::Numeric => NUMERIC_TYPES,
        DataType::Boolean => &["boolean"],
        DataType::String => return true,
    };
    term.is_literal()
        && term
            .datatype
            .as_deref()
            .and_then(|dt| dt.strip_prefix(XSD))
            .is_some_and(|local| family.contains(&local))
}

/// Best affinity between the semantic type and the words of any class.
pub fn class_affinity(semantic_type: &str, classes: &[String], store: &EmbeddingStore) -> Option<f64> {
    classes
        .iter()
        .filter_map(|c| affinity(semantic_type, &split_local_name(local_name(c)), store).ok())
        .max_by(f64::total_cmp)
}

/// Partitions `raw` into kept and dropped answers by predicted type.
pub fn filter_answers(raw: Vec<RawAnswer>, prediction: &AnswerTypePrediction, store: &EmbeddingStore, tau: f64) -> AnswerSet {
    let mut set = AnswerSet::default();
    for answer in raw {
        let verdict = match prediction.data_type {
            DataType::String => match (&prediction.semantic_type, answer.class_types.is_empty()) {
                (Some(st), false) => match class_affinity(st, &answer.class_types, store) {
                    Some(score) if score >= tau => None,
                    _ => Some(DropReason::SemanticMismatch),
                },
                (_, true) => {
                    set.stats.untyped_kept += 1;
                    None
                }
                (None, false) => None,
            },
            dt => (!matches_data_type(&answer.term, dt)).then_some(DropReason::DtypeMismatch),
        };
        match verdict {
            None => set.kept.push(answer),
            Some(reason) => {
                match reason {
                    DropReason::DtypeMismatch => set.stats.dtype_dropped += 1,
                    DropReason::SemanticMismatch => set.stats.semantic_dropped += 1,
                }
                set.dropped.push(DroppedAnswer { answer, reason });
            }
        }
    }
    set
}
