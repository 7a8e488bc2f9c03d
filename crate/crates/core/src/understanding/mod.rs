//! Question understanding: phrase triple patterns and answer-type prediction.
//!
//! Patterns come from a [`QuProvider`]: the built-in rule-based extractor or a
//! remote sequence model reached over HTTP. Data and semantic types are
//! predicted by a fixed rule table unless the remote provider supplies them.

mod codec;
pub(crate) mod lexicon;
mod offline;
mod remote;
mod typing;

pub use codec::{encode_patterns, parse_model_output};
pub use lexicon::normalize_whitespace;
pub use offline::extract_offline;
pub use remote::RemoteQu;
pub use typing::{predict_answer_type, predict_data_type, predict_semantic_type};

use crate::graph::PhraseTriplePattern;
use serde::{Deserialize, Serialize};
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataType {
    Date,
    Numeric,
    Boolean,
    String,
}

impl DataType {
    pub fn as_str(self) -> &'static str {
        match self {
            DataType::Date => "date",
            DataType::Numeric => "numeric",
            DataType::Boolean => "boolean",
            DataType::String => "string",
        }
    }
}

impl std::str::FromStr for DataType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "date" => Ok(DataType::Date),
            "numeric" | "number" => Ok(DataType::Numeric),
            "boolean" | "bool" => Ok(DataType::Boolean),
            "string" => Ok(DataType::String),
            other => Err(format!("unknown data type {other:?}")),
        }
    }
}

impl std::fmt::Display for DataType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerTypePrediction {
    pub data_type: DataType,
    /// Only ever set for [`DataType::String`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semantic_type: Option<String>,
}

impl AnswerTypePrediction {
    /// Drops a semantic type that accompanies a non-string data type.
    pub fn new(data_type: DataType, semantic_type: Option<String>) -> Self {
        let semantic_type = semantic_type.filter(|_| data_type == DataType::String);
        AnswerTypePrediction { data_type, semantic_type }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuProviderKind {
    RemoteModel,
    #[default]
    OfflineExtractor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuProviderConfig {
    pub kind: QuProviderKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint_url: Option<String>,
    #[serde(default = "default_timeout", with = "crate::serde_secs")]
    pub timeout: Duration,
}

fn default_timeout() -> Duration {
    Duration::from_secs(30)
}

impl Default for QuProviderConfig {
    fn default() -> Self {
        QuProviderConfig { kind: QuProviderKind::OfflineExtractor, endpoint_url: None, timeout: default_timeout() }
    }
}

impl QuProviderConfig {
    pub fn remote(endpoint_url: impl Into<String>) -> Self {
        QuProviderConfig { kind: QuProviderKind::RemoteModel, endpoint_url: Some(endpoint_url.into()), ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), QuError> {
        match (self.kind, &self.endpoint_url) {
            (QuProviderKind::RemoteModel, Some(_)) | (QuProviderKind::OfflineExtractor, None) => Ok(()),
            (QuProviderKind::RemoteModel, None) => Err(QuError::InvalidConfig("remote_model needs endpoint_url".into())),
            (QuProviderKind::OfflineExtractor, Some(_)) => {
                Err(QuError::InvalidConfig("endpoint_url is only valid for remote_model".into()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error("question understanding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("no triple patterns extracted from {0:?}")]
    NoPatternsExtracted(String),
    #[error("malformed model output at byte {offset}: {message}")]
    MalformedModelOutput { offset: usize, message: String },
    #[error("invalid triple pattern: {0}")]
    InvalidPattern(String),
    #[error("invalid provider configuration: {0}")]
    InvalidConfig(String),
}

/// Source of phrase triple patterns and, optionally, data types.
#[derive(Debug, Clone)]
pub enum QuProvider {
    Offline,
    Remote(RemoteQu),
}

impl QuProvider {
    pub fn from_config(config: &QuProviderConfig) -> Result<Self, QuError> {
        config.validate()?;
        match (config.kind, &config.endpoint_url) {
            (QuProviderKind::RemoteModel, Some(url)) => Ok(QuProvider::Remote(RemoteQu::new(url, config.timeout)?)),
            _ => Ok(QuProvider::Offline),
        }
    }

    pub async fn extract_triple_patterns(&self, question: &str) -> Result<Vec<PhraseTriplePattern>, QuError> {
        if question.trim().is_empty() {
            return Err(QuError::EmptyQuestion);
        }
        let patterns = match self {
            QuProvider::Offline => extract_offline(question)?,
            QuProvider::Remote(r) => r.extract(question).await?,
        };
        if patterns.is_empty() {
            return Err(QuError::NoPatternsExtracted(question.to_string()));
        }
        for p in &patterns {
            p.validate().map_err(|e| QuError::InvalidPattern(e.to_string()))?;
        }
        Ok(patterns)
    }

    /// The remote classifier decides the data type when configured; the
    /// semantic type always comes from the local heuristic.
    pub async fn predict_answer_type(&self, question: &str) -> Result<AnswerTypePrediction, QuError> {
        if question.trim().is_empty() {
            return Err(QuError::EmptyQuestion);
        }
        let data_type = match self {
            QuProvider::Offline => predict_data_type(question),
            QuProvider::Remote(r) => r.data_type(question).await?,
        };
        let semantic = if data_type == DataType::String { predict_semantic_type(question) } else { None };
        Ok(AnswerTypePrediction::new(data_type, semantic))
    }
}
