//! SPARQL 1.1 protocol client, results parsing and dialect-specific
//! free-text search syntax.

mod client;
mod render;
mod results;

pub use client::SparqlClient;
pub use render::{clean_keyword, render_contains};
pub use results::{parse_results, BindingsTable, QueryResults, RdfTerm, TermKind, RDF_LANG_STRING, XSD, XSD_STRING};

use serde::{Deserialize, Serialize};
use std::time::Duration;
use thiserror::Error;

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dialect {
    #[default]
    Virtuoso,
    Stardog,
    GenericRegex,
}

impl std::str::FromStr for Dialect {
    type Err = SparqlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "virtuoso" => Ok(Dialect::Virtuoso),
            "stardog" => Ok(Dialect::Stardog),
            "generic_regex" | "regex" | "generic" => Ok(Dialect::GenericRegex),
            other => Err(SparqlError::UnsupportedDialect(other.to_string())),
        }
    }
}

impl std::fmt::Display for Dialect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Dialect::Virtuoso => "virtuoso",
            Dialect::Stardog => "stardog",
            Dialect::GenericRegex => "generic_regex",
        })
    }
}

pub const MAX_RETRIES_LIMIT: u32 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    pub url: String,
    #[serde(default)]
    pub dialect: Dialect,
    #[serde(default = "default_request_timeout", with = "crate::serde_secs")]
    pub request_timeout: Duration,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_graph: Option<String>,
}

fn default_request_timeout() -> Duration {
    Duration::from_secs(30)
}

fn default_max_retries() -> u32 {
    2
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>) -> Self {
        EndpointConfig {
            url: url.into(),
            dialect: Dialect::default(),
            request_timeout: default_request_timeout(),
            max_retries: default_max_retries(),
            default_graph: None,
        }
    }

    pub fn with_dialect(mut self, dialect: Dialect) -> Self {
        self.dialect = dialect;
        self
    }

    pub fn validate(&self) -> Result<(), SparqlError> {
        let parsed = reqwest::Url::parse(&self.url).map_err(|e| SparqlError::InvalidConfig(format!("{}: {e}", self.url)))?;
        if !matches!(parsed.scheme(), "http" | "https") {
            return Err(SparqlError::InvalidConfig(format!("{}: scheme must be http or https", self.url)));
        }
        if self.max_retries > MAX_RETRIES_LIMIT {
            return Err(SparqlError::InvalidConfig(format!("max_retries {} exceeds {MAX_RETRIES_LIMIT}", self.max_retries)));
        }
        if self.request_timeout.is_zero() {
            return Err(SparqlError::InvalidConfig("request_timeout must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SparqlError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("endpoint answered HTTP {status}: {excerpt}")]
    EndpointError { status: u16, excerpt: String },
    #[error("malformed results: {0}")]
    MalformedResults(String),
    #[error("unsupported dialect {0:?}")]
    UnsupportedDialect(String),
    #[error("invalid keywords: {0}")]
    InvalidKeywords(String),
    #[error("invalid endpoint configuration: {0}")]
    InvalidConfig(String),
}

impl SparqlError {
    /// HTTP 4xx whose body reads like a query compilation failure.
    pub fn is_syntax_error(&self) -> bool {
        match self {
            SparqlError::EndpointError { status, excerpt } if (400..500).contains(status) => {
                let e = excerpt.to_ascii_lowercase();
                ["syntax", "parse", "compiler", "bif:contains", "unexpected", "lexical"].iter().any(|k| e.contains(k))
            }
            _ => false,
        }
    }
}
