//! TOML configuration files.
//!
//! A file holds any subset of [`PipelineConfig`]; missing keys keep their
//! defaults and unknown keys are rejected.
//!
//! ```toml
//! top_k = 40
//! tau = 0.5
//! embedding_path = "vectors.txt"
//!
//! [endpoint]
//! url = "https://dbpedia.org/sparql"
//! dialect = "virtuoso"
//! request_timeout = 30.0
//!
//! [linker]
//! max_fetched_vertices = 400
//! ```

use kgqa::pipeline::PipelineConfig;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
}

pub fn parse_config(text: &str, path: &Path) -> Result<PipelineConfig, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(1, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        ConfigError::Parse { path: path.to_path_buf(), line, message: e.message().to_string() }
    })
}

/// Reads a config file. Relative embedding paths resolve against the
/// file's directory.
pub fn load_config(path: &Path) -> Result<PipelineConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
    let mut config = parse_config(&text, path)?;
    if let (Some(p), Some(dir)) = (&config.embedding_path, path.parent()) {
        if p.is_relative() {
            config.embedding_path = Some(dir.join(p));
        }
    }
    Ok(config)
}
