//! Question answering over arbitrary SPARQL endpoints without per-graph
//! preprocessing.
//!
//! A question is turned into phrase triple patterns, arranged as a phrase
//! graph pattern, and linked to the knowledge graph just in time by probing
//! the endpoint with small SPARQL queries. Candidate vertices and predicates
//! are ranked by semantic affinity, combined into basic graph patterns,
//! rendered as SPARQL, executed, and filtered by the predicted answer type.
//!
//! ```no_run
//! # async fn run() -> Result<(), kgqa::pipeline::PipelineError> {
//! use kgqa::pipeline::{answer_question, Engine, PipelineConfig};
//!
//! let mut config = PipelineConfig::default();
//! config.endpoint.url = "https://dbpedia.org/sparql".into();
//! let engine = Engine::new(config)?;
//! let outcome = answer_question(&engine, "Who wrote Dracula?").await?;
//! for answer in &outcome.answers.kept {
//!     println!("{}", answer.term);
//! }
//! # Ok(()) }
//! ```

pub mod affinity;
pub mod execution;
pub mod graph;
pub mod linker;
pub mod metrics;
pub mod pipeline;
pub mod planner;
pub mod sparql;
pub mod understanding;

/// (De)serializes a `Duration` as fractional seconds.
pub(crate) mod serde_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}
