//! Deterministic stand-in for a remote knowledge graph.
//!
//! Loads N-Triples into memory and answers the subset of SPARQL that the
//! question-answering pipeline emits, over the standard HTTP protocol. The
//! bundled DBpedia slice, embedding vocabulary and benchmark are exposed as
//! constants so tests and the CLI share one copy.

pub mod ntriples;
pub mod query;
pub mod server;
pub mod store;

pub use query::{Extensions, QueryResult};
pub use server::{FixtureOptions, FixtureServer, FixtureState};
pub use store::{Term, Triple, TripleStore};

/// A small slice of DBpedia around the running examples.
pub const DBPEDIA_SLICE: &str = include_str!("../data/dbpedia_slice.nt");

/// Word vectors in the whitespace-separated text format (first line `N D`).
pub const EMBEDDINGS: &str = include_str!("../data/embeddings.txt");

/// Five questions with gold answers over [`DBPEDIA_SLICE`].
pub const BENCHMARK: &str = include_str!("../data/benchmark.json");

pub fn dbpedia_slice() -> TripleStore {
    TripleStore::from_ntriples(DBPEDIA_SLICE).expect("bundled slice parses")
}

/// Path of a bundled data file on disk, for callers that want a file path.
pub fn data_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}
