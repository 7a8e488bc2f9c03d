use serde::{Deserialize, Serialize};
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    /// Free-text search for candidate vertices of an entity phrase.
    Vertex,
    Outgoing,
    Incoming,
    /// Literal lookup for a predicate with an opaque IRI.
    Description,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Probe {
    pub kind: ProbeKind,
    /// Phrase label for vertex probes, IRI otherwise.
    pub target: String,
    pub query: String,
}

/// Shared record of every query the linker sends.
#[derive(Debug, Clone, Default)]
pub struct ProbeLog {
    inner: Arc<Mutex<Vec<Probe>>>,
}

impl ProbeLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, kind: ProbeKind, target: &str, query: &str) {
        self.inner.lock().unwrap().push(Probe { kind, target: target.to_string(), query: query.to_string() });
    }

    pub fn probes(&self) -> Vec<Probe> {
        self.inner.lock().unwrap().clone()
    }

    pub fn count(&self, kind: ProbeKind) -> usize {
        self.inner.lock().unwrap().iter().filter(|p| p.kind == kind).count()
    }

    pub fn clear(&self) {
        self.inner.lock().unwrap().clear();
    }

    /// One JSON object per line.
    pub fn to_json_lines(&self) -> String {
        self.inner
            .lock()
            .unwrap()
            .iter()
            .map(|p| serde_json::to_string(p).expect("probe serializes") + "\n")
            .collect()
    }
}
