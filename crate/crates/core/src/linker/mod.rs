//! Just-in-time linking of a phrase graph pattern against a live endpoint.
//!
//! Entity phrases are linked by a free-text probe for literals containing
//! any of the phrase's keywords, followed by affinity ranking of the
//! literals. Relation phrases are linked by listing the predicates incident
//! to the already linked vertices of their endpoints, again ranked by
//! affinity with a description of each predicate. Nothing is precomputed.

mod describe;
mod probe;

pub use describe::{is_human_readable, is_label_predicate, local_name, split_local_name};
pub use probe::{Probe, ProbeKind, ProbeLog};

use crate::affinity::{AffinityError, Scorer};
use crate::graph::{Agp, NodeKind, Pgp, PgpEdge, PgpNode, RelevantPredicate, RelevantVertex};
use crate::sparql::{render_contains, Dialect, EndpointConfig, RdfTerm, SparqlClient, SparqlError};
use crate::understanding::lexicon;
use futures::future::join_all;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkerParams {
    /// Row limit of the vertex probe.
    pub max_fetched_vertices: usize,
    /// Relevant vertices kept per entity node.
    pub vertices_per_node: usize,
    /// Relevant predicates kept per edge.
    pub predicates_per_edge: usize,
    /// Row limit of each incoming/outgoing predicate probe.
    pub predicates_per_vertex_limit: usize,
}

impl Default for LinkerParams {
    fn default() -> Self {
        LinkerParams {
            max_fetched_vertices: 400,
            vertices_per_node: 1,
            predicates_per_edge: 20,
            predicates_per_vertex_limit: 100,
        }
    }
}

impl LinkerParams {
    pub fn validate(&self) -> Result<(), LinkError> {
        let all = [
            self.max_fetched_vertices,
            self.vertices_per_node,
            self.predicates_per_edge,
            self.predicates_per_vertex_limit,
        ];
        if all.contains(&0) {
            return Err(LinkError::InvalidParams("linker parameters must be positive".into()));
        }
        if self.vertices_per_node > self.max_fetched_vertices {
            return Err(LinkError::InvalidParams("vertices_per_node exceeds max_fetched_vertices".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinkError {
    #[error(transparent)]
    Sparql(#[from] SparqlError),
    #[error(transparent)]
    Affinity(#[from] AffinityError),
    #[error("edge '{0}' has no linked endpoint to anchor predicate probes")]
    NoAnchorVertices(String),
    #[error("no edge could be anchored: {0}")]
    Unanchored(String),
    #[error("invalid linker parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinkTimings {
    #[serde(with = "crate::serde_secs")]
    pub entity_linking: Duration,
    #[serde(with = "crate::serde_secs")]
    pub relation_linking: Duration,
}

/// Result of [`Linker::annotate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub agp: Agp,
    /// Elements that could not be linked, with the reason.
    pub diagnostics: Vec<String>,
    pub timings: LinkTimings,
}

/// A candidate vertex and the literal chosen to describe it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexCandidate {
    pub iri: String,
    pub description: String,
}

#[derive(Debug, Clone)]
pub struct Linker {
    client: SparqlClient,
    endpoint: EndpointConfig,
    scorer: Scorer,
    params: LinkerParams,
    log: ProbeLog,
}

fn is_english_string(term: &RdfTerm) -> bool {
    term.is_string_literal()
        && term.lang.as_deref().is_none_or(|l| l.eq_ignore_ascii_case("en") || l.to_ascii_lowercase().starts_with("en-"))
}

/// Search keywords of a phrase: its words with quotes removed, dropping
/// stopwords unless nothing else remains.
pub fn keywords(label: &str) -> Vec<String> {
    let mut words: Vec<String> = Vec::new();
    for w in label.split_whitespace() {
        let w = crate::sparql::clean_keyword(w.trim_matches(|c: char| !c.is_alphanumeric()));
        if !w.is_empty() && !words.iter().any(|k| k.eq_ignore_ascii_case(&w)) {
            words.push(w);
        }
    }
    let is_stop = |w: &String| {
        let l = w.to_lowercase();
        lexicon::is_in(lexicon::STOPWORDS, &l) || lexicon::is_in(lexicon::PREPOSITIONS, &l)
    };
    if words.iter().any(|w| !is_stop(w)) {
        words.retain(|w| !is_stop(w));
    }
    words
}

fn by_score_then_iri(a: (&f64, &str), b: (&f64, &str)) -> std::cmp::Ordering {
    b.0.total_cmp(a.0).then_with(|| a.1.cmp(b.1))
}

impl Linker {
    pub fn new(client: SparqlClient, endpoint: EndpointConfig, scorer: Scorer, params: LinkerParams) -> Result<Self, LinkError> {
        params.validate()?;
        Ok(Linker { client, endpoint, scorer, params, log: ProbeLog::new() })
    }

    /// Records probes into `log` instead of a private log.
    pub fn with_probe_log(mut self, log: ProbeLog) -> Self {
        self.log = log;
        self
    }

    pub fn probe_log(&self) -> &ProbeLog {
        &self.log
    }

    pub fn params(&self) -> &LinkerParams {
        &self.params
    }

    pub fn vertex_query(&self, dialect: Dialect, label: &str) -> Result<String, SparqlError> {
        let fragment = render_contains(dialect, "d_v", &keywords(label))?;
        Ok(format!(
            "SELECT DISTINCT ?v ?p ?d_v WHERE {{ ?v ?p ?d_v . {fragment} }} LIMIT {}",
            self.params.max_fetched_vertices
        ))
    }

    /// Vertices with a literal containing one of the label's keywords, one
    /// description each, sorted by IRI. A label-like predicate's literal is
    /// preferred, then the shortest.
    pub async fn potential_relevant_vertices(&self, label: &str) -> Result<Vec<VertexCandidate>, LinkError> {
        let dialect = self.client.dialect_for(&self.endpoint);
        let query = self.vertex_query(dialect, label)?;
        self.log.record(ProbeKind::Vertex, label, &query);
        let table = match self.client.execute_select(&self.endpoint, &query).await {
            Err(e) if e.is_syntax_error() && dialect != Dialect::GenericRegex => {
                self.client.downgrade(&self.endpoint.url);
                let query = self.vertex_query(Dialect::GenericRegex, label)?;
                self.log.record(ProbeKind::Vertex, label, &query);
                self.client.execute_select(&self.endpoint, &query).await?
            }
            other => other?,
        };
        let mut per_vertex: BTreeMap<String, Vec<(bool, String)>> = BTreeMap::new();
        for row in &table.rows {
            let (Some(v), Some(d)) = (row.get("v"), row.get("d_v")) else { continue };
            if !v.is_iri() || !is_english_string(d) {
                continue;
            }
            let labelled = row.get("p").is_some_and(|p| is_label_predicate(&p.value));
            per_vertex.entry(v.value.clone()).or_default().push((labelled, d.value.clone()));
        }
        Ok(per_vertex
            .into_iter()
            .filter_map(|(iri, literals)| {
                let any_label = literals.iter().any(|(l, _)| *l);
                let description = literals
                    .into_iter()
                    .filter(|(l, _)| *l || !any_label)
                    .map(|(_, d)| d)
                    .min_by(|a, b| a.chars().count().cmp(&b.chars().count()).then_with(|| a.cmp(b)))?;
                Some(VertexCandidate { iri, description })
            })
            .collect())
    }

    /// Top `vertices_per_node` vertices for an entity node; empty for unknowns.
    pub async fn link_entity(&self, node: &PgpNode) -> Result<Vec<RelevantVertex>, LinkError> {
        if node.kind == NodeKind::Unknown {
            return Ok(Vec::new());
        }
        let candidates = self.potential_relevant_vertices(&node.label).await?;
        let descriptions: Vec<String> = candidates.iter().map(|c| c.description.clone()).collect();
        let scores = self.scorer.score_batch(&node.label, &descriptions).await?;
        let mut ranked: Vec<RelevantVertex> = candidates
            .into_iter()
            .zip(scores)
            .map(|(c, score)| RelevantVertex { iri: c.iri, description: c.description, score })
            .collect();
        ranked.sort_by(|a, b| by_score_then_iri((&a.score, &a.iri), (&b.score, &b.iri)));
        ranked.truncate(self.params.vertices_per_node);
        Ok(ranked)
    }

    async fn predicates_of(&self, vertex: &str, kind: ProbeKind) -> Result<Vec<String>, LinkError> {
        let limit = self.params.predicates_per_vertex_limit;
        let query = match kind {
            ProbeKind::Outgoing => format!("SELECT DISTINCT ?p WHERE {{ <{vertex}> ?p ?obj }} LIMIT {limit}"),
            _ => format!("SELECT DISTINCT ?p WHERE {{ ?sub ?p <{vertex}> }} LIMIT {limit}"),
        };
        self.log.record(kind, vertex, &query);
        let table = self.client.execute_select(&self.endpoint, &query).await?;
        Ok(table.rows.iter().filter_map(|r| r.get("p")).filter(|t| t.is_iri()).map(|t| t.value.clone()).collect())
    }

    /// Words describing a predicate: the split local name when readable,
    /// otherwise a literal attached to the predicate itself, otherwise the
    /// raw local name.
    pub async fn resolve_predicate_description(&self, predicate: &str) -> String {
        if is_human_readable(predicate) {
            return split_local_name(local_name(predicate));
        }
        let query = format!("SELECT DISTINCT ?lp ?d WHERE {{ <{predicate}> ?lp ?d }} LIMIT 100");
        self.log.record(ProbeKind::Description, predicate, &query);
        let fallback = || {
            let name = local_name(predicate);
            if name.is_empty() { predicate.to_string() } else { name.to_string() }
        };
        let table = match self.client.execute_select(&self.endpoint, &query).await {
            Ok(t) => t,
            Err(e) => {
                tracing::debug!(predicate, error = %e, "description lookup failed");
                return fallback();
            }
        };
        let literals: Vec<(bool, &str)> = table
            .rows
            .iter()
            .filter_map(|r| {
                let d = r.get("d").filter(|d| is_english_string(d))?;
                Some((r.get("lp").is_some_and(|p| is_label_predicate(&p.value)), d.value.as_str()))
            })
            .collect();
        let any_label = literals.iter().any(|(l, _)| *l);
        literals
            .into_iter()
            .filter(|(l, _)| *l || !any_label)
            .map(|(_, d)| d)
            .filter(|d| !d.trim().is_empty())
            .min_by(|a, b| a.chars().count().cmp(&b.chars().count()).then_with(|| a.cmp(b)))
            .map(str::to_string)
            .unwrap_or_else(fallback)
    }

    async fn describe_all(&self, predicates: &BTreeSet<String>, cache: &mut HashMap<String, String>) -> Vec<String> {
        let missing: Vec<&String> = predicates.iter().filter(|p| !cache.contains_key(*p)).collect();
        let found = join_all(missing.iter().map(|p| self.resolve_predicate_description(p))).await;
        for (p, d) in missing.into_iter().zip(found) {
            cache.insert(p.clone(), d);
        }
        predicates.iter().map(|p| cache[p].clone()).collect()
    }

    /// Top `predicates_per_edge` predicates incident to the linked vertices
    /// of the edge's endpoints.
    pub async fn link_relation(&self, pgp: &Pgp, edge: &PgpEdge) -> Result<Vec<RelevantPredicate>, LinkError> {
        let mut session = Session::default();
        self.link_relation_in(pgp, edge, &mut session).await
    }

    async fn link_relation_in(&self, pgp: &Pgp, edge: &PgpEdge, session: &mut Session) -> Result<Vec<RelevantPredicate>, LinkError> {
        let anchors: BTreeSet<&str> = [edge.endpoint_a, edge.endpoint_b]
            .iter()
            .flat_map(|&n| pgp.node(n).relevant_vertices.iter().map(|v| v.iri.as_str()))
            .collect();
        if anchors.is_empty() {
            return Err(LinkError::NoAnchorVertices(edge.label.clone()));
        }

        let wanted: Vec<(&str, ProbeKind)> = anchors
            .iter()
            .flat_map(|&v| [(v, ProbeKind::Outgoing), (v, ProbeKind::Incoming)])
            .filter(|(v, k)| !session.predicates.contains_key(&(v.to_string(), *k)))
            .collect();
        let fetched = join_all(wanted.iter().map(|&(v, k)| self.predicates_of(v, k))).await;
        for ((v, k), res) in wanted.into_iter().zip(fetched) {
            session.predicates.insert((v.to_string(), k), res?);
        }

        // (predicate, anchor vertex, anchor is object)
        let mut occurrences: Vec<(&str, &str, bool)> = Vec::new();
        for &v in &anchors {
            for (kind, flag) in [(ProbeKind::Outgoing, false), (ProbeKind::Incoming, true)] {
                for p in &session.predicates[&(v.to_string(), kind)] {
                    occurrences.push((p, v, flag));
                }
            }
        }
        let unique: BTreeSet<String> = occurrences.iter().map(|(p, _, _)| p.to_string()).collect();
        let descriptions = self.describe_all(&unique, &mut session.descriptions).await;
        let scores = self.scorer.score_batch(&edge.label, &descriptions).await?;
        let scored: HashMap<&str, (f64, &str)> = unique
            .iter()
            .zip(scores.iter().zip(&descriptions))
            .map(|(p, (s, d))| (p.as_str(), (*s, d.as_str())))
            .collect();

        let mut ranked: Vec<RelevantPredicate> = occurrences
            .into_iter()
            .map(|(p, v, flag)| {
                let (score, description) = scored[p];
                RelevantPredicate {
                    iri: p.to_string(),
                    description: description.to_string(),
                    score,
                    anchor_vertex: v.to_string(),
                    object_flag: flag,
                }
            })
            .collect();
        ranked.sort_by(|a, b| {
            by_score_then_iri((&a.score, &a.iri), (&b.score, &b.iri))
                .then_with(|| a.anchor_vertex.cmp(&b.anchor_vertex))
                .then_with(|| a.object_flag.cmp(&b.object_flag))
        });
        // one entry per predicate and orientation; the first (best) wins
        let mut seen: BTreeSet<(String, Option<usize>)> = BTreeSet::new();
        ranked.retain(|p| seen.insert((p.iri.clone(), subject_side(pgp, edge, p))));
        ranked.truncate(self.params.predicates_per_edge);
        Ok(ranked)
    }

    /// Links every node, then every edge.
    pub async fn annotate(&self, pgp: &Pgp) -> Result<Annotation, LinkError> {
        let mut agp = pgp.clone();
        let mut diagnostics = Vec::new();

        let started = Instant::now();
        let linked = join_all(agp.nodes.iter().map(|n| self.link_entity(n))).await;
        let mut transport_failures = 0;
        for (node, res) in agp.nodes.iter_mut().zip(linked) {
            match res {
                Ok(vs) => {
                    if vs.is_empty() && node.kind == NodeKind::Entity {
                        diagnostics.push(format!("entity '{}' matched no vertex", node.label));
                    }
                    node.relevant_vertices = vs;
                }
                Err(e) => {
                    transport_failures += 1;
                    diagnostics.push(format!("entity '{}' could not be linked: {e}", node.label));
                }
            }
        }
        let entity_linking = started.elapsed();

        let started = Instant::now();
        let mut session = Session::default();
        let mut unanchored = Vec::new();
        for i in 0..agp.edges.len() {
            let edge = agp.edges[i].clone();
            match self.link_relation_in(&agp, &edge, &mut session).await {
                Ok(ps) => {
                    if ps.is_empty() {
                        diagnostics.push(format!("relation '{}' matched no predicate", edge.label));
                    }
                    agp.edges[i].relevant_predicates = ps;
                }
                Err(e @ LinkError::NoAnchorVertices(_)) => {
                    unanchored.push(edge.label.clone());
                    diagnostics.push(e.to_string());
                }
                Err(e) => diagnostics.push(format!("relation '{}' could not be linked: {e}", edge.label)),
            }
        }
        let relation_linking = started.elapsed();

        if unanchored.len() == agp.edges.len() && transport_failures > 0 {
            return Err(LinkError::Unanchored(diagnostics.join("; ")));
        }
        Ok(Annotation { agp, diagnostics, timings: LinkTimings { entity_linking, relation_linking } })
    }
}

/// Node that takes the subject position when `p` is applied to `edge`.
pub fn subject_side(pgp: &Pgp, edge: &PgpEdge, p: &RelevantPredicate) -> Option<usize> {
    let anchor = pgp.anchor_side(edge, &p.anchor_vertex)?;
    let other = if anchor == edge.endpoint_a { edge.endpoint_b } else { edge.endpoint_a };
    Some(if p.object_flag { other } else { anchor })
}

#[derive(Default)]
struct Session {
    predicates: HashMap<(String, ProbeKind), Vec<String>>,
    descriptions: HashMap<String, String>,
}
