//! Question graphs: phrase triple patterns, the phrase graph pattern (PGP)
//! built from them, and the KG-annotated forms used downstream.
//!
//! A PGP is undirected and knows nothing about the target knowledge graph.
//! After linking, the same structure carries relevant vertices on its nodes
//! and relevant predicates on its edges (an *annotated* graph pattern); a
//! [`Bgp`] is one concrete assignment of those annotations.

use crate::understanding::AnswerTypePrediction;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermCategory {
    Entity,
    Variable,
}

/// One end of a phrase triple pattern: either an entity phrase or an unknown.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhraseTerm {
    #[serde(default)]
    pub label: String,
    pub category: TermCategory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var_id: Option<u32>,
}

impl PhraseTerm {
    pub fn entity(label: impl Into<String>) -> Self {
        PhraseTerm { label: label.into(), category: TermCategory::Entity, var_id: None }
    }

    pub fn variable(var_id: u32) -> Self {
        PhraseTerm { label: String::new(), category: TermCategory::Variable, var_id: Some(var_id) }
    }

    pub fn is_variable(&self) -> bool {
        self.category == TermCategory::Variable
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        match (self.category, self.var_id) {
            (TermCategory::Entity, None) if !self.label.trim().is_empty() => Ok(()),
            (TermCategory::Entity, None) => Err(GraphError::InvalidPattern("entity with empty label".into())),
            (TermCategory::Entity, Some(_)) => Err(GraphError::InvalidPattern("entity carries a var_id".into())),
            (TermCategory::Variable, Some(id)) if id >= 1 => Ok(()),
            (TermCategory::Variable, _) => Err(GraphError::InvalidPattern("variable without a positive var_id".into())),
        }
    }

    fn node_key(&self) -> NodeKey {
        match self.var_id {
            Some(id) if self.is_variable() => NodeKey::Var(id),
            _ => NodeKey::Entity(self.label.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum NodeKey {
    Entity(String),
    Var(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhraseTriplePattern {
    pub subject: PhraseTerm,
    #[serde(rename = "relation")]
    pub relation_label: String,
    pub object: PhraseTerm,
}

impl PhraseTriplePattern {
    pub fn new(subject: PhraseTerm, relation_label: impl Into<String>, object: PhraseTerm) -> Self {
        PhraseTriplePattern { subject, relation_label: relation_label.into(), object }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        self.subject.validate()?;
        self.object.validate()?;
        if self.relation_label.trim().is_empty() {
            return Err(GraphError::InvalidPattern("empty relation label".into()));
        }
        if self.subject.node_key() == self.object.node_key() {
            return Err(GraphError::InvalidPattern(format!(
                "both ends of '{}' refer to the same node",
                self.relation_label
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Entity,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevantVertex {
    pub iri: String,
    pub description: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevantPredicate {
    pub iri: String,
    pub description: String,
    pub score: f64,
    pub anchor_vertex: String,
    /// True when the anchor vertex was the object of the discovered triple.
    pub object_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgpNode {
    pub id: usize,
    pub label: String,
    pub kind: NodeKind,
    pub is_main: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var_id: Option<u32>,
    #[serde(default)]
    pub relevant_vertices: Vec<RelevantVertex>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgpEdge {
    pub id: usize,
    pub label: String,
    pub endpoint_a: usize,
    pub endpoint_b: usize,
    #[serde(default)]
    pub relevant_predicates: Vec<RelevantPredicate>,
}

/// Phrase graph pattern. Once linked it doubles as the annotated graph pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pgp {
    pub nodes: Vec<PgpNode>,
    pub edges: Vec<PgpEdge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<AnswerTypePrediction>,
}

/// The annotated form shares the PGP representation.
pub type Agp = Pgp;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("no triple patterns given")]
    EmptyInput,
    #[error("triple patterns form {components} disconnected components")]
    DisconnectedGraph { components: usize },
    #[error("no unknown in a question that is not boolean")]
    NoUnknown,
    #[error("invalid triple pattern: {0}")]
    InvalidPattern(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Star,
    Path,
    Other,
}

/// Builds the undirected PGP. Entities merge on exact label, unknowns on
/// `var_id`; the lowest `var_id` is the main unknown. `boolean` allows a
/// pattern list without unknowns.
pub fn build_pgp(patterns: &[PhraseTriplePattern], boolean: bool) -> Result<Pgp, GraphError> {
    if patterns.is_empty() {
        return Err(GraphError::EmptyInput);
    }
    for p in patterns {
        p.validate()?;
    }

    let mut index: HashMap<NodeKey, usize> = HashMap::new();
    let mut nodes: Vec<PgpNode> = Vec::new();
    let mut node_for = |term: &PhraseTerm| -> usize {
        let key = term.node_key();
        *index.entry(key).or_insert_with(|| {
            let id = nodes.len();
            let (label, kind) = match term.var_id {
                Some(v) if term.is_variable() => (
                    if term.label.trim().is_empty() { format!("unknown{v}") } else { term.label.trim().to_string() },
                    NodeKind::Unknown,
                ),
                _ => (term.label.clone(), NodeKind::Entity),
            };
            nodes.push(PgpNode {
                id,
                label,
                kind,
                is_main: false,
                var_id: term.var_id.filter(|_| term.is_variable()),
                relevant_vertices: Vec::new(),
            });
            id
        })
    };

    let edges: Vec<PgpEdge> = patterns
        .iter()
        .enumerate()
        .map(|(id, p)| PgpEdge {
            id,
            label: p.relation_label.trim().to_string(),
            endpoint_a: node_for(&p.subject),
            endpoint_b: node_for(&p.object),
            relevant_predicates: Vec::new(),
        })
        .collect();

    let components = count_components(nodes.len(), &edges);
    if components > 1 {
        return Err(GraphError::DisconnectedGraph { components });
    }

    match nodes.iter_mut().filter(|n| n.kind == NodeKind::Unknown).min_by_key(|n| n.var_id) {
        Some(main) => main.is_main = true,
        None if boolean => {}
        None => return Err(GraphError::NoUnknown),
    }

    Ok(Pgp { nodes, edges, prediction: None })
}

fn count_components(n: usize, edges: &[PgpEdge]) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut root = x;
        while parent[root] != root {
            root = parent[root];
        }
        let mut cur = x;
        while parent[cur] != root {
            let next = parent[cur];
            parent[cur] = root;
            cur = next;
        }
        root
    }
    for e in edges {
        let (a, b) = (find(&mut parent, e.endpoint_a), find(&mut parent, e.endpoint_b));
        parent[a] = b;
    }
    (0..n).filter(|&i| find(&mut parent, i) == i).count()
}

/// Star when every edge touches one shared node, path when the edges form a
/// simple chain of at least two edges, other otherwise. A two-edge chain is
/// reported as a star.
pub fn classify_shape(pgp: &Pgp) -> Shape {
    let edges = &pgp.edges;
    if edges.is_empty() {
        return Shape::Other;
    }
    let shared = pgp.nodes.iter().any(|n| edges.iter().all(|e| e.endpoint_a == n.id || e.endpoint_b == n.id));
    if shared {
        return Shape::Star;
    }
    let mut degree: BTreeMap<usize, usize> = BTreeMap::new();
    for e in edges {
        *degree.entry(e.endpoint_a).or_default() += 1;
        *degree.entry(e.endpoint_b).or_default() += 1;
    }
    let ends = degree.values().filter(|&&d| d == 1).count();
    let inner = degree.values().filter(|&&d| d == 2).count();
    let connected = count_components(pgp.nodes.len(), edges) == 1;
    if edges.len() >= 2 && ends == 2 && ends + inner == degree.len() && degree.len() == edges.len() + 1 && connected {
        Shape::Path
    } else {
        Shape::Other
    }
}

impl Pgp {
    pub fn node(&self, id: usize) -> &PgpNode {
        &self.nodes[id]
    }

    pub fn main_unknown(&self) -> Option<&PgpNode> {
        self.nodes.iter().find(|n| n.is_main)
    }

    pub fn is_boolean(&self) -> bool {
        self.nodes.iter().all(|n| n.kind == NodeKind::Entity)
    }

    pub fn entity_nodes(&self) -> impl Iterator<Item = &PgpNode> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Entity)
    }

    /// Recovers one phrase triple pattern per edge.
    pub fn to_patterns(&self) -> Vec<PhraseTriplePattern> {
        let term = |n: &PgpNode| match n.kind {
            NodeKind::Entity => PhraseTerm::entity(n.label.clone()),
            NodeKind::Unknown => PhraseTerm::variable(n.var_id.unwrap_or(1)),
        };
        self.edges
            .iter()
            .map(|e| PhraseTriplePattern::new(term(self.node(e.endpoint_a)), e.label.clone(), term(self.node(e.endpoint_b))))
            .collect()
    }

    /// The endpoint of `edge` whose relevant vertices include `vertex`.
    pub fn anchor_side(&self, edge: &PgpEdge, vertex: &str) -> Option<usize> {
        [edge.endpoint_a, edge.endpoint_b]
            .into_iter()
            .find(|&id| self.node(id).relevant_vertices.iter().any(|v| v.iri == vertex))
    }

    /// Distinct variable ids appearing in the graph.
    pub fn var_ids(&self) -> BTreeSet<u32> {
        self.nodes.iter().filter_map(|n| n.var_id).collect()
    }
}

/// Subject or object position of a concrete triple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BgpTerm {
    Iri { value: String },
    Variable { var_id: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BgpTriple {
    pub subject: BgpTerm,
    pub predicate: String,
    pub object: BgpTerm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bgp {
    pub triples: Vec<BgpTriple>,
    pub score: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn var(id: u32) -> PhraseTerm {
        PhraseTerm::variable(id)
    }

    fn ent(label: &str) -> PhraseTerm {
        PhraseTerm::entity(label)
    }

    fn q_e() -> Vec<PhraseTriplePattern> {
        vec![
            PhraseTriplePattern::new(var(1), "flow", ent("Danish Straits")),
            PhraseTriplePattern::new(var(1), "city on shore", ent("Kaliningrad")),
        ]
    }

    #[test]
    fn running_example_is_a_three_node_star() {
        let pgp = build_pgp(&q_e(), false).unwrap();
        assert_eq!(pgp.nodes.len(), 3);
        assert_eq!(pgp.edges.len(), 2);
        assert_eq!(pgp.nodes.iter().filter(|n| n.kind == NodeKind::Unknown).count(), 1);
        assert!(pgp.main_unknown().unwrap().var_id == Some(1));
        assert_eq!(classify_shape(&pgp), Shape::Star);
    }

    #[test]
    fn boolean_single_triple() {
        let p = vec![PhraseTriplePattern::new(ent("Berlin"), "capital of", ent("Germany"))];
        let pgp = build_pgp(&p, true).unwrap();
        assert_eq!((pgp.nodes.len(), pgp.edges.len()), (2, 1));
        assert!(pgp.main_unknown().is_none());
        assert_eq!(classify_shape(&pgp), Shape::Star);
        assert_eq!(build_pgp(&p, false), Err(GraphError::NoUnknown));
    }

    #[test]
    fn chain_with_intermediate_unknown() {
        let p = vec![
            PhraseTriplePattern::new(var(1), "r1", ent("A")),
            PhraseTriplePattern::new(var(1), "r2", var(2)),
            PhraseTriplePattern::new(var(2), "r3", ent("B")),
        ];
        let pgp = build_pgp(&p, false).unwrap();
        // distinct-key oracle
        let keys: HashSet<String> = p
            .iter()
            .flat_map(|t| [&t.subject, &t.object])
            .map(|t| match t.var_id {
                Some(v) => format!("?{v}"),
                None => format!("e:{}", t.label),
            })
            .collect();
        assert_eq!(pgp.nodes.len(), keys.len());
        assert_eq!(pgp.nodes.len(), 4);
        assert_eq!(classify_shape(&pgp), Shape::Path);
        let main: Vec<_> = pgp.nodes.iter().filter(|n| n.is_main).collect();
        assert_eq!(main.len(), 1);
        assert_eq!(main[0].var_id, Some(1));
    }

    #[test]
    fn errors() {
        assert_eq!(build_pgp(&[], false), Err(GraphError::EmptyInput));
        let disconnected = vec![
            PhraseTriplePattern::new(var(1), "r", ent("A")),
            PhraseTriplePattern::new(var(2), "s", ent("B")),
        ];
        assert_eq!(build_pgp(&disconnected, false), Err(GraphError::DisconnectedGraph { components: 2 }));
        let self_loop = vec![PhraseTriplePattern::new(var(1), "r", var(1))];
        assert!(matches!(build_pgp(&self_loop, false), Err(GraphError::InvalidPattern(_))));
        let empty_rel = vec![PhraseTriplePattern::new(var(1), " ", ent("A"))];
        assert!(matches!(build_pgp(&empty_rel, false), Err(GraphError::InvalidPattern(_))));
    }

    #[test]
    fn entity_merge_is_case_sensitive() {
        let p = vec![
            PhraseTriplePattern::new(var(1), "r", ent("Paris")),
            PhraseTriplePattern::new(var(1), "s", ent("paris")),
        ];
        assert_eq!(build_pgp(&p, false).unwrap().nodes.len(), 3);
    }

    #[test]
    fn other_shape() {
        // a branch off a chain: no shared node, not a simple chain
        let p = vec![
            PhraseTriplePattern::new(ent("A"), "r1", var(1)),
            PhraseTriplePattern::new(var(1), "r2", var(2)),
            PhraseTriplePattern::new(var(2), "r3", ent("B")),
            PhraseTriplePattern::new(var(2), "r4", ent("C")),
            PhraseTriplePattern::new(ent("C"), "r5", ent("D")),
        ];
        assert_eq!(classify_shape(&build_pgp(&p, false).unwrap()), Shape::Other);
    }

    #[test]
    fn json_field_names() {
        let pgp = build_pgp(&q_e(), false).unwrap();
        let v = serde_json::to_value(&pgp).unwrap();
        let node = &v["nodes"][0];
        for key in ["id", "label", "kind", "is_main", "relevant_vertices"] {
            assert!(node.get(key).is_some(), "missing {key}");
        }
        let edge = &v["edges"][0];
        for key in ["id", "label", "endpoint_a", "endpoint_b", "relevant_predicates"] {
            assert!(edge.get(key).is_some(), "missing {key}");
        }
        let back: Pgp = serde_json::from_value(v).unwrap();
        assert_eq!(back, pgp);
    }
}
