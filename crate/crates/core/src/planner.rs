//! Basic graph pattern enumeration, scoring and SPARQL serialization.
//!
//! Every combination of one relevant vertex per entity node and one relevant
//! predicate per edge is a candidate BGP. A BGP scores the mean over its
//! triples of subject, predicate and object scores, with unknowns counting
//! zero. Because each choice contributes independently and monotonically to
//! that score, the best BGPs can be produced lazily in descending order
//! without materializing the whole product.

use crate::graph::{Agp, Bgp, BgpTerm, BgpTriple, NodeKind, PgpEdge, RelevantPredicate};
use crate::linker::subject_side;
use crate::sparql::RDF_TYPE;
use crate::understanding::AnswerTypePrediction;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use thiserror::Error;

pub const DEFAULT_TOP_K: usize = 40;

/// Name of the projected class variable.
pub const CLASS_VAR: &str = "c";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("no viable BGP: {0}")]
    NoViableBgp(String),
    #[error("K must be positive")]
    InvalidTopK,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanForm {
    Select,
    Ask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryPlan {
    pub bgp: Bgp,
    pub sparql: String,
    /// 1-based position in the ranking.
    pub rank: usize,
    pub form: PlanForm,
}

/// Choice of candidate per element: `vertices[i]` indexes the relevant
/// vertices of the i-th entity node, `predicates[j]` those of edge j.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Choice {
    vertices: Vec<usize>,
    predicates: Vec<usize>,
}

struct Space<'a> {
    agp: &'a Agp,
    entity_nodes: Vec<usize>,
}

impl<'a> Space<'a> {
    fn new(agp: &'a Agp) -> Result<Self, PlanError> {
        if agp.edges.is_empty() {
            return Err(PlanError::NoViableBgp("graph has no edges".into()));
        }
        for e in &agp.edges {
            if e.relevant_predicates.is_empty() {
                return Err(PlanError::NoViableBgp(format!("edge '{}' has no relevant predicates", e.label)));
            }
        }
        let entity_nodes: Vec<usize> = agp.nodes.iter().filter(|n| n.kind == NodeKind::Entity).map(|n| n.id).collect();
        for &n in &entity_nodes {
            if agp.node(n).relevant_vertices.is_empty() {
                return Err(PlanError::NoViableBgp(format!("entity '{}' has no relevant vertices", agp.node(n).label)));
            }
        }
        Ok(Space { agp, entity_nodes })
    }

    fn vertex_counts(&self) -> Vec<usize> {
        self.entity_nodes.iter().map(|&n| self.agp.node(n).relevant_vertices.len()).collect()
    }

    fn predicate_counts(&self) -> Vec<usize> {
        self.agp.edges.iter().map(|e| e.relevant_predicates.len()).collect()
    }

    fn size(&self) -> u128 {
        self.vertex_counts().iter().chain(self.predicate_counts().iter()).map(|&c| c as u128).product()
    }

    fn term(&self, node: usize, choice: &Choice) -> BgpTerm {
        let n = self.agp.node(node);
        match n.kind {
            NodeKind::Entity => {
                let slot = self.entity_nodes.iter().position(|&e| e == node).expect("entity node indexed");
                BgpTerm::Iri { value: n.relevant_vertices[choice.vertices[slot]].iri.clone() }
            }
            NodeKind::Unknown => BgpTerm::Variable { var_id: n.var_id.unwrap_or(1) },
        }
    }

    fn triple(&self, edge: &PgpEdge, p: &RelevantPredicate, choice: &Choice) -> BgpTriple {
        let subject_node = subject_side(self.agp, edge, p).unwrap_or(edge.endpoint_a);
        let object_node = if subject_node == edge.endpoint_a { edge.endpoint_b } else { edge.endpoint_a };
        BgpTriple { subject: self.term(subject_node, choice), predicate: p.iri.clone(), object: self.term(object_node, choice) }
    }

    fn build(&self, choice: &Choice) -> Bgp {
        let triples: Vec<BgpTriple> = self
            .agp
            .edges
            .iter()
            .zip(&choice.predicates)
            .map(|(e, &j)| self.triple(e, &e.relevant_predicates[j], choice))
            .collect();
        let mut bgp = Bgp { triples, score: 0.0 };
        bgp.score = score_bgp(&bgp, self.agp);
        bgp
    }
}

/// Every combination, in enumeration order (last edge varies fastest).
pub fn enumerate_bgps(agp: &Agp) -> Result<Vec<Bgp>, PlanError> {
    let space = Space::new(agp)?;
    let counts: Vec<usize> = space.vertex_counts().into_iter().chain(space.predicate_counts()).collect();
    let nv = space.entity_nodes.len();
    let mut out = Vec::with_capacity(space.size().min(1 << 20) as usize);
    let mut idx = vec![0usize; counts.len()];
    loop {
        out.push(space.build(&Choice { vertices: idx[..nv].to_vec(), predicates: idx[nv..].to_vec() }));
        // odometer increment
        let mut pos = counts.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < counts[pos] {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Score of a vertex, looked up on the edge's endpoints first.
fn vertex_score(agp: &Agp, edge: Option<&PgpEdge>, term: &BgpTerm) -> f64 {
    let BgpTerm::Iri { value } = term else { return 0.0 };
    let on = |node: usize| agp.node(node).relevant_vertices.iter().find(|v| &v.iri == value).map(|v| v.score);
    edge.and_then(|e| on(e.endpoint_a).or_else(|| on(e.endpoint_b)))
        .or_else(|| (0..agp.nodes.len()).find_map(on))
        .unwrap_or(0.0)
}

fn predicate_score(agp: &Agp, edge_index: usize, iri: &str) -> f64 {
    agp.edges
        .get(edge_index)
        .and_then(|e| e.relevant_predicates.iter().find(|p| p.iri == iri))
        .map_or(0.0, |p| p.score)
}

/// Mean over triples of subject + predicate + object scores; the i-th
/// triple is scored against the i-th edge's predicate annotations.
pub fn score_bgp(bgp: &Bgp, agp: &Agp) -> f64 {
    if bgp.triples.is_empty() {
        return 0.0;
    }
    let total: f64 = bgp
        .triples
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let edge = agp.edges.get(i);
            vertex_score(agp, edge, &t.subject) + predicate_score(agp, i, &t.predicate) + vertex_score(agp, edge, &t.object)
        })
        .sum();
    total / bgp.triples.len() as f64
}

fn var_name(var_id: u32, main: Option<u32>) -> String {
    if Some(var_id) == main {
        "unknown1".to_string()
    } else {
        format!("unknown{var_id}")
    }
}

fn render_term(t: &BgpTerm, main: Option<u32>) -> String {
    match t {
        BgpTerm::Iri { value } => format!("<{value}>"),
        BgpTerm::Variable { var_id } => format!("?{}", var_name(*var_id, main)),
    }
}

fn render_triples(bgp: &Bgp, main: Option<u32>) -> String {
    bgp.triples
        .iter()
        .map(|t| format!("{} <{}> {} .", render_term(&t.subject, main), t.predicate, render_term(&t.object, main)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Key used to break score ties.
pub fn serialize_triples(bgp: &Bgp) -> String {
    render_triples(bgp, None)
}

pub fn to_sparql(bgp: &Bgp, agp: &Agp) -> (String, PlanForm) {
    let main = agp.main_unknown().and_then(|n| n.var_id);
    let body = render_triples(bgp, main);
    if agp.is_boolean() {
        (format!("ASK WHERE {{ {body} }}"), PlanForm::Ask)
    } else {
        (
            format!("SELECT DISTINCT ?unknown1 ?{CLASS_VAR} WHERE {{ {body} OPTIONAL {{ ?unknown1 <{RDF_TYPE}> ?{CLASS_VAR} }} }}"),
            PlanForm::Select,
        )
    }
}

fn rank_order(a: &(Bgp, String), b: &(Bgp, String)) -> Ordering {
    b.0.score.total_cmp(&a.0.score).then_with(|| a.1.cmp(&b.1))
}

/// Top `k` BGPs by score, ties broken by serialized triples.
pub fn top_k_bgps(agp: &Agp, k: usize) -> Result<Vec<Bgp>, PlanError> {
    if k == 0 {
        return Err(PlanError::InvalidTopK);
    }
    let space = Space::new(agp)?;
    let mut keyed: Vec<(Bgp, String)> = if space.size() > 10 * k as u128 {
        lazy_candidates(&space, k)
    } else {
        enumerate_bgps(agp)?
            .into_iter()
            .map(|b| {
                let key = serialize_triples(&b);
                (b, key)
            })
            .collect()
    };
    keyed.sort_by(rank_order);
    keyed.truncate(k);
    Ok(keyed.into_iter().map(|(b, _)| b).collect())
}

/// Full materialization followed by sorting; the reference for [`top_k_bgps`].
pub fn top_k_bgps_exhaustive(agp: &Agp, k: usize) -> Result<Vec<Bgp>, PlanError> {
    if k == 0 {
        return Err(PlanError::InvalidTopK);
    }
    let mut keyed: Vec<(Bgp, String)> = enumerate_bgps(agp)?
        .into_iter()
        .map(|b| {
            let key = serialize_triples(&b);
            (b, key)
        })
        .collect();
    keyed.sort_by(rank_order);
    keyed.truncate(k);
    Ok(keyed.into_iter().map(|(b, _)| b).collect())
}

struct Entry {
    bgp: Bgp,
    pos: Vec<usize>,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bgp.score.total_cmp(&other.bgp.score)
    }
}

/// Best-first walk over candidate lists sorted by descending score. Stops
/// once `k` BGPs are collected and nothing left can tie the k-th score, so
/// the caller's tie-break sees every contender.
fn lazy_candidates(space: &Space<'_>, k: usize) -> Vec<(Bgp, String)> {
    let vertex_order: Vec<Vec<usize>> = space
        .entity_nodes
        .iter()
        .map(|&n| sorted_indices(space.agp.node(n).relevant_vertices.iter().map(|v| v.score)))
        .collect();
    let predicate_order: Vec<Vec<usize>> =
        space.agp.edges.iter().map(|e| sorted_indices(e.relevant_predicates.iter().map(|p| p.score))).collect();
    let counts: Vec<usize> = vertex_order.iter().chain(&predicate_order).map(Vec::len).collect();
    let nv = vertex_order.len();
    let build = |pos: Vec<usize>| {
        let choice = Choice {
            vertices: pos[..nv].iter().zip(&vertex_order).map(|(&i, o)| o[i]).collect(),
            predicates: pos[nv..].iter().zip(&predicate_order).map(|(&i, o)| o[i]).collect(),
        };
        Entry { bgp: space.build(&choice), pos }
    };

    let mut heap = BinaryHeap::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let start = vec![0usize; counts.len()];
    seen.insert(start.clone());
    heap.push(build(start));

    let mut out: Vec<(Bgp, String)> = Vec::new();
    while let Some(Entry { bgp, pos }) = heap.pop() {
        if out.len() >= k && bgp.score < out[k - 1].0.score {
            break;
        }
        for d in 0..pos.len() {
            if pos[d] + 1 < counts[d] {
                let mut next = pos.clone();
                next[d] += 1;
                if seen.insert(next.clone()) {
                    heap.push(build(next));
                }
            }
        }
        let key = serialize_triples(&bgp);
        out.push((bgp, key));
    }
    out
}

fn sorted_indices(scores: impl Iterator<Item = f64>) -> Vec<usize> {
    let mut v: Vec<(usize, f64)> = scores.enumerate().collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v.into_iter().map(|(i, _)| i).collect()
}

/// Ranked SPARQL plans for the top `k` BGPs.
pub fn plan(agp: &Agp, _prediction: Option<&AnswerTypePrediction>, k: usize) -> Result<Vec<QueryPlan>, PlanError> {
    Ok(top_k_bgps(agp, k)?
        .into_iter()
        .enumerate()
        .map(|(i, bgp)| {
            let (sparql, form) = to_sparql(&bgp, agp);
            QueryPlan { bgp, sparql, rank: i + 1, form }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_pgp, PhraseTerm, PhraseTriplePattern, RelevantVertex};

    fn rv(iri: &str, score: f64) -> RelevantVertex {
        RelevantVertex { iri: iri.into(), description: iri.into(), score }
    }

    fn rp(iri: &str, score: f64, anchor: &str, object_flag: bool) -> RelevantPredicate {
        RelevantPredicate { iri: iri.into(), description: iri.into(), score, anchor_vertex: anchor.into(), object_flag }
    }

    fn q_e_agp() -> Agp {
        let patterns = vec![
            PhraseTriplePattern::new(PhraseTerm::variable(1), "flow", PhraseTerm::entity("Danish Straits")),
            PhraseTriplePattern::new(PhraseTerm::variable(1), "city on shore", PhraseTerm::entity("Kaliningrad")),
        ];
        let mut agp = build_pgp(&patterns, false).unwrap();
        for n in &mut agp.nodes {
            match n.label.as_str() {
                "Danish Straits" => n.relevant_vertices = vec![rv("http://r/Danish_straits", 0.9)],
                "Kaliningrad" => n.relevant_vertices = vec![rv("http://r/Kaliningrad", 1.0)],
                _ => {}
            }
        }
        agp.edges[0].relevant_predicates =
            vec![rp("http://p/outflow", 0.6, "http://r/Danish_straits", true), rp("http://p/inflow", 0.5, "http://r/Danish_straits", true)];
        agp.edges[1].relevant_predicates = vec![rp("http://o/nearestCity", 0.3, "http://r/Kaliningrad", true)];
        agp
    }

    #[test]
    fn product_count_and_orientation() {
        let agp = q_e_agp();
        let bgps = enumerate_bgps(&agp).unwrap();
        assert_eq!(bgps.len(), 2);
        let t = &bgps[0].triples[0];
        assert_eq!(t.subject, BgpTerm::Variable { var_id: 1 });
        assert_eq!(t.object, BgpTerm::Iri { value: "http://r/Danish_straits".into() });
    }

    #[test]
    fn eq2_arithmetic() {
        let agp = q_e_agp();
        let top = top_k_bgps(&agp, 1).unwrap();
        // ((0.9 + 0.6) + (1.0 + 0.3)) / 2
        assert!((top[0].score - 1.4).abs() < 1e-12);
    }

    #[test]
    fn select_and_ask_forms() {
        let agp = q_e_agp();
        let plans = plan(&agp, None, 40).unwrap();
        assert_eq!(plans.len(), 2);
        assert_eq!(plans[0].rank, 1);
        assert_eq!(
            plans[0].sparql,
            "SELECT DISTINCT ?unknown1 ?c WHERE { ?unknown1 <http://p/outflow> <http://r/Danish_straits> . \
             ?unknown1 <http://o/nearestCity> <http://r/Kaliningrad> . \
             OPTIONAL { ?unknown1 <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> ?c } }"
        );

        let p = vec![PhraseTriplePattern::new(PhraseTerm::entity("Berlin"), "capital of", PhraseTerm::entity("Germany"))];
        let mut agp = build_pgp(&p, true).unwrap();
        agp.nodes[0].relevant_vertices = vec![rv("http://r/Berlin", 1.0)];
        agp.nodes[1].relevant_vertices = vec![rv("http://r/Germany", 1.0)];
        agp.edges[0].relevant_predicates = vec![rp("http://o/capital", 0.5, "http://r/Berlin", true)];
        let plans = plan(&agp, None, 40).unwrap();
        assert_eq!(plans[0].form, PlanForm::Ask);
        assert_eq!(plans[0].sparql, "ASK WHERE { <http://r/Germany> <http://o/capital> <http://r/Berlin> . }");
    }

    #[test]
    fn empty_annotation_is_not_viable() {
        let mut agp = q_e_agp();
        agp.edges[1].relevant_predicates.clear();
        assert!(matches!(enumerate_bgps(&agp), Err(PlanError::NoViableBgp(m)) if m.contains("city on shore")));
        let mut agp = q_e_agp();
        agp.nodes[1].relevant_vertices.clear();
        assert!(matches!(plan(&agp, None, 5), Err(PlanError::NoViableBgp(_))));
    }
}
