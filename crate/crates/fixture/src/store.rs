use std::collections::HashMap;

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(String),
    Blank(String),
    Literal { value: String, datatype: Option<String>, lang: Option<String> },
}

impl Term {
    pub fn iri(value: impl Into<String>) -> Self {
        Term::Iri(value.into())
    }

    pub fn literal(value: impl Into<String>) -> Self {
        Term::Literal { value: value.into(), datatype: None, lang: None }
    }

    /// Lexical form, used by `str()` and text matching.
    pub fn lexical(&self) -> &str {
        match self {
            Term::Iri(v) | Term::Blank(v) => v,
            Term::Literal { value, .. } => value,
        }
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

/// Triples held in insertion order with subject/object indexes.
#[derive(Debug, Default, Clone)]
pub struct TripleStore {
    triples: Vec<Triple>,
    by_subject: HashMap<Term, Vec<usize>>,
    by_object: HashMap<Term, Vec<usize>>,
    by_predicate: HashMap<Term, Vec<usize>>,
}

impl TripleStore {
    pub fn new(triples: Vec<Triple>) -> Self {
        let mut store = TripleStore::default();
        for t in triples {
            store.insert(t);
        }
        store
    }

    pub fn from_ntriples(doc: &str) -> Result<Self, crate::ntriples::ParseError> {
        Ok(Self::new(crate::ntriples::parse(doc)?))
    }

    pub fn insert(&mut self, triple: Triple) {
        if self.contains(&triple) {
            return;
        }
        let idx = self.triples.len();
        self.by_subject.entry(triple.subject.clone()).or_default().push(idx);
        self.by_object.entry(triple.object.clone()).or_default().push(idx);
        self.by_predicate.entry(triple.predicate.clone()).or_default().push(idx);
        self.triples.push(triple);
    }

    fn contains(&self, triple: &Triple) -> bool {
        self.by_subject
            .get(&triple.subject)
            .is_some_and(|ids| ids.iter().any(|&i| self.triples[i] == *triple))
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    /// Triples matching the bound positions; `None` is a wildcard.
    pub fn matching<'a>(
        &'a self,
        subject: Option<&Term>,
        predicate: Option<&Term>,
        object: Option<&Term>,
    ) -> Box<dyn Iterator<Item = &'a Triple> + 'a> {
        let candidates: Box<dyn Iterator<Item = &'a Triple> + 'a> = if let Some(s) = subject {
            Box::new(self.indexed(&self.by_subject, s))
        } else if let Some(o) = object {
            Box::new(self.indexed(&self.by_object, o))
        } else if let Some(p) = predicate {
            Box::new(self.indexed(&self.by_predicate, p))
        } else {
            Box::new(self.triples.iter())
        };
        let (s, p, o) = (subject.cloned(), predicate.cloned(), object.cloned());
        Box::new(candidates.filter(move |t| {
            s.as_ref().is_none_or(|s| &t.subject == s)
                && p.as_ref().is_none_or(|p| &t.predicate == p)
                && o.as_ref().is_none_or(|o| &t.object == o)
        }))
    }

    fn indexed<'a>(&'a self, index: &'a HashMap<Term, Vec<usize>>, key: &Term) -> impl Iterator<Item = &'a Triple> + 'a {
        index.get(key).into_iter().flatten().map(move |&i| &self.triples[i])
    }

    /// Distinct literal objects in insertion order.
    pub fn literals(&self) -> Vec<&Term> {
        let mut seen = std::collections::HashSet::new();
        self.triples
            .iter()
            .map(|t| &t.object)
            .filter(|o| o.is_literal() && seen.insert(*o))
            .collect()
    }
}
