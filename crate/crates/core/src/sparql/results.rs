use super::SparqlError;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermKind {
    Iri,
    Literal,
    Bnode,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RdfTerm {
    pub kind: TermKind,
    pub value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datatype: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
}

impl RdfTerm {
    pub fn iri(value: impl Into<String>) -> Self {
        RdfTerm { kind: TermKind::Iri, value: value.into(), datatype: None, lang: None }
    }

    pub fn literal(value: impl Into<String>) -> Self {
        RdfTerm { kind: TermKind::Literal, value: value.into(), datatype: None, lang: None }
    }

    pub fn typed(value: impl Into<String>, datatype: impl Into<String>) -> Self {
        RdfTerm { kind: TermKind::Literal, value: value.into(), datatype: Some(datatype.into()), lang: None }
    }

    pub fn lang_string(value: impl Into<String>, lang: impl Into<String>) -> Self {
        RdfTerm { kind: TermKind::Literal, value: value.into(), datatype: None, lang: Some(lang.into()) }
    }

    pub fn is_iri(&self) -> bool {
        self.kind == TermKind::Iri
    }

    pub fn is_literal(&self) -> bool {
        self.kind == TermKind::Literal
    }

    /// Plain or `xsd:string` literal, with or without a language tag.
    pub fn is_string_literal(&self) -> bool {
        self.is_literal()
            && match self.datatype.as_deref() {
                None => true,
                Some(dt) => dt == XSD_STRING || dt == RDF_LANG_STRING,
            }
    }

    /// SPARQL surface syntax of the term.
    pub fn to_sparql(&self) -> String {
        match self.kind {
            TermKind::Iri => format!("<{}>", self.value),
            TermKind::Bnode => format!("_:{}", self.value),
            TermKind::Literal => {
                let body = escape_literal(&self.value);
                match (&self.lang, &self.datatype) {
                    (Some(l), _) => format!("\"{body}\"@{l}"),
                    (None, Some(dt)) => format!("\"{body}\"^^<{dt}>"),
                    (None, None) => format!("\"{body}\""),
                }
            }
        }
    }
}

impl std::fmt::Display for RdfTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            TermKind::Iri | TermKind::Bnode => f.write_str(&self.value),
            TermKind::Literal => f.write_str(&self.to_sparql()),
        }
    }
}

pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
pub const RDF_LANG_STRING: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";

fn escape_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BindingsTable {
    pub variables: Vec<String>,
    pub rows: Vec<BTreeMap<String, RdfTerm>>,
}

impl BindingsTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryResults {
    Bindings(BindingsTable),
    Boolean(bool),
}

fn parse_term(v: &Value) -> Result<RdfTerm, SparqlError> {
    let bad = |m: &str| SparqlError::MalformedResults(m.to_string());
    let obj = v.as_object().ok_or_else(|| bad("binding is not an object"))?;
    let kind = obj.get("type").and_then(Value::as_str).ok_or_else(|| bad("binding without type"))?;
    let value = obj.get("value").and_then(Value::as_str).ok_or_else(|| bad("binding without value"))?.to_string();
    let datatype = obj.get("datatype").and_then(Value::as_str).map(str::to_string);
    let lang = obj.get("xml:lang").and_then(Value::as_str).map(str::to_string);
    let kind = match kind {
        "uri" => TermKind::Iri,
        "bnode" => TermKind::Bnode,
        // `typed-literal` is what older Virtuoso versions emit
        "literal" | "typed-literal" => TermKind::Literal,
        other => return Err(bad(&format!("unknown term type {other:?}"))),
    };
    if kind != TermKind::Literal {
        return Ok(RdfTerm { kind, value, datatype: None, lang: None });
    }
    // a language tag wins over a redundant rdf:langString datatype
    let datatype = if lang.is_some() { None } else { datatype };
    Ok(RdfTerm { kind, value, datatype, lang })
}

/// Parses a SPARQL 1.1 JSON results document.
pub fn parse_results(body: &str) -> Result<QueryResults, SparqlError> {
    let doc: Value = serde_json::from_str(body).map_err(|e| SparqlError::MalformedResults(e.to_string()))?;
    if let Some(b) = doc.get("boolean") {
        return b.as_bool().map(QueryResults::Boolean).ok_or(SparqlError::MalformedResults("boolean is not a bool".into()));
    }
    let mut variables: Vec<String> = doc
        .pointer("/head/vars")
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(Value::as_str).map(str::to_string).collect())
        .unwrap_or_default();
    let bindings = doc
        .pointer("/results/bindings")
        .and_then(Value::as_array)
        .ok_or(SparqlError::MalformedResults("missing results.bindings".into()))?;
    let mut rows = Vec::with_capacity(bindings.len());
    for b in bindings {
        let obj = b.as_object().ok_or(SparqlError::MalformedResults("row is not an object".into()))?;
        let mut row = BTreeMap::new();
        for (k, v) in obj {
            if !variables.contains(k) {
                variables.push(k.clone());
            }
            row.insert(k.clone(), parse_term(v)?);
        }
        rows.push(row);
    }
    Ok(QueryResults::Bindings(BindingsTable { variables, rows }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_select_document() {
        let body = r#"{"head":{"vars":["v","d"]},"results":{"bindings":[
            {"v":{"type":"uri","value":"http://x/a"},"d":{"type":"literal","value":"A","xml:lang":"en"}},
            {"v":{"type":"bnode","value":"b0"},"d":{"type":"typed-literal","value":"3","datatype":"http://www.w3.org/2001/XMLSchema#integer"}}
        ]}}"#;
        let QueryResults::Bindings(t) = parse_results(body).unwrap() else { panic!() };
        assert_eq!(t.variables, ["v", "d"]);
        assert_eq!(t.rows[0]["d"], RdfTerm::lang_string("A", "en"));
        assert_eq!(t.rows[1]["d"].datatype.as_deref(), Some("http://www.w3.org/2001/XMLSchema#integer"));
        assert_eq!(t.rows[1]["v"].kind, TermKind::Bnode);
    }

    #[test]
    fn empty_and_boolean() {
        let QueryResults::Bindings(t) = parse_results(r#"{"head":{"vars":["x"]},"results":{"bindings":[]}}"#).unwrap() else {
            panic!()
        };
        assert_eq!((t.variables.len(), t.rows.len()), (1, 0));
        assert_eq!(parse_results(r#"{"head":{},"boolean":true}"#).unwrap(), QueryResults::Boolean(true));
    }

    #[test]
    fn malformed() {
        for body in ["<html>", r#"{"head":{}}"#, r#"{"boolean":"yes"}"#, r#"{"results":{"bindings":[{"x":{"value":"1"}}]}}"#] {
            assert!(matches!(parse_results(body), Err(SparqlError::MalformedResults(_))), "{body}");
        }
    }

    #[test]
    fn literal_surface_syntax() {
        assert_eq!(RdfTerm::typed("1", "http://t").to_sparql(), "\"1\"^^<http://t>");
        assert_eq!(RdfTerm::literal("a\"b").to_sparql(), "\"a\\\"b\"");
        assert_eq!(RdfTerm::iri("http://x").to_sparql(), "<http://x>");
    }
}
