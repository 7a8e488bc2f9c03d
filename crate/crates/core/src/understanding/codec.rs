//! Text encoding of triple-pattern lists exchanged with sequence models.
//!
//! Grammar: triples are separated by `" | "`; each triple reads
//! `[e1] <termA> [r] <relation> [e2] <termB>`; unknowns are written
//! `var:<id>`. Labels may not contain `[`.

use super::QuError;
use crate::graph::{PhraseTerm, PhraseTriplePattern};

const E1: &str = "[e1]";
const REL: &str = "[r]";
const E2: &str = "[e2]";

fn check_label(label: &str, what: &str) -> Result<(), QuError> {
    if label.is_empty() || label.trim() != label {
        return Err(QuError::InvalidPattern(format!("{what} label {label:?} must be non-empty and trimmed")));
    }
    if label.contains('[') {
        return Err(QuError::InvalidPattern(format!("{what} label {label:?} contains '['")));
    }
    Ok(())
}

fn encode_term(term: &PhraseTerm) -> Result<String, QuError> {
    term.validate().map_err(|e| QuError::InvalidPattern(e.to_string()))?;
    match term.var_id {
        Some(id) if term.is_variable() => Ok(format!("var:{id}")),
        _ => {
            check_label(&term.label, "entity")?;
            if parse_var(&term.label).is_some() {
                return Err(QuError::InvalidPattern(format!("entity label {:?} reads as a variable", term.label)));
            }
            Ok(term.label.clone())
        }
    }
}

pub fn encode_patterns(patterns: &[PhraseTriplePattern]) -> Result<String, QuError> {
    let mut parts = Vec::with_capacity(patterns.len());
    for p in patterns {
        check_label(&p.relation_label, "relation")?;
        parts.push(format!("{E1} {} {REL} {} {E2} {}", encode_term(&p.subject)?, p.relation_label, encode_term(&p.object)?));
    }
    Ok(parts.join(" | "))
}

fn parse_var(text: &str) -> Option<u32> {
    let digits = text.strip_prefix("var:")?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok().filter(|&id| id >= 1)
}

fn decode_term(text: &str) -> PhraseTerm {
    match parse_var(text) {
        Some(id) => PhraseTerm::variable(id),
        None => PhraseTerm::entity(text),
    }
}

/// Inverse of [`encode_patterns`]. Tolerates extra whitespace around markers.
pub fn parse_model_output(text: &str) -> Result<Vec<PhraseTriplePattern>, QuError> {
    let malformed = |offset: usize, message: &str| QuError::MalformedModelOutput { offset, message: message.to_string() };
    let mut patterns = Vec::new();
    let mut pos = text.len() - text.trim_start().len();
    if text.trim().is_empty() {
        return Err(malformed(0, "empty model output"));
    }
    loop {
        if !text[pos..].starts_with(E1) {
            return Err(malformed(pos, "expected [e1]"));
        }
        let a_start = pos + E1.len();
        let r_at = next_marker(text, a_start).filter(|&i| text[i..].starts_with(REL)).ok_or_else(|| malformed(a_start, "expected [r]"))?;
        let rel_start = r_at + REL.len();
        let e2_at = next_marker(text, rel_start).filter(|&i| text[i..].starts_with(E2)).ok_or_else(|| malformed(rel_start, "expected [e2]"))?;
        let b_start = e2_at + E2.len();
        let next = next_marker(text, b_start);
        let b_end = next.unwrap_or(text.len());

        let term_a = text[a_start..r_at].trim();
        let relation = text[rel_start..e2_at].trim();
        let mut term_b = text[b_start..b_end].trim();
        if next.is_some() {
            term_b = term_b.strip_suffix('|').ok_or_else(|| malformed(b_end, "expected ' | ' between triples"))?.trim_end();
        }
        for (label, at) in [(term_a, a_start), (relation, rel_start), (term_b, b_start)] {
            if label.is_empty() {
                return Err(malformed(at, "empty label"));
            }
        }
        let pattern = PhraseTriplePattern::new(decode_term(term_a), relation, decode_term(term_b));
        pattern.validate().map_err(|e| malformed(a_start, &e.to_string()))?;
        patterns.push(pattern);
        match next {
            Some(i) => pos = i,
            None => return Ok(patterns),
        }
    }
}

fn next_marker(text: &str, from: usize) -> Option<usize> {
    text[from..].find('[').map(|i| i + from)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q_e() -> Vec<PhraseTriplePattern> {
        vec![
            PhraseTriplePattern::new(PhraseTerm::variable(1), "flow", PhraseTerm::entity("Danish Straits")),
            PhraseTriplePattern::new(PhraseTerm::variable(1), "city on shore", PhraseTerm::entity("Kaliningrad")),
        ]
    }

    #[test]
    fn encodes_single_triple() {
        assert_eq!(encode_patterns(&q_e()[..1]).unwrap(), "[e1] var:1 [r] flow [e2] Danish Straits");
    }

    #[test]
    fn parses_running_example() {
        let text = "[e1] var:1 [r] flow [e2] Danish Straits | [e1] var:1 [r] city on shore [e2] Kaliningrad";
        assert_eq!(parse_model_output(text).unwrap(), q_e());
    }

    #[test]
    fn empty_labels_are_malformed() {
        match parse_model_output("[e1] [r] [e2]") {
            Err(QuError::MalformedModelOutput { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn offsets_point_at_violation() {
        let err = parse_model_output("[e1] a [x] b").unwrap_err();
        assert!(matches!(err, QuError::MalformedModelOutput { offset: 4, .. }), "{err:?}");
        let err = parse_model_output("hello").unwrap_err();
        assert!(matches!(err, QuError::MalformedModelOutput { offset: 0, .. }));
        let err = parse_model_output("[e1] a [r] b [e2] c [e1] d [r] e [e2] f").unwrap_err();
        assert!(matches!(err, QuError::MalformedModelOutput { offset: 20, .. }), "{err:?}");
    }

    #[test]
    fn rejects_unencodable_labels() {
        let bad = vec![PhraseTriplePattern::new(PhraseTerm::variable(1), "a[b", PhraseTerm::entity("X"))];
        assert!(encode_patterns(&bad).is_err());
        let bad = vec![PhraseTriplePattern::new(PhraseTerm::variable(1), "r", PhraseTerm::entity("var:2"))];
        assert!(encode_patterns(&bad).is_err());
    }
}
