//! A line-oriented N-Triples reader.

use crate::store::{Term, Triple};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

/// Parses an N-Triples document. Blank lines and `#` comments are skipped.
pub fn parse(input: &str) -> Result<Vec<Triple>, ParseError> {
    let mut triples = Vec::new();
    for (idx, raw) in input.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cursor = Cursor { text: line, pos: 0 };
        let fail = |message: String| ParseError { line: idx + 1, message };
        let subject = cursor.term().map_err(fail)?;
        let predicate = cursor.term().map_err(fail)?;
        let object = cursor.term().map_err(fail)?;
        cursor.skip_ws();
        if !cursor.rest().starts_with('.') {
            return Err(fail(format!("expected '.' at column {}", cursor.pos + 1)));
        }
        cursor.pos += 1;
        cursor.skip_ws();
        if !cursor.rest().is_empty() && !cursor.rest().starts_with('#') {
            return Err(fail(format!("trailing content at column {}", cursor.pos + 1)));
        }
        if matches!(subject, Term::Literal { .. }) {
            return Err(fail("literal in subject position".into()));
        }
        if !matches!(predicate, Term::Iri(_)) {
            return Err(fail("predicate must be an IRI".into()));
        }
        triples.push(Triple { subject, predicate, object });
    }
    Ok(triples)
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn term(&mut self) -> Result<Term, String> {
        self.skip_ws();
        let rest = self.rest();
        if let Some(body) = rest.strip_prefix('<') {
            let end = body.find('>').ok_or_else(|| format!("unterminated IRI at column {}", self.pos + 1))?;
            self.pos += end + 2;
            return Ok(Term::Iri(body[..end].to_string()));
        }
        if let Some(body) = rest.strip_prefix("_:") {
            let len = body.find(char::is_whitespace).unwrap_or(body.len());
            if len == 0 {
                return Err(format!("empty blank node label at column {}", self.pos + 1));
            }
            self.pos += 2 + len;
            return Ok(Term::Blank(body[..len].to_string()));
        }
        if rest.starts_with('"') {
            let start = self.pos;
            let (value, consumed) = unescape_quoted(&rest[1..], '"')
                .ok_or_else(|| format!("unterminated literal at column {}", start + 1))?;
            self.pos += 1 + consumed;
            let after = self.rest();
            if let Some(tag) = after.strip_prefix('@') {
                let len = tag
                    .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
                    .unwrap_or(tag.len());
                self.pos += 1 + len;
                return Ok(Term::Literal { value, datatype: None, lang: Some(tag[..len].to_ascii_lowercase()) });
            }
            if after.starts_with("^^<") {
                let body = &after[3..];
                let end = body.find('>').ok_or_else(|| "unterminated datatype IRI".to_string())?;
                self.pos += 3 + end + 1;
                return Ok(Term::Literal { value, datatype: Some(body[..end].to_string()), lang: None });
            }
            return Ok(Term::Literal { value, datatype: None, lang: None });
        }
        Err(format!("unexpected input at column {}", self.pos + 1))
    }
}

/// Reads a quoted string body (after the opening quote). Returns the unescaped
/// value and the number of bytes consumed including the closing quote.
pub(crate) fn unescape_quoted(body: &str, quote: char) -> Option<(String, usize)> {
    let mut out = String::new();
    let mut chars = body.char_indices();
    while let Some((i, c)) = chars.next() {
        if c == quote {
            return Some((out, i + c.len_utf8()));
        }
        if c == '\\' {
            let (_, esc) = chars.next()?;
            match esc {
                'n' => out.push('\n'),
                't' => out.push('\t'),
                'r' => out.push('\r'),
                'u' => {
                    let hex: String = (0..4).filter_map(|_| chars.next().map(|(_, h)| h)).collect();
                    out.push(char::from_u32(u32::from_str_radix(&hex, 16).ok()?)?);
                }
                other => out.push(other),
            }
        } else {
            out.push(c);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_term_kinds() {
        let doc = r#"
# comment
<http://a/s> <http://a/p> <http://a/o> .
<http://a/s> <http://a/label> "Hello \"world\""@EN .
_:b1 <http://a/date> "1773-12-16"^^<http://www.w3.org/2001/XMLSchema#date> .
"#;
        let triples = parse(doc).unwrap();
        assert_eq!(triples.len(), 3);
        assert_eq!(
            triples[1].object,
            Term::Literal { value: "Hello \"world\"".into(), datatype: None, lang: Some("en".into()) }
        );
        assert_eq!(triples[2].subject, Term::Blank("b1".into()));
    }

    #[test]
    fn reports_line_numbers() {
        let err = parse("<http://a> <http://b> <http://c> .\n<http://a> <http://b> \"x\"\n").unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn rejects_literal_subject() {
        assert!(parse("\"x\" <http://b> <http://c> .").is_err());
    }
}
