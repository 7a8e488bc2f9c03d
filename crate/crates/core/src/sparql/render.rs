use super::{Dialect, SparqlError};

const REGEX_META: &[char] = &['\\', '.', '^', '$', '|', '?', '*', '+', '(', ')', '[', ']', '{', '}'];

/// Removes characters that would break out of the quoted search expression.
/// Quotes are dropped rather than escaped because Virtuoso's free-text
/// parser does not honour escapes consistently.
pub fn clean_keyword(keyword: &str) -> String {
    let stripped: String = keyword.chars().filter(|c| !matches!(c, '"' | '\'' | '\\')).collect();
    stripped.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn cleaned(keywords: &[String]) -> Result<Vec<String>, SparqlError> {
    if keywords.is_empty() {
        return Err(SparqlError::InvalidKeywords("no keywords".into()));
    }
    keywords
        .iter()
        .map(|k| {
            let c = clean_keyword(k);
            if c.is_empty() {
                Err(SparqlError::InvalidKeywords(format!("keyword {k:?} is empty after escaping")))
            } else {
                Ok(c)
            }
        })
        .collect()
}

fn regex_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if REGEX_META.contains(&c) {
            // one backslash for the regex, doubled for the SPARQL string
            out.push_str("\\\\");
        }
        out.push(c);
    }
    out
}

/// Text-search fragment restricting `?var` to literals matching any keyword.
pub fn render_contains(dialect: Dialect, var: &str, keywords: &[String]) -> Result<String, SparqlError> {
    let keywords = cleaned(keywords)?;
    let quoted_or = || keywords.iter().map(|k| format!("\"{k}\"")).collect::<Vec<_>>().join(" OR ");
    Ok(match dialect {
        Dialect::Virtuoso => format!("?{var} <bif:contains> '({})'", quoted_or()),
        Dialect::Stardog => format!(
            "SERVICE <tag:stardog:api:search:textMatch> {{ [] <tag:stardog:api:search:query> '{}' ; <tag:stardog:api:search:result> ?{var} . }}",
            quoted_or()
        ),
        Dialect::GenericRegex => {
            let alternation = keywords.iter().map(|k| regex_escape(k)).collect::<Vec<_>>().join("|");
            format!("FILTER(regex(str(?{var}), \"{alternation}\", \"i\"))")
        }
    })
}
