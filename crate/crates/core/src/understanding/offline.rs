//! Rule-based phrase triple pattern extractor.
//!
//! Entities are quoted spans or runs of capitalized tokens (optionally joined
//! by connectors such as "of"). The question word and the noun it governs
//! stand for the main unknown `?1`. Each entity is linked to `?1` by the
//! cleaned phrase preceding it, or failing that, the phrase following it.
//! Boolean questions link consecutive entities to one another instead.

use super::lexicon::{self, is_in, tokenize, Token};
use super::QuError;
use crate::graph::{PhraseTerm, PhraseTriplePattern};
use std::ops::Range;

const IMPERATIVES: &[&str] = &["name", "give", "list", "show", "tell", "count"];
const IMPERATIVE_FILLER: &[&str] = &["me", "all", "the", "a", "an", "us"];
const RELATIVE_MARKERS: &[&str] = &["which", "that", "who", "whom", "whose", "where", "when"];

pub fn extract_offline(question: &str) -> Result<Vec<PhraseTriplePattern>, QuError> {
    let normalized = lexicon::normalize_whitespace(question);
    if normalized.is_empty() {
        return Err(QuError::EmptyQuestion);
    }
    let tokens = tokenize(&normalized);
    let entities = find_entities(&tokens);
    let none = || QuError::NoPatternsExtracted(normalized.clone());
    let label = |r: &Range<usize>| normalized[tokens[r.start].start..tokens[r.end - 1].end].to_string();

    let mut patterns = Vec::new();
    let boolean = tokens.first().is_some_and(|t| is_in(lexicon::BOOLEAN_OPENERS, &t.lower));
    if boolean {
        for pair in entities.windows(2) {
            let between = &tokens[pair[0].end..pair[1].start];
            let relation = clean(between).or_else(|| join(between)).ok_or_else(none)?;
            patterns.push(PhraseTriplePattern::new(
                PhraseTerm::entity(label(&pair[0])),
                relation,
                PhraseTerm::entity(label(&pair[1])),
            ));
        }
    } else {
        let frame = question_frame(&tokens);
        let is_boundary = |i: usize| {
            frame.contains(&i)
                || entities.iter().any(|e| e.contains(&i))
                || is_in(lexicon::CONJUNCTIONS, &tokens[i].lower)
        };
        for e in &entities {
            let mut before_start = e.start;
            while before_start > 0 && !is_boundary(before_start - 1) && !tokens[before_start - 1].clause_break {
                before_start -= 1;
            }
            let mut after_end = e.end;
            if !tokens[e.end - 1].clause_break {
                while after_end < tokens.len() && !is_boundary(after_end) {
                    after_end += 1;
                    if tokens[after_end - 1].clause_break {
                        break;
                    }
                }
            }
            let before = &tokens[before_start..e.start];
            let after = &tokens[e.end..after_end];
            let Some(relation) = clean(before).or_else(|| clean(after)).or_else(|| join(before)) else {
                continue;
            };
            let pattern = PhraseTriplePattern::new(PhraseTerm::variable(1), relation, PhraseTerm::entity(label(e)));
            if !patterns.contains(&pattern) {
                patterns.push(pattern);
            }
        }
    }
    if patterns.is_empty() {
        return Err(none());
    }
    Ok(patterns)
}

fn is_function_word(w: &str) -> bool {
    is_in(lexicon::QUESTION_WORDS, w)
        || is_in(lexicon::AUXILIARIES, w)
        || is_in(lexicon::STOPWORDS, w)
        || is_in(lexicon::PREPOSITIONS, w)
}

fn find_entities(tokens: &[Token]) -> Vec<Range<usize>> {
    let starts_entity = |i: usize| {
        let t = &tokens[i];
        t.is_capitalized() && !(i == 0 && is_function_word(&t.lower)) && !t.quoted
    };
    let mut spans = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i].quoted {
            let start = i;
            while i < tokens.len() && tokens[i].quoted {
                i += 1;
            }
            spans.push(start..i);
            continue;
        }
        if !starts_entity(i) {
            i += 1;
            continue;
        }
        let start = i;
        let mut end = i + 1;
        while end < tokens.len() && !tokens[end - 1].clause_break {
            if starts_entity(end) {
                end += 1;
                continue;
            }
            // connectors only join when another capitalized token follows
            let mut j = end;
            while j < tokens.len() && is_in(lexicon::CONNECTORS, &tokens[j].lower) && !tokens[j].clause_break {
                j += 1;
            }
            if j > end && j < tokens.len() && starts_entity(j) {
                end = j + 1;
            } else {
                break;
            }
        }
        spans.push(start..end);
        i = end;
    }
    spans
}

/// Token range taken by the question word and the noun it governs.
fn question_frame(tokens: &[Token]) -> Range<usize> {
    let lower = |i: usize| tokens.get(i).map(|t| t.lower.as_str());
    let is_plain_word = |i: usize| {
        tokens.get(i).is_some_and(|t| {
            !t.quoted && !t.is_capitalized() && !is_function_word(&t.lower) && !is_in(lexicon::COMMON_VERBS, &t.lower)
        })
    };
    if lower(0).is_some_and(|w| is_in(IMPERATIVES, w)) {
        let mut j = 1;
        while lower(j).is_some_and(|w| is_in(IMPERATIVE_FILLER, w)) {
            j += 1;
        }
        return if is_plain_word(j) { 0..j + 1 } else { 0..j };
    }
    let Some(qi) = tokens.iter().position(|t| is_in(lexicon::QUESTION_WORDS, &t.lower) && !is_in(IMPERATIVES, &t.lower))
    else {
        return 0..0;
    };
    match lower(qi) {
        Some("how") if lower(qi + 1).is_some_and(|w| w == "many" || w == "much") => qi..qi + 2,
        Some("which" | "what" | "whose") => {
            let mut j = qi + 1;
            while lower(j).is_some_and(|w| is_in(lexicon::ARTICLES, w)) {
                j += 1;
            }
            if is_plain_word(j) {
                qi..j + 1
            } else {
                qi..qi + 1
            }
        }
        _ => qi..qi + 1,
    }
}

fn is_leading_filler(w: &str) -> bool {
    is_function_word(w) || is_in(RELATIVE_MARKERS, w) || is_in(&["one", "has", "have", "had"], w)
}

fn is_trailing_filler(w: &str) -> bool {
    is_in(lexicon::AUXILIARIES, w)
        || is_in(lexicon::QUESTION_WORDS, w)
        || is_in(lexicon::ARTICLES, w)
        || is_in(lexicon::CONJUNCTIONS, w)
        || is_in(RELATIVE_MARKERS, w)
}

/// Strips filler at both ends and articles inside; lemmatizes single words.
fn clean(tokens: &[Token]) -> Option<String> {
    let start = tokens.iter().position(|t| !is_leading_filler(&t.lower))?;
    let end = tokens.iter().rposition(|t| !is_trailing_filler(&t.lower))? + 1;
    if start >= end {
        return None;
    }
    let words: Vec<&str> =
        tokens[start..end].iter().filter(|t| !is_in(lexicon::ARTICLES, &t.lower)).map(|t| t.text.as_str()).collect();
    match words.as_slice() {
        [] => None,
        [one] => Some(lexicon::lemmatize(one)),
        many => Some(many.join(" ")),
    }
}

fn join(tokens: &[Token]) -> Option<String> {
    let words: Vec<&str> =
        tokens.iter().filter(|t| !is_in(lexicon::ARTICLES, &t.lower)).map(|t| t.text.as_str()).collect();
    (!words.is_empty()).then(|| words.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn show(ps: &[PhraseTriplePattern]) -> Vec<String> {
        let term = |t: &PhraseTerm| match t.var_id {
            Some(v) => format!("?{v}"),
            None => t.label.clone(),
        };
        ps.iter().map(|p| format!("<{}, {}, {}>", term(&p.subject), p.relation_label, term(&p.object))).collect()
    }

    fn ex(q: &str) -> Vec<String> {
        show(&extract_offline(q).unwrap())
    }

    #[test]
    fn running_example() {
        assert_eq!(
            ex("Name the sea into which Danish Straits flows and has Kaliningrad as one of the city on the shore"),
            ["<?1, flow, Danish Straits>", "<?1, city on shore, Kaliningrad>"]
        );
    }

    #[test]
    fn wh_subject() {
        assert_eq!(ex("Who wrote Dracula?"), ["<?1, wrote, Dracula>"]);
        assert_eq!(ex("When did the Boston Tea Party take place?"), ["<?1, take place, Boston Tea Party>"]);
        assert_eq!(ex("How many students does Aalto University have?"), ["<?1, student, Aalto University>"]);
        assert_eq!(ex("What is the capital of Germany?"), ["<?1, capital of, Germany>"]);
        assert_eq!(ex("In which city is the headquarters of Air China?"), ["<?1, headquarters of, Air China>"]);
    }

    #[test]
    fn boolean_links_entities() {
        assert_eq!(ex("Is Berlin the capital of Germany?"), ["<Berlin, capital of, Germany>"]);
        assert!(matches!(extract_offline("Is Berlin big?"), Err(QuError::NoPatternsExtracted(_))));
    }

    #[test]
    fn connectors_and_quotes() {
        assert_eq!(ex("Who founded the University of Helsinki?"), ["<?1, founded, University of Helsinki>"]);
        assert_eq!(ex("Who wrote \"the lord of the rings\"?"), ["<?1, wrote, the lord of the rings>"]);
    }

    #[test]
    fn nothing_to_link() {
        assert!(matches!(extract_offline("what is this?"), Err(QuError::NoPatternsExtracted(_))));
        assert!(matches!(extract_offline("   "), Err(QuError::EmptyQuestion)));
    }
}
