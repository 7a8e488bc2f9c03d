//! Rule-table answer typing.
//!
//! | first match                                            | data type |
//! |--------------------------------------------------------|-----------|
//! | opens with is/are/was/were/did/does/do                 | boolean   |
//! | contains "how many" or "how much", or opens with count | numeric   |
//! | "when" is the question word, or what/which year/date   | date      |
//! | anything else                                          | string    |
//!
//! The semantic type is the singular form of the first noun-like token.

use super::lexicon::{self, is_in, tokenize, Token};
use super::{AnswerTypePrediction, DataType};

pub fn predict_data_type(question: &str) -> DataType {
    let tokens = tokenize(&lexicon::normalize_whitespace(question));
    let words: Vec<&str> = tokens.iter().map(|t| t.lower.as_str()).collect();
    let Some(&first) = words.first() else {
        return DataType::String;
    };
    if is_in(lexicon::BOOLEAN_OPENERS, first) {
        return DataType::Boolean;
    }
    let has_pair = |a: &str, bs: &[&str]| words.windows(2).any(|w| w[0] == a && bs.contains(&w[1]));
    if has_pair("how", &["many", "much"]) || first == "count" {
        return DataType::Numeric;
    }
    let question_word = words.iter().position(|w| is_in(&["who", "whom", "whose", "what", "which", "where", "when", "how"], w));
    if let Some(i) = question_word {
        if words[i] == "when" {
            return DataType::Date;
        }
        if matches!(words[i], "what" | "which") && words.get(i + 1).is_some_and(|w| matches!(*w, "year" | "date")) {
            return DataType::Date;
        }
    }
    DataType::String
}

fn skippable(t: &Token) -> bool {
    let w = t.lower.as_str();
    is_in(lexicon::STOPWORDS, w)
        || is_in(lexicon::AUXILIARIES, w)
        || is_in(lexicon::QUESTION_WORDS, w)
        || is_in(lexicon::COMMON_VERBS, w)
        || is_in(lexicon::PREPOSITIONS, w)
}

/// First noun-like token after the question word. Scanning stops at the
/// first capitalized or quoted token since that begins an entity mention.
pub fn predict_semantic_type(question: &str) -> Option<String> {
    let tokens = tokenize(&lexicon::normalize_whitespace(question));
    let start = tokens.iter().position(|t| is_in(lexicon::QUESTION_WORDS, &t.lower))?;
    for (i, t) in tokens.iter().enumerate().skip(start + 1) {
        if skippable(t) {
            continue;
        }
        let entity_like = t.quoted || t.is_numeric() || (i > 0 && t.is_capitalized());
        if entity_like {
            return None;
        }
        return Some(lexicon::lemmatize(&t.lower));
    }
    None
}

pub fn predict_answer_type(question: &str) -> AnswerTypePrediction {
    let data_type = predict_data_type(question);
    let semantic = if data_type == DataType::String { predict_semantic_type(question) } else { None };
    AnswerTypePrediction::new(data_type, semantic)
}
