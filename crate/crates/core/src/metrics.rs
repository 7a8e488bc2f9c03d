//! Precision, recall and macro F1 over answer sets, and benchmark files.

use crate::understanding::DataType;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub p: f64,
    pub r: f64,
    pub f1: f64,
}

/// Set-based precision, recall and F1.
///
/// Precision is 0 for an empty prediction. A question with no gold answers
/// scores 1 when nothing is predicted and 0 otherwise.
pub fn evaluate<S: AsRef<str> + Ord>(predicted: &BTreeSet<S>, gold: &BTreeSet<S>) -> Scores {
    if gold.is_empty() {
        let v = if predicted.is_empty() { 1.0 } else { 0.0 };
        return Scores { p: v, r: v, f1: v };
    }
    let hits = predicted.intersection(gold).count() as f64;
    let p = if predicted.is_empty() { 0.0 } else { hits / predicted.len() as f64 };
    let r = hits / gold.len() as f64;
    let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    Scores { p, r, f1 }
}

/// Unweighted mean of each score over questions; zeros for an empty list.
pub fn macro_scores(per_question: &[Scores]) -> Scores {
    if per_question.is_empty() {
        return Scores::default();
    }
    let n = per_question.len() as f64;
    Scores {
        p: per_question.iter().map(|s| s.p).sum::<f64>() / n,
        r: per_question.iter().map(|s| s.r).sum::<f64>() / n,
        f1: per_question.iter().map(|s| s.f1).sum::<f64>() / n,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkItem {
    pub question: String,
    pub answers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_type: Option<DataType>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BenchmarkError {
    #[error("malformed benchmark at line {line}, column {column}: {message}")]
    Malformed { line: usize, column: usize, message: String },
    #[error("benchmark contains no questions")]
    Empty,
}

pub fn parse_benchmark(text: &str) -> Result<Vec<BenchmarkItem>, BenchmarkError> {
    let items: Vec<BenchmarkItem> = serde_json::from_str(text).map_err(|e| BenchmarkError::Malformed {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if items.is_empty() {
        return Err(BenchmarkError::Empty);
    }
    Ok(items)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionReport {
    pub question: String,
    pub predicted: Vec<String>,
    pub gold: Vec<String>,
    #[serde(flatten)]
    pub scores: Scores,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub per_question: Vec<QuestionReport>,
    #[serde(rename = "macro")]
    pub macro_scores: Scores,
}

impl EvaluationReport {
    pub fn from_questions(per_question: Vec<QuestionReport>) -> Self {
        let scores: Vec<Scores> = per_question.iter().map(|q| q.scores).collect();
        EvaluationReport { macro_scores: macro_scores(&scores), per_question }
    }
}

/// Scores one question from answer strings.
pub fn score_question(question: &str, predicted: Vec<String>, gold: Vec<String>, error: Option<String>) -> QuestionReport {
    let p: BTreeSet<&str> = predicted.iter().map(String::as_str).collect();
    let g: BTreeSet<&str> = gold.iter().map(String::as_str).collect();
    QuestionReport { question: question.to_string(), scores: evaluate(&p, &g), predicted, gold, error }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[&'static str]) -> BTreeSet<&'static str> {
        items.iter().copied().collect()
    }

    #[test]
    fn set_arithmetic() {
        assert_eq!(evaluate(&set(&["A", "B"]), &set(&["A", "B"])), Scores { p: 1.0, r: 1.0, f1: 1.0 });
        let s = evaluate(&set(&["A", "B", "C"]), &set(&["A", "B", "D", "E"]));
        assert!((s.p - 2.0 / 3.0).abs() < 1e-12 && (s.r - 0.5).abs() < 1e-12 && (s.f1 - 4.0 / 7.0).abs() < 1e-12);
        assert_eq!(evaluate(&set(&[]), &set(&["A"])), Scores::default());
        assert_eq!(evaluate(&set(&[]), &set(&[])).f1, 1.0);
    }

    #[test]
    fn benchmark_parsing() {
        let items = parse_benchmark(r#"[{"question": "q", "answers": ["a"], "data_type": "date"}]"#).unwrap();
        assert_eq!(items[0].data_type, Some(DataType::Date));
        assert_eq!(parse_benchmark("[]"), Err(BenchmarkError::Empty));
        match parse_benchmark("[\n{\"question\": 3}]") {
            Err(BenchmarkError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn report_json_shape() {
        let r = EvaluationReport::from_questions(vec![score_question("q", vec!["a".into()], vec!["a".into()], None)]);
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["macro"]["f1"], 1.0);
        assert_eq!(v["per_question"][0]["p"], 1.0);
    }
}
