//! Semantic affinity between short labels.
//!
//! A label is split into tokens and each token is embedded, either from the
//! word-vector store or, for unknown tokens, with a hashed character-trigram
//! model. The affinity of two labels is the mean pairwise cosine similarity
//! over all token pairs, where a word-vector token compared with a
//! character-vector token contributes zero.

mod coarse;
mod store;

pub use coarse::CoarseProvider;
pub use store::EmbeddingStore;

use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AffinityError {
    #[error("label {0:?} has no tokens after normalization")]
    EmptyAfterNormalization(String),
    #[error("embedding file line {line}: {message}")]
    Load { line: usize, message: String },
    #[error("affinity provider unavailable: {0}")]
    ProviderUnavailable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingSource {
    Word,
    Char,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenEmbedding {
    pub token: String,
    /// Unit length.
    pub vector: Vec<f64>,
    pub source: EmbeddingSource,
}

/// Lowercases, drops punctuation other than hyphens inside words, and splits
/// on whitespace and underscores.
pub fn normalize_tokens(label: &str) -> Vec<String> {
    let chars: Vec<char> = label.chars().collect();
    let mut cleaned = String::with_capacity(label.len());
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            cleaned.extend(c.to_lowercase());
        } else if c.is_whitespace() || c == '_' {
            cleaned.push(' ');
        } else if c == '-' {
            let inner = i > 0
                && chars[i - 1].is_alphanumeric()
                && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
            cleaned.push(if inner { '-' } else { ' ' });
        }
    }
    cleaned.split_whitespace().map(str::to_string).collect()
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Hashed character-trigram vector of a token, padded with `<` and `>`.
/// Each trigram adds ±1 to one of `dimension` buckets; the result has unit
/// length and is never all-zero.
pub fn char_embed(token: &str, dimension: usize) -> Vec<f64> {
    let padded: Vec<char> = std::iter::once('<').chain(token.chars()).chain(std::iter::once('>')).collect();
    let mut v = vec![0.0; dimension];
    let mut buf = String::new();
    for w in padded.windows(3) {
        buf.clear();
        buf.extend(w);
        let h = fnv1a(buf.as_bytes());
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        v[(h % dimension as u64) as usize] += sign;
    }
    if v.iter().all(|&x| x == 0.0) {
        v[(fnv1a(token.as_bytes()) % dimension as u64) as usize] = 1.0;
    }
    unit(v)
}

pub fn embed_label(label: &str, store: &EmbeddingStore) -> Result<Vec<TokenEmbedding>, AffinityError> {
    let tokens = normalize_tokens(label);
    if tokens.is_empty() {
        return Err(AffinityError::EmptyAfterNormalization(label.to_string()));
    }
    Ok(tokens
        .into_iter()
        .map(|token| match store.get(&token) {
            Some(v) => TokenEmbedding { vector: unit(v.iter().map(|&x| f64::from(x)).collect()), token, source: EmbeddingSource::Word },
            None => TokenEmbedding { vector: char_embed(&token, store.dimension()), token, source: EmbeddingSource::Char },
        })
        .collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Affinity of two already embedded labels.
pub fn affinity_embedded(x: &[TokenEmbedding], y: &[TokenEmbedding]) -> f64 {
    if x.is_empty() || y.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for a in x {
        for b in y {
            if a.source == b.source {
                total += dot(&a.vector, &b.vector);
            }
        }
    }
    (total / (x.len() * y.len()) as f64).clamp(-1.0, 1.0)
}

pub fn affinity(label_x: &str, label_y: &str, store: &EmbeddingStore) -> Result<f64, AffinityError> {
    Ok(affinity_embedded(&embed_label(label_x, store)?, &embed_label(label_y, store)?))
}

/// Scores candidate descriptions against a phrase label.
#[derive(Debug, Clone)]
pub enum Scorer {
    Fine(Arc<EmbeddingStore>),
    /// One vector per whole label from a remote provider.
    Coarse(CoarseProvider),
}

impl Scorer {
    pub fn fine(store: EmbeddingStore) -> Self {
        Scorer::Fine(Arc::new(store))
    }

    /// Affinity of `label` with each candidate, in order. Candidates that are
    /// empty after normalization score 0.
    pub async fn score_batch(&self, label: &str, candidates: &[String]) -> Result<Vec<f64>, AffinityError> {
        match self {
            Scorer::Fine(store) => {
                let x = embed_label(label, store)?;
                Ok(candidates
                    .iter()
                    .map(|c| embed_label(c, store).map(|y| affinity_embedded(&x, &y)).unwrap_or(0.0))
                    .collect())
            }
            Scorer::Coarse(provider) => provider.score_batch(label, candidates).await,
        }
    }

    pub async fn score(&self, label_x: &str, label_y: &str) -> Result<f64, AffinityError> {
        match self {
            Scorer::Fine(store) => affinity(label_x, label_y, store),
            Scorer::Coarse(provider) => provider.coarse_affinity(label_x, label_y).await,
        }
    }
}
