use super::AffinityError;
use std::collections::HashMap;
use std::path::Path;

/// Word vectors loaded from the whitespace-separated text format.
///
/// Vectors are kept as `f32` to keep large vocabularies affordable; all
/// arithmetic happens in `f64`.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dimension: usize,
    vocabulary: HashMap<String, Vec<f32>>,
    skipped_zero: usize,
}

impl EmbeddingStore {
    /// A store with no vocabulary; every token uses the character model.
    pub fn char_only(dimension: usize) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        EmbeddingStore { dimension, vocabulary: HashMap::new(), skipped_zero: 0 }
    }

    /// Parses `token v1 .. vD` lines. A leading `N D` header is optional.
    /// All-zero vectors are skipped so their tokens fall back to characters.
    pub fn parse(text: &str) -> Result<Self, AffinityError> {
        let mut dimension: Option<usize> = None;
        let mut vocabulary = HashMap::new();
        let mut skipped_zero = 0;
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else { continue };
            let rest: Vec<&str> = fields.collect();
            if idx == 0 && rest.len() == 1 && token.parse::<usize>().is_ok() {
                if let Ok(d) = rest[0].parse::<usize>() {
                    dimension = Some(d);
                    continue;
                }
            }
            let vector = rest
                .iter()
                .map(|f| f.parse::<f32>())
                .collect::<Result<Vec<f32>, _>>()
                .map_err(|e| AffinityError::Load { line: line_no, message: e.to_string() })?;
            match dimension {
                None if vector.is_empty() => {
                    return Err(AffinityError::Load { line: line_no, message: "vector has no components".into() })
                }
                None => dimension = Some(vector.len()),
                Some(d) if d != vector.len() => {
                    return Err(AffinityError::Load {
                        line: line_no,
                        message: format!("expected {d} components, found {}", vector.len()),
                    })
                }
                Some(_) => {}
            }
            if vector.iter().all(|&v| v == 0.0) {
                skipped_zero += 1;
                continue;
            }
            vocabulary.insert(token.to_lowercase(), vector);
        }
        let dimension = dimension.ok_or(AffinityError::Load { line: 0, message: "no vectors found".into() })?;
        if dimension == 0 {
            return Err(AffinityError::Load { line: 1, message: "dimension must be positive".into() });
        }
        if skipped_zero > 0 {
            tracing::warn!(skipped_zero, "ignored all-zero vectors");
        }
        Ok(EmbeddingStore { dimension, vocabulary, skipped_zero })
    }

    pub fn load(path: &Path) -> Result<Self, AffinityError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AffinityError::Load { line: 0, message: format!("{}: {e}", path.display()) })?;
        Self::parse(&text)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocabulary.is_empty()
    }

    /// Number of all-zero vectors dropped while loading.
    pub fn skipped_zero(&self) -> usize {
        self.skipped_zero
    }

    pub fn get(&self, token: &str) -> Option<&[f32]> {
        self.vocabulary.get(token).map(Vec::as_slice)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.vocabulary.contains_key(token)
    }

    /// Adds or replaces one vector.
    pub fn insert(&mut self, token: &str, vector: Vec<f32>) -> Result<(), AffinityError> {
        if vector.len() != self.dimension {
            return Err(AffinityError::Load {
                line: 0,
                message: format!("expected {} components, found {}", self.dimension, vector.len()),
            });
        }
        if vector.iter().all(|&v| v == 0.0) {
            return Err(AffinityError::Load { line: 0, message: format!("all-zero vector for {token:?}") });
        }
        self.vocabulary.insert(token.to_lowercase(), vector);
        Ok(())
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.vocabulary.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_optional() {
        let a = EmbeddingStore::parse("2 3\nx 1 0 0\ny 0 1 0\n").unwrap();
        let b = EmbeddingStore::parse("x 1 0 0\ny 0 1 0\n").unwrap();
        assert_eq!((a.dimension(), a.len()), (3, 2));
        assert_eq!((b.dimension(), b.len()), (3, 2));
    }

    #[test]
    fn dimension_mismatch_names_the_line() {
        let err = EmbeddingStore::parse("x 1 0 0\ny 0 1\n").unwrap_err();
        assert!(matches!(err, AffinityError::Load { line: 2, .. }), "{err:?}");
        assert!(EmbeddingStore::parse("x 1 zz\n").is_err());
        assert!(EmbeddingStore::parse("").is_err());
    }

    #[test]
    fn zero_vectors_are_skipped() {
        let s = EmbeddingStore::parse("x 1 0\nz 0 0\n").unwrap();
        assert!(!s.contains("z"));
        assert_eq!(s.skipped_zero(), 1);
    }
}
