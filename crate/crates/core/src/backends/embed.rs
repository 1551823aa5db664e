use serde::{Deserialize, Serialize};

use super::{BackendError, Embedder};
use crate::text::{fnv1a, sentence_words};

pub const FALLBACK_DIM: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    pub dimension: usize,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        let dimension = values.len();
        EmbeddingVector { values, dimension }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Cosine similarity; zero when either vector is zero.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Hashed bag of lowercased unigrams and within-sentence bigrams, L2-normalized.
#[derive(Debug, Clone, Copy, Default)]
pub struct FallbackEmbedder;

impl FallbackEmbedder {
    pub fn vector(&self, text: &str) -> EmbeddingVector {
        let mut v = vec![0.0; FALLBACK_DIM];
        let bucket = |key: String| (fnv1a(key.as_bytes()) % FALLBACK_DIM as u64) as usize;
        for sentence in sentence_words(text) {
            for w in &sentence {
                v[bucket(format!("u\u{1f}{w}"))] += 1.0;
            }
            for pair in sentence.windows(2) {
                v[bucket(format!("b\u{1f}{}\u{1f}{}", pair[0], pair[1]))] += 1.0;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        EmbeddingVector::new(v)
    }
}

impl Embedder for FallbackEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, BackendError> {
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}
