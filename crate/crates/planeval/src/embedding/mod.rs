//! Embedding providers: sentence and word similarity behind small traits.
//!
//! Submodules:
//! - [`fixture`]: table-backed embedders loaded from JSON fixture files
//! - [`vectors`]: word embedder backed by a word2vec-style text file
//! - [`service`]: embedders backed by an HTTP embedding service

pub mod fixture;
pub mod service;
pub mod vectors;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default similarity threshold for both word- and sentence-level matching.
pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.708;

/// A dense embedding vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vector {
    pub values: Vec<f64>,
}

impl Vector {
    pub fn new(values: Vec<f64>) -> Self {
        Vector { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("vector dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cosine is undefined for an all-zero vector")]
    ZeroVector,
    #[error("fixture has no entry for key {0:?}")]
    UnknownFixtureKey(String),
    #[error("failed to load embedder from {path}: {reason}")]
    Load { path: String, reason: String },
    #[error("embedding service error: {0}")]
    Service(String),
}

/// Cosine similarity of two equal-dimension, non-zero vectors.
///
/// Identical vectors compare as exactly 1.0; all other results are clamped
/// to [-1, 1].
pub fn cosine(a: &Vector, b: &Vector) -> Result<f64, EmbeddingError> {
    if a.dim() != b.dim() {
        return Err(EmbeddingError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    if a.is_zero() || b.is_zero() {
        return Err(EmbeddingError::ZeroVector);
    }
    if a.values == b.values {
        return Ok(1.0);
    }
    let mut dot = 0.0;
    let mut norm_a = 0.0;
    let mut norm_b = 0.0;
    for (x, y) in a.values.iter().zip(&b.values) {
        dot += x * y;
        norm_a += x * x;
        norm_b += y * y;
    }
    Ok((dot / (norm_a.sqrt() * norm_b.sqrt())).clamp(-1.0, 1.0))
}

/// Maps whole sentences to vectors. All vectors from one embedder share `dim()`.
pub trait SentenceEmbedder: Send + Sync {
    fn embed(&self, sentence: &str) -> Result<Vector, EmbeddingError>;
    fn dim(&self) -> usize;
    fn match_threshold(&self) -> f64 {
        DEFAULT_MATCH_THRESHOLD
    }
}

/// Word-to-word similarity. `Ok(None)` means at least one word is out of
/// vocabulary; similarity of an in-vocabulary word with itself is 1.0.
pub trait WordEmbedder: Send + Sync {
    fn similarity(&self, a: &str, b: &str) -> Result<Option<f64>, EmbeddingError>;
    fn match_threshold(&self) -> f64 {
        DEFAULT_MATCH_THRESHOLD
    }
}

/// True iff the similarity strictly exceeds the embedder's threshold.
pub fn is_sentence_match(similarity: f64, embedder: &dyn SentenceEmbedder) -> bool {
    similarity > embedder.match_threshold()
}

/// Word-level match decision plus the raw similarity value.
///
/// Out-of-vocabulary pairs get similarity 0.0 and never match.
pub fn word_pair_similar(
    embedder: &dyn WordEmbedder,
    a: &str,
    b: &str,
) -> Result<(bool, f64), EmbeddingError> {
    let similarity = embedder.similarity(a, b)?.unwrap_or(0.0);
    Ok((similarity > embedder.match_threshold(), similarity))
}
