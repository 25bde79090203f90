//! Unit-normalized embedding vectors and cosine scoring.
//!
//! Probes and gallery entries are normalized on ingestion, so similarity
//! is a plain dot product clamped against rounding drift.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Norm below which a raw vector is considered unusable.
pub const ZERO_NORM_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EmbeddingError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("zero vector: norm below {ZERO_NORM_EPS:e}")]
    ZeroVector,
}

/// A unit-normalized feature vector. Construction goes through
/// [`Embedding::normalize`], so every value in circulation has norm 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    /// Normalize a raw vector to unit Euclidean norm.
    ///
    /// `dims` is the deployment-wide embedding width; vectors of any other
    /// length are rejected so galleries stay homogeneous.
    pub fn normalize(raw: &[f64], dims: usize) -> Result<Self, EmbeddingError> {
        if raw.len() != dims {
            return Err(EmbeddingError::DimensionMismatch {
                expected: dims,
                got: raw.len(),
            });
        }
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < ZERO_NORM_EPS {
            return Err(EmbeddingError::ZeroVector);
        }
        Ok(Embedding(raw.iter().map(|v| v / norm).collect()))
    }

    /// Re-wrap values that are already unit-normalized (e.g. read back from
    /// the event log). Verifies the invariant instead of trusting the source.
    pub fn from_normalized(values: Vec<f64>, dims: usize) -> Result<Self, EmbeddingError> {
        let embedding = Self::normalize(&values, dims)?;
        Ok(embedding)
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Cosine similarity of two normalized embeddings: their dot product,
/// clamped to [-1, 1] against rounding drift.
pub fn cosine_similarity(a: &Embedding, b: &Embedding) -> Result<f64, EmbeddingError> {
    if a.dims() != b.dims() {
        return Err(EmbeddingError::DimensionMismatch {
            expected: a.dims(),
            got: b.dims(),
        });
    }
    let dot: f64 = a
        .values()
        .iter()
        .zip(b.values().iter())
        .map(|(x, y)| x * y)
        .sum();
    Ok(dot.clamp(-1.0, 1.0))
}
