use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::providers::ProviderClient;
use crate::scalar::{l2_norm, Scalar};

/// Dense vector; unit-norm once it has passed through [`EmbeddingVector::normalized`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector<T: Scalar> {
    pub values: Vec<T>,
}

impl<T: Scalar> EmbeddingVector<T> {
    pub fn new(values: Vec<T>) -> Self {
        EmbeddingVector { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> T {
        l2_norm(&self.values)
    }

    /// L2-normalized copy; `None` for the zero vector or non-finite input.
    pub fn normalized(&self) -> Option<Self> {
        let norm = self.norm();
        if !(norm > T::zero()) || !norm.is_finite() {
            return None;
        }
        Some(EmbeddingVector { values: self.values.iter().map(|&x| x / norm).collect() })
    }
}

const EMBED_BATCH: usize = 64;

/// Embeds `texts` through the provider and L2-normalizes every vector locally.
///
/// Batches are sent concurrently; the client bounds how many are in flight.
pub fn embed_texts<T: Scalar>(texts: &[String], client: &ProviderClient) -> Result<Vec<EmbeddingVector<T>>> {
    let batches: Vec<Vec<Vec<f64>>> = texts
        .par_chunks(EMBED_BATCH)
        .map(|chunk| client.embed(chunk).map(|r| r.vectors))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(texts.len());
    let mut dim = None;
    for (i, raw) in batches.into_iter().flatten().enumerate() {
        let expected = *dim.get_or_insert(raw.len());
        if raw.len() != expected {
            return Err(Error::DimensionMismatch { expected, actual: raw.len() });
        }
        let v = EmbeddingVector::new(raw.into_iter().map(T::of).collect());
        out.push(v.normalized().ok_or(Error::DegenerateEmbedding(i))?);
    }
    Ok(out)
}
