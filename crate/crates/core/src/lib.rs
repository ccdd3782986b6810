//! Baseline and dataset recommendation for research ideas.
//!
//! Stage 1 embeds each candidate's self-description fused with a summary of
//! how the community cites it, then runs dense retrieval against an
//! instruction-formatted query. Stage 2 reranks the shortlist using
//! paper→entity→paper→entity interaction chains weighted by co-usage counts.
//!
//! Numeric kernels (embeddings, the dense index, the contrastive adapter)
//! are generic over [`Scalar`]; the aliases below fix the common choices.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adapter;
pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod graph;
pub mod perception;
pub mod pipeline;
pub mod providers;
pub mod rerank;
pub mod retrieval;
pub mod scalar;
pub mod text;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Index rows as persisted on disk.
pub type DenseIndexF32 = retrieval::DenseIndex<f32>;
pub type DenseIndexF64 = retrieval::DenseIndex<f64>;
pub type EmbeddingF32 = retrieval::EmbeddingVector<f32>;
pub type EmbeddingF64 = retrieval::EmbeddingVector<f64>;
/// Adapter training runs in double precision by default.
pub type AdapterParamsF64 = adapter::AdapterParams<f64>;
pub type AdapterParamsF32 = adapter::AdapterParams<f32>;
pub type TrainBatchF64 = adapter::TrainBatch<f64>;
