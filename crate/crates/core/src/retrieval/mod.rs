//! Stage-1 candidate recall.

mod bm25;
mod embedding;
mod index;
mod query;
mod ranked;

pub use bm25::{bm25_search, Bm25Index, Bm25Params};
pub use embedding::{embed_texts, EmbeddingVector};
pub use index::{dense_search, retrieve_shortlist, DenseIndex, DEFAULT_SHORTLIST, DEFAULT_TEMPERATURE};
pub use query::{format_query, Query, DEFAULT_INSTRUCTION};
pub use ranked::{RankedEntry, RankedList};
