//! Deterministic, seed-free implementation of every provider endpoint.
//!
//! Embedding formula: tokenize the text (case-folded alphanumeric runs), add
//! 1 to bucket `fnv1a64(token) mod dim` for each token, then L2-normalize.
//! The empty text maps to the zero vector.

use crate::perception::{extractive_summary, SummaryParams};
use crate::providers::wire::*;
use crate::providers::{Backend, TransportError};
use crate::rerank::candidate_ids_in_prompt;
use crate::text::{fnv1a64, tokenize};

pub const DEFAULT_MOCK_DIM: usize = 256;

/// Raw bucket counts of the hashed bag-of-words embedding.
pub fn mock_embedding_counts(text: &str, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    for tok in tokenize(text) {
        v[(fnv1a64(&tok) % dim as u64) as usize] += 1.0;
    }
    v
}

/// Normalized mock embedding; zero stays zero.
pub fn mock_embedding(text: &str, dim: usize) -> Vec<f64> {
    let mut v = mock_embedding_counts(text, dim);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

#[derive(Debug, Clone)]
pub struct MockBackend {
    pub dim: usize,
    pub summary: SummaryParams,
}

impl Default for MockBackend {
    fn default() -> Self {
        MockBackend { dim: DEFAULT_MOCK_DIM, summary: SummaryParams::default() }
    }
}

impl MockBackend {
    pub fn new(dim: usize) -> Self {
        MockBackend { dim, ..Default::default() }
    }

    /// Serves one request body, returning an HTTP-like status and body.
    pub fn handle(&self, endpoint: Endpoint, body: &str) -> (u16, String) {
        let result = match endpoint {
            Endpoint::Embed => serde_json::from_str::<EmbedRequest>(body).map(|req| {
                let vectors = req.texts.iter().map(|t| mock_embedding(t, self.dim)).collect();
                to_json(&EmbedResponse { dim: self.dim, vectors })
            }),
            Endpoint::Summarize => serde_json::from_str::<SummarizeRequest>(body).map(|req| {
                to_json(&SummarizeResponse { summary: extractive_summary(&req.contexts, &self.summary) })
            }),
            Endpoint::Rerank => serde_json::from_str::<RerankRequest>(body).map(|req| {
                let ids = candidate_ids_in_prompt(&req.prompt);
                to_json(&RerankResponse {
                    ranking: format_ranking_line(&ids),
                    justification: "Order kept as retrieved.".into(),
                })
            }),
            Endpoint::Verify => serde_json::from_str::<VerifyRequest>(body).map(|req| {
                let approved = crate::corpus::normalize_name(&req.surface_form)
                    .map(|f| tokenize(&req.sentence).join(" ").contains(&tokenize(&f).join(" ")))
                    .unwrap_or(false);
                to_json(&VerifyResponse { approved })
            }),
        };
        match result {
            Ok(body) => (200, body),
            Err(e) => (400, to_json(&ErrorBody { code: "bad_request".into(), message: e.to_string() })),
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("wire type serializes")
}

impl Backend for MockBackend {
    fn call(&self, endpoint: Endpoint, body: &str) -> Result<String, TransportError> {
        match self.handle(endpoint, body) {
            (200, body) => Ok(body),
            (status, body) => Err(TransportError::Status { status, body }),
        }
    }
}
