//! Model-backed capabilities (embedding, summarization, reranking,
//! verification) behind one JSON-over-HTTP contract.
//!
//! [`ProviderClient`] is safe to share across threads. At most
//! `max_in_flight` calls are outstanding at once; transport failures are
//! retried `retries` times.

mod http;
pub mod mock;
pub mod wire;

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use http::HttpBackend;
pub use mock::{mock_embedding, mock_embedding_counts, MockBackend, DEFAULT_MOCK_DIM};
use wire::*;

use crate::corpus::{Mention, ResourceEntity, Verifier};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    /// Base URL of a provider sidecar, or `"mock"`.
    pub endpoint_base: String,
    pub timeout_secs: f64,
    pub max_in_flight: usize,
    pub retries: u32,
    #[serde(skip_serializing)]
    pub auth_token: Option<String>,
    /// Embedding width of the mock.
    pub mock_dim: usize,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint_base: "mock".into(),
            timeout_secs: 30.0,
            max_in_flight: 4,
            retries: 2,
            auth_token: None,
            mock_dim: DEFAULT_MOCK_DIM,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.timeout_secs > 0.0) {
            return Err(Error::InvalidArgument("provider timeout must be > 0".into()));
        }
        if self.max_in_flight == 0 {
            return Err(Error::InvalidArgument("provider max_in_flight must be >= 1".into()));
        }
        if self.mock_dim == 0 {
            return Err(Error::InvalidArgument("mock dim must be >= 1".into()));
        }
        Ok(())
    }

    pub fn is_mock(&self) -> bool {
        self.endpoint_base == "mock"
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportError {
    /// Connection, timeout or I/O failure. Retried.
    Io(String),
    /// Non-success status with its body. Retried only for 5xx.
    Status { status: u16, body: String },
}

impl TransportError {
    fn retriable(&self) -> bool {
        match self {
            TransportError::Io(_) => true,
            TransportError::Status { status, .. } => *status >= 500,
        }
    }

    fn into_error(self, endpoint: Endpoint) -> Error {
        let detail = match self {
            TransportError::Io(msg) => msg,
            TransportError::Status { status, body } => match serde_json::from_str::<ErrorBody>(&body) {
                Ok(e) => format!("status {status}, {}: {}", e.code, e.message),
                Err(_) => format!("status {status}"),
            },
        };
        Error::Provider(format!("{}: {detail}", endpoint.path()))
    }
}

/// Moves one request body to an endpoint and returns the response body.
pub trait Backend: Send + Sync {
    fn call(&self, endpoint: Endpoint, body: &str) -> Result<String, TransportError>;
}

struct Semaphore {
    available: Mutex<usize>,
    freed: Condvar,
}

impl Semaphore {
    fn new(n: usize) -> Self {
        Semaphore { available: Mutex::new(n), freed: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.available.lock().unwrap();
        while *n == 0 {
            n = self.freed.wait(n).unwrap();
        }
        *n -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Semaphore);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.available.lock().unwrap() += 1;
        self.0.freed.notify_one();
    }
}

pub struct ProviderClient {
    backend: Box<dyn Backend>,
    gate: Semaphore,
    retries: u32,
}

impl std::fmt::Debug for ProviderClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProviderClient").field("retries", &self.retries).finish_non_exhaustive()
    }
}

impl ProviderClient {
    pub fn from_config(config: &ProviderConfig) -> Result<Self> {
        config.validate()?;
        let backend: Box<dyn Backend> = if config.is_mock() {
            Box::new(MockBackend::new(config.mock_dim))
        } else {
            Box::new(HttpBackend::new(
                &config.endpoint_base,
                Duration::from_secs_f64(config.timeout_secs),
                config.auth_token.clone(),
            ))
        };
        Ok(Self::with_backend(backend, config.max_in_flight, config.retries))
    }

    pub fn mock() -> Self {
        Self::with_backend(Box::new(MockBackend::default()), 4, 0)
    }

    pub fn with_backend(backend: Box<dyn Backend>, max_in_flight: usize, retries: u32) -> Self {
        ProviderClient { backend, gate: Semaphore::new(max_in_flight.max(1)), retries }
    }

    fn request<Req: Serialize, Resp: for<'de> Deserialize<'de>>(&self, endpoint: Endpoint, req: &Req) -> Result<Resp> {
        let body = serde_json::to_string(req).expect("wire type serializes");
        let mut attempt = 0;
        let response = loop {
            let outcome = {
                let _permit = self.gate.acquire();
                self.backend.call(endpoint, &body)
            };
            match outcome {
                Ok(resp) => break resp,
                Err(e) if e.retriable() && attempt < self.retries => {
                    attempt += 1;
                    log::warn!("{} failed ({e:?}), retry {attempt}/{}", endpoint.path(), self.retries);
                }
                Err(e) => return Err(e.into_error(endpoint)),
            }
        };
        serde_json::from_str(&response)
            .map_err(|e| Error::Provider(format!("{}: malformed response: {e}", endpoint.path())))
    }

    /// Raw provider vectors, one per text. Callers normalize.
    pub fn embed(&self, texts: &[String]) -> Result<EmbedResponse> {
        let resp: EmbedResponse = self.request(Endpoint::Embed, &EmbedRequest { texts: texts.to_vec() })?;
        if resp.vectors.len() != texts.len() {
            return Err(Error::Provider(format!(
                "/embed: {} vectors for {} texts",
                resp.vectors.len(),
                texts.len()
            )));
        }
        Ok(resp)
    }

    pub fn summarize(&self, contexts: &[String]) -> Result<String> {
        let resp: SummarizeResponse =
            self.request(Endpoint::Summarize, &SummarizeRequest { contexts: contexts.to_vec() })?;
        Ok(resp.summary)
    }

    pub fn rerank_call(&self, prompt: &str) -> Result<RerankResponse> {
        self.request(Endpoint::Rerank, &RerankRequest { prompt: prompt.to_string() })
    }

    pub fn verify(&self, req: &VerifyRequest) -> Result<bool> {
        let resp: VerifyResponse = self.request(Endpoint::Verify, req)?;
        Ok(resp.approved)
    }
}

impl Verifier for ProviderClient {
    fn verify(&self, mention: &Mention, entity: &ResourceEntity, sentence: &str) -> Result<bool> {
        ProviderClient::verify(
            self,
            &VerifyRequest {
                entity: entity.canonical_name.clone(),
                description: entity.description.clone(),
                surface_form: mention.surface_form.clone(),
                sentence: sentence.to_string(),
            },
        )
    }
}
