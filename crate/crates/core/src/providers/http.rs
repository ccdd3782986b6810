use std::time::Duration;

use crate::providers::wire::Endpoint;
use crate::providers::{Backend, TransportError};

/// Posts JSON bodies to `{base}/embed`, `{base}/summarize`, and so on.
pub struct HttpBackend {
    base: String,
    agent: ureq::Agent,
    auth_token: Option<String>,
}

impl HttpBackend {
    pub fn new(base: &str, timeout: Duration, auth_token: Option<String>) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(timeout).build();
        HttpBackend { base: base.trim_end_matches('/').to_string(), agent, auth_token }
    }
}

impl Backend for HttpBackend {
    fn call(&self, endpoint: Endpoint, body: &str) -> Result<String, TransportError> {
        let mut req = self
            .agent
            .post(&format!("{}{}", self.base, endpoint.path()))
            .set("Content-Type", "application/json");
        if let Some(token) = &self.auth_token {
            req = req.set("Authorization", &format!("Bearer {token}"));
        }
        match req.send_string(body) {
            Ok(resp) => resp.into_string().map_err(|e| TransportError::Io(e.to_string())),
            Err(ureq::Error::Status(status, resp)) => {
                Err(TransportError::Status { status, body: resp.into_string().unwrap_or_default() })
            }
            Err(ureq::Error::Transport(t)) => Err(TransportError::Io(t.to_string())),
        }
    }
}
