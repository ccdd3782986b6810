//! Request and response bodies for the provider endpoints.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Endpoint {
    Embed,
    Summarize,
    Rerank,
    Verify,
}

impl Endpoint {
    pub const ALL: [Endpoint; 4] = [Endpoint::Embed, Endpoint::Summarize, Endpoint::Rerank, Endpoint::Verify];

    pub fn path(self) -> &'static str {
        match self {
            Endpoint::Embed => "/embed",
            Endpoint::Summarize => "/summarize",
            Endpoint::Rerank => "/rerank",
            Endpoint::Verify => "/verify",
        }
    }

    pub fn from_path(path: &str) -> Option<Endpoint> {
        Endpoint::ALL.into_iter().find(|e| e.path() == path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub dim: usize,
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarizeRequest {
    pub contexts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarizeResponse {
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankRequest {
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankResponse {
    pub ranking: String,
    pub justification: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRequest {
    pub entity: String,
    pub description: String,
    pub surface_form: String,
    pub sentence: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyResponse {
    pub approved: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

/// Prefix of the decision line every rerank response must carry.
pub const RANKING_PREFIX: &str = "RANKING:";

/// Renders ids as `RANKING: a > b > c`.
pub fn format_ranking_line<S: AsRef<str>>(ids: &[S]) -> String {
    let joined = ids.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" > ");
    format!("{RANKING_PREFIX} {joined}")
}

/// Parses the last `RANKING:` line in `text` into its id sequence.
pub fn parse_ranking_line(text: &str) -> Option<Vec<String>> {
    let line = text.lines().rev().find_map(|l| l.trim().strip_prefix(RANKING_PREFIX))?;
    let ids: Vec<String> = line.split(" > ").map(|s| s.trim().to_string()).collect();
    if ids.iter().any(String::is_empty) {
        return None;
    }
    Some(ids)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn grammar() {
        assert_eq!(format_ranking_line(&["b1", "b2"]), "RANKING: b1 > b2");
        assert_eq!(parse_ranking_line("reasoning\nRANKING: b2 > b1"), Some(vec!["b2".into(), "b1".into()]));
        assert_eq!(parse_ranking_line("no decision here"), None);
        assert_eq!(parse_ranking_line("RANKING: "), None);
        assert_eq!(parse_ranking_line("RANKING: a >  > b"), None);
    }

    proptest! {
        #[test]
        fn print_then_parse_is_identity(ids in prop::collection::vec("[A-Za-z0-9_.-]{1,8}", 1..20)) {
            prop_assert_eq!(parse_ranking_line(&format_ranking_line(&ids)), Some(ids));
        }
    }
}
