use serde::{Deserialize, Serialize};

use crate::corpus::PaperRecord;

pub const DEFAULT_INSTRUCTION: &str =
    "Given a research idea, retrieve relevant baseline methods or datasets that are most suitable.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub query_id: String,
    pub source_paper_id: Option<String>,
    pub synopsis_text: String,
    pub task_instruction: String,
}

impl Query {
    pub fn free_text(query_id: impl Into<String>, synopsis: impl Into<String>, instruction: impl Into<String>) -> Self {
        Query {
            query_id: query_id.into(),
            source_paper_id: None,
            synopsis_text: synopsis.into(),
            task_instruction: instruction.into(),
        }
    }

    /// Query for a corpus paper; its abstract stands in for the synopsis.
    pub fn for_paper(paper: &PaperRecord, instruction: impl Into<String>) -> Self {
        let synopsis = if paper.abstract_text.trim().is_empty() { &paper.title } else { &paper.abstract_text };
        Query {
            query_id: paper.id.clone(),
            source_paper_id: Some(paper.id.clone()),
            synopsis_text: synopsis.trim().to_string(),
            task_instruction: instruction.into(),
        }
    }
}

/// `"Instruct: " + instruction + " Query: " + synopsis`. Only queries are
/// prefixed; candidate texts are embedded as-is.
pub fn format_query(q: &Query) -> String {
    format!("Instruct: {} Query: {}", q.task_instruction, q.synopsis_text)
}
