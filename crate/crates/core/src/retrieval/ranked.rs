use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub entity_id: String,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub query_id: String,
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    /// Assigns contiguous ranks to `(id, score)` pairs already in rank order.
    pub fn from_ordered(query_id: impl Into<String>, scored: impl IntoIterator<Item = (String, f64)>) -> Self {
        let entries = scored
            .into_iter()
            .enumerate()
            .map(|(i, (entity_id, score))| RankedEntry { entity_id, score, rank: i + 1 })
            .collect();
        RankedList { query_id: query_id.into(), entries }
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.entity_id.as_str())
    }

    pub fn top(&self, k: usize) -> impl Iterator<Item = &str> {
        self.ids().take(k)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn truncated(&self, k: usize) -> RankedList {
        RankedList { query_id: self.query_id.clone(), entries: self.entries.iter().take(k).cloned().collect() }
    }

    /// Ranks are contiguous from 1 and ids are distinct.
    pub fn check_structure(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (i, e) in self.entries.iter().enumerate() {
            if e.rank != i + 1 {
                return Err(Error::InvalidArgument(format!("rank {} at position {}", e.rank, i + 1)));
            }
            if !seen.insert(e.entity_id.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate entity {}", e.entity_id)));
            }
        }
        Ok(())
    }

    /// Structure holds and scores are nonincreasing with id ascending on ties.
    pub fn check_sorted(&self) -> Result<()> {
        self.check_structure()?;
        for w in self.entries.windows(2) {
            let ordered = w[0].score > w[1].score || (w[0].score == w[1].score && w[0].entity_id < w[1].entity_id);
            if !ordered {
                return Err(Error::InvalidArgument(format!("{} before {} out of order", w[0].entity_id, w[1].entity_id)));
            }
        }
        Ok(())
    }
}
