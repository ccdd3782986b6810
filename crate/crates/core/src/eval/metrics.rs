use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::retrieval::RankedList;

fn hits(ranked: &RankedList, gold: &BTreeSet<String>, k: usize) -> Result<usize> {
    if gold.is_empty() {
        return Err(Error::UndefinedRecall);
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    Ok(ranked.top(k).filter(|id| gold.contains(*id)).count())
}

/// `|gold ∩ top-k| / |gold|`.
pub fn recall_at_k(ranked: &RankedList, gold: &BTreeSet<String>, k: usize) -> Result<f64> {
    Ok(hits(ranked, gold, k)? as f64 / gold.len() as f64)
}

/// 1 when any gold item is in the top `k`.
pub fn hitrate_at_k(ranked: &RankedList, gold: &BTreeSet<String>, k: usize) -> Result<u8> {
    Ok(u8::from(hits(ranked, gold, k)? > 0))
}
