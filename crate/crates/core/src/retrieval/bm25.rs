//! Okapi BM25 over candidate representations.
//!
//! score(d, q) = Σ_{t ∈ q} idf(t) · f(t,d)·(k1+1) / (f(t,d) + k1·(1 − b + b·|d|/avgdl))
//! with idf(t) = ln(1 + (N − df(t) + 0.5) / (df(t) + 0.5)). Query terms count once.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::perception::TargetRepresentation;
use crate::retrieval::RankedList;
use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone)]
pub struct Bm25Index {
    ids: Vec<String>,
    doc_lens: Vec<usize>,
    avg_len: f64,
    /// term -> [(doc, term frequency)]
    postings: HashMap<String, Vec<(usize, usize)>>,
    params: Bm25Params,
}

impl Bm25Index {
    pub fn build(docs: &[TargetRepresentation], params: Bm25Params) -> Self {
        let mut postings: HashMap<String, Vec<(usize, usize)>> = HashMap::new();
        let mut doc_lens = Vec::with_capacity(docs.len());
        for (d, doc) in docs.iter().enumerate() {
            let toks = tokenize(&doc.text);
            doc_lens.push(toks.len());
            let mut tf: HashMap<String, usize> = HashMap::new();
            for t in toks {
                *tf.entry(t).or_default() += 1;
            }
            for (t, f) in tf {
                postings.entry(t).or_default().push((d, f));
            }
        }
        let avg_len = if docs.is_empty() { 0.0 } else { doc_lens.iter().sum::<usize>() as f64 / docs.len() as f64 };
        Bm25Index { ids: docs.iter().map(|d| d.entity_id.clone()).collect(), doc_lens, avg_len, postings, params }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn idf(&self, df: usize) -> f64 {
        let n = self.ids.len() as f64;
        let df = df as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Scores of every document with a nonzero score.
    pub fn scores(&self, query_text: &str) -> Result<Vec<(usize, f64)>> {
        let terms: BTreeSet<String> = tokenize(query_text).into_iter().collect();
        if terms.is_empty() {
            return Err(Error::EmptyQuery);
        }
        let Bm25Params { k1, b } = self.params;
        let mut acc: HashMap<usize, f64> = HashMap::new();
        for term in &terms {
            let Some(list) = self.postings.get(term) else { continue };
            let idf = self.idf(list.len());
            for &(d, f) in list {
                let f = f as f64;
                let norm = 1.0 - b + b * self.doc_lens[d] as f64 / self.avg_len;
                *acc.entry(d).or_default() += idf * f * (k1 + 1.0) / (f + k1 * norm);
            }
        }
        Ok(acc.into_iter().filter(|&(_, s)| s > 0.0).collect())
    }
}

/// Top-`k` documents by BM25; zero-score documents are never returned.
pub fn bm25_search(index: &Bm25Index, query_text: &str, k: usize, query_id: &str) -> Result<RankedList> {
    let mut scored = index.scores(query_text)?;
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| index.ids[a.0].cmp(&index.ids[b.0])));
    scored.truncate(k);
    Ok(RankedList::from_ordered(query_id, scored.into_iter().map(|(d, s)| (index.ids[d].clone(), s))))
}
