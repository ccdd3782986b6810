//! Recall@k / HitRate@k, end-to-end evaluation over a split of corpus
//! papers, ablations, reports, and a seeded synthetic corpus generator.

mod metrics;
mod report;
pub mod synthetic;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use metrics::{hitrate_at_k, recall_at_k};
pub use report::{report_rows, report_text, ReportRow};

use crate::adapter::AdapterParams;
use crate::corpus::{CorpusStore, EntityKind};
use crate::error::{Error, Result};
use crate::perception::{build_perceptions, CollectivePerception};
use crate::pipeline::{AblationToggles, Pipeline, PipelineConfig, Retriever};
use crate::providers::ProviderClient;
use crate::rerank::{ChainAnchor, RerankMode};
use crate::retrieval::Query;

/// Cutoffs for each metric.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct KGrid {
    pub recall: Vec<usize>,
    pub hitrate: Vec<usize>,
}

impl Default for KGrid {
    fn default() -> Self {
        KGrid { recall: vec![10, 20, 30], hitrate: vec![5, 10, 15] }
    }
}

impl KGrid {
    pub fn validate(&self) -> Result<()> {
        if self.recall.iter().chain(&self.hitrate).any(|&k| k == 0) {
            return Err(Error::InvalidArgument("every k must be >= 1".into()));
        }
        Ok(())
    }

    pub fn max_k(&self) -> usize {
        self.recall.iter().chain(&self.hitrate).copied().max().unwrap_or(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub paper: String,
    pub kind: EntityKind,
    pub recall: BTreeMap<usize, f64>,
    pub hit: BTreeMap<usize, u8>,
    pub rerank_mode: Option<RerankMode>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KindMeans {
    pub queries: usize,
    pub recall: BTreeMap<usize, f64>,
    pub hit: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub query_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub method: String,
    pub fingerprint: String,
    /// Keyed `paper/kind`.
    pub per_query: BTreeMap<String, QueryMetrics>,
    pub means: BTreeMap<EntityKind, KindMeans>,
    pub excluded: Vec<Exclusion>,
}

impl EvalResult {
    fn from_queries(method: String, fingerprint: String, per_query: BTreeMap<String, QueryMetrics>, excluded: Vec<Exclusion>) -> Self {
        let mut means: BTreeMap<EntityKind, KindMeans> = BTreeMap::new();
        for q in per_query.values() {
            let m = means.entry(q.kind).or_default();
            m.queries += 1;
            for (&k, &v) in &q.recall {
                *m.recall.entry(k).or_default() += v;
            }
            for (&k, &v) in &q.hit {
                *m.hit.entry(k).or_default() += f64::from(v);
            }
        }
        for m in means.values_mut() {
            let n = m.queries as f64;
            m.recall.values_mut().chain(m.hit.values_mut()).for_each(|v| *v /= n);
        }
        EvalResult { method, fingerprint, per_query, means, excluded }
    }

    pub fn mean_recall(&self, kind: EntityKind, k: usize) -> Option<f64> {
        self.means.get(&kind)?.recall.get(&k).copied()
    }

    pub fn mean_hit(&self, kind: EntityKind, k: usize) -> Option<f64> {
        self.means.get(&kind)?.hit.get(&k).copied()
    }
}

/// Provider client and optional adapter a run may use.
#[derive(Clone, Copy)]
pub struct Resources<'a> {
    pub client: &'a ProviderClient,
    pub adapter: Option<&'a AdapterParams<f64>>,
}

fn split_set(store: &CorpusStore, split: &[String]) -> Result<BTreeSet<String>> {
    for p in split {
        store.paper(p)?;
    }
    Ok(split.iter().cloned().collect())
}

/// Perceptions built without evidence from the split papers.
pub fn holdout_perceptions(
    store: &CorpusStore,
    config: &PipelineConfig,
    client: &ProviderClient,
    split: &[String],
) -> Result<BTreeMap<String, CollectivePerception>> {
    let excluded = split_set(store, split)?;
    let summarizer = config.use_summarizer.then_some(client);
    build_perceptions(store, None, &config.perception, summarizer, &excluded)
}

/// Runs every split paper as a query for both kinds.
///
/// Perceptions exclude the split papers, and chain supports hold out the
/// query paper's own usage of the target kind. Queries with an empty gold
/// set or a failing run are excluded and listed.
pub fn evaluate(
    store: &CorpusStore,
    config: &PipelineConfig,
    resources: Resources<'_>,
    split: &[String],
    grid: &KGrid,
    fingerprint: &str,
) -> Result<EvalResult> {
    let perceptions =
        if config.toggles.perception { holdout_perceptions(store, config, resources.client, split)? } else { BTreeMap::new() };
    evaluate_with(store, config, resources, &perceptions, split, grid, fingerprint)
}

/// [`evaluate`] with precomputed perceptions.
pub fn evaluate_with(
    store: &CorpusStore,
    config: &PipelineConfig,
    resources: Resources<'_>,
    perceptions: &BTreeMap<String, CollectivePerception>,
    split: &[String],
    grid: &KGrid,
    fingerprint: &str,
) -> Result<EvalResult> {
    grid.validate()?;
    split_set(store, split)?;
    let adapter = if config.use_adapter { resources.adapter } else { None };
    let pipeline = Pipeline::build(store, config.clone(), resources.client, adapter, perceptions)?;
    let queries: Vec<Query> = split.iter().map(|p| Query::for_paper(&store.papers[p], config.instruction.clone())).collect();
    let vectors = match config.retriever {
        Retriever::Dense => Some(pipeline.embed_queries(&queries)?),
        Retriever::Bm25 => None,
    };
    let depth = grid.max_k().max(config.shortlist);
    let jobs: Vec<(usize, EntityKind)> =
        (0..queries.len()).flat_map(|i| EntityKind::ALL.into_iter().map(move |k| (i, k))).collect();

    let outcomes: Vec<std::result::Result<QueryMetrics, Exclusion>> = jobs
        .par_iter()
        .map(|&(i, kind)| {
            let query = &queries[i];
            let query_id = format!("{}/{kind}", query.query_id);
            let exclude = |reason: String| Exclusion { query_id: query_id.clone(), reason };
            let gold = &store.gold[&query.query_id];
            let gold = gold.of(kind);
            if gold.is_empty() {
                return Err(exclude(format!("no gold {kind}s")));
            }
            let anchor = ChainAnchor::Paper(query.query_id.clone());
            let vector = vectors.as_ref().map(|v| &v[i]);
            let outcome = pipeline.run(query, vector, kind, depth, &anchor).map_err(|e| exclude(e.to_string()))?;
            let mut recall = BTreeMap::new();
            let mut hit = BTreeMap::new();
            for &k in &grid.recall {
                recall.insert(k, recall_at_k(&outcome.ranking, gold, k).map_err(|e| exclude(e.to_string()))?);
            }
            for &k in &grid.hitrate {
                hit.insert(k, hitrate_at_k(&outcome.ranking, gold, k).map_err(|e| exclude(e.to_string()))?);
            }
            Ok(QueryMetrics { paper: query.query_id.clone(), kind, recall, hit, rerank_mode: outcome.mode })
        })
        .collect();

    let mut per_query = BTreeMap::new();
    let mut excluded = Vec::new();
    for o in outcomes {
        match o {
            Ok(m) => {
                per_query.insert(format!("{}/{}", m.paper, m.kind), m);
            }
            Err(x) => {
                log::warn!("excluded {}: {}", x.query_id, x.reason);
                excluded.push(x);
            }
        }
    }
    Ok(EvalResult::from_queries(config.method_label(), fingerprint.to_string(), per_query, excluded))
}

/// One [`EvalResult`] per toggle combination over the same split.
pub fn ablation_run(
    store: &CorpusStore,
    base: &PipelineConfig,
    resources: Resources<'_>,
    combinations: &[AblationToggles],
    split: &[String],
    grid: &KGrid,
    fingerprint: &str,
) -> Result<Vec<EvalResult>> {
    for t in combinations {
        t.validate()?;
    }
    let perceptions = if combinations.iter().any(|t| t.perception) {
        holdout_perceptions(store, base, resources.client, split)?
    } else {
        BTreeMap::new()
    };
    combinations
        .iter()
        .map(|&toggles| {
            let config = PipelineConfig { toggles, ..base.clone() };
            evaluate_with(store, &config, resources, &perceptions, split, grid, fingerprint)
        })
        .collect()
}

/// Seeded random split of all papers: `(train, test)`, each sorted.
pub fn random_split(store: &CorpusStore, test_fraction: f64, seed: u64) -> (Vec<String>, Vec<String>) {
    let mut ids: Vec<String> = store.papers.keys().cloned().collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = ((ids.len() as f64) * test_fraction.clamp(0.0, 1.0)).round() as usize;
    let mut test = ids.split_off(ids.len() - n_test);
    ids.sort();
    test.sort();
    (ids, test)
}

/// One paper id per line; blank lines and `#` comments ignored.
pub fn read_split(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io("reading split", path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}

pub fn write_split(path: &Path, ids: &[String]) -> Result<()> {
    let mut text = ids.join("\n");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io("writing split", path, e))
}
