//! Stage 2: chain evidence for the shortlist, the listwise rerank prompt,
//! reranking through a provider or a deterministic blend, and (Q, R, A)
//! fine-tuning triplets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusStore, EntityKind};
use crate::error::{Error, Result};
use crate::graph::{
    enumerate_chains_from, enumerate_chains_holdout, top_chains, ChainDirection, ChainEvidence, InteractionChain,
    InteractionGraph, DEFAULT_TOP_CHAINS,
};
use crate::providers::wire::{format_ranking_line, parse_ranking_line};
use crate::providers::ProviderClient;
use crate::retrieval::{format_query, Query, RankedList};
use crate::text::{fnv1a64, truncate_bytes};

pub const DEFAULT_ALPHA: f64 = 0.5;
const CANDIDATES_LINE: &str = "CANDIDATES: ";
const DESCRIPTION_SNIPPET_BYTES: usize = 240;

/// Where chains start for a query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChainAnchor {
    /// A corpus paper; its own terminal-kind usage is held out.
    Paper(String),
    /// A free-text query declaring the bridge entities it uses.
    Pseudo { id: String, bridges: BTreeSet<String> },
    None,
}

impl ChainAnchor {
    /// The source paper when the graph knows it, otherwise no anchor.
    pub fn for_query(query: &Query, graph: &InteractionGraph) -> Self {
        match &query.source_paper_id {
            Some(p) if graph.contains_paper(p) => ChainAnchor::Paper(p.clone()),
            _ => ChainAnchor::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceBundle {
    pub query: Query,
    pub kind: EntityKind,
    pub shortlist: RankedList,
    /// Keyed by shortlisted candidates only; at most three chains each.
    pub per_candidate: BTreeMap<String, ChainEvidence>,
    pub descriptions: BTreeMap<String, String>,
}

impl EvidenceBundle {
    pub fn support_of(&self, candidate: &str) -> usize {
        self.per_candidate.get(candidate).map_or(0, ChainEvidence::total_support)
    }
}

fn anchor_chains(graph: &InteractionGraph, anchor: &ChainAnchor, direction: ChainDirection) -> Result<Vec<InteractionChain>> {
    match anchor {
        ChainAnchor::Paper(p) => enumerate_chains_holdout(graph, p, direction, None),
        ChainAnchor::Pseudo { id, bridges } => enumerate_chains_from(graph, id, bridges, direction, None),
        ChainAnchor::None => Ok(Vec::new()),
    }
}

pub fn assemble_evidence(
    query: &Query,
    kind: EntityKind,
    shortlist: &RankedList,
    graph: &InteractionGraph,
    store: &CorpusStore,
    anchor: &ChainAnchor,
) -> Result<EvidenceBundle> {
    let chains = anchor_chains(graph, anchor, ChainDirection::toward(kind))?;
    let mut per_candidate = BTreeMap::new();
    let mut descriptions = BTreeMap::new();
    for id in shortlist.ids() {
        per_candidate.insert(id.to_string(), top_chains(&chains, id, DEFAULT_TOP_CHAINS));
        let desc = store.entities.get(id).map(|e| e.description.as_str()).unwrap_or_default();
        descriptions.insert(id.to_string(), desc.to_string());
    }
    Ok(EvidenceBundle { query: query.clone(), kind, shortlist: shortlist.clone(), per_candidate, descriptions })
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Deterministic prompt: instruction, query block, the candidate id line,
/// then one block per candidate in shortlist order.
pub fn build_rerank_prompt(bundle: &EvidenceBundle) -> String {
    let kind = bundle.kind;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "You rank candidate {kind}s for the research idea below. Rely primarily on the interaction chains: \
         each links the idea to a candidate through a paper that shares a resource with it, and its support \
         counts papers using both ends. Use the retrieval score only when chain evidence is equal. \
         Reason step by step, then finish with a single line `RANKING: id1 > id2 > ...` listing every candidate exactly once."
    );
    let _ = writeln!(out, "\n## Query\n{}", one_line(&format_query(&bundle.query)));
    let ids: Vec<&str> = bundle.shortlist.ids().collect();
    let _ = writeln!(out, "\n## Candidates\n{CANDIDATES_LINE}{}", ids.join(", "));
    for entry in &bundle.shortlist.entries {
        let id = &entry.entity_id;
        let _ = writeln!(out, "\n### [{}] {id}", entry.rank);
        let desc = bundle.descriptions.get(id).map(|d| one_line(d)).unwrap_or_default();
        let _ = writeln!(out, "description: {}", truncate_bytes(&desc, DESCRIPTION_SNIPPET_BYTES));
        let _ = writeln!(out, "retrieval score: {:.6}", entry.score);
        let chains = bundle.per_candidate.get(id).map(|e| e.chains.as_slice()).unwrap_or_default();
        if chains.is_empty() {
            let _ = writeln!(out, "chains: none");
        } else {
            let _ = writeln!(out, "chains:");
            for c in chains {
                let _ = writeln!(out, "- {}", c.render());
            }
        }
    }
    out
}

/// Candidate ids in the order the prompt lists them.
pub fn candidate_ids_in_prompt(prompt: &str) -> Vec<String> {
    prompt
        .lines()
        .find_map(|l| l.strip_prefix(CANDIDATES_LINE))
        .map(|rest| rest.split(", ").map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect())
        .unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RerankMode {
    Llm,
    DeterministicFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankResult {
    pub ranking: RankedList,
    pub justification: String,
    pub mode: RerankMode,
}

fn is_permutation(ids: &[String], shortlist: &RankedList) -> bool {
    let got: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
    let want: BTreeSet<&str> = shortlist.ids().collect();
    got.len() == ids.len() && got == want
}

/// `(x − min)/(max − min)`; all zeros when the values are constant.
pub fn minmax(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    values.iter().map(|&v| if span > 0.0 { (v - lo) / span } else { 0.0 }).collect()
}

/// `α·minmax(retrieval) + (1 − α)·minmax(chain support)`, ties by
/// retrieval rank.
pub fn fallback_rerank(bundle: &EvidenceBundle, alpha: f64) -> RerankResult {
    let entries = &bundle.shortlist.entries;
    let retrieval = minmax(&entries.iter().map(|e| e.score).collect::<Vec<_>>());
    let support = minmax(&entries.iter().map(|e| bundle.support_of(&e.entity_id) as f64).collect::<Vec<_>>());
    let mut scored: Vec<(f64, usize)> =
        (0..entries.len()).map(|i| (alpha * retrieval[i] + (1.0 - alpha) * support[i], i)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    RerankResult {
        ranking: RankedList::from_ordered(
            bundle.shortlist.query_id.clone(),
            scored.iter().map(|&(s, i)| (entries[i].entity_id.clone(), s)),
        ),
        justification: format!(
            "Deterministic blend: {alpha}·retrieval + {}·chain support, both min-max scaled.",
            1.0 - alpha
        ),
        mode: RerankMode::DeterministicFallback,
    }
}

/// Reranks through `client` when given, falling back on any transport,
/// grammar or permutation failure. LLM-mode scores are `n − position`.
pub fn rerank(bundle: &EvidenceBundle, client: Option<&ProviderClient>, alpha: f64) -> RerankResult {
    if bundle.shortlist.is_empty() {
        return fallback_rerank(bundle, alpha);
    }
    let Some(client) = client else { return fallback_rerank(bundle, alpha) };
    match client.rerank_call(&build_rerank_prompt(bundle)) {
        Ok(resp) => match parse_ranking_line(&resp.ranking) {
            Some(ids) if is_permutation(&ids, &bundle.shortlist) => {
                let n = ids.len();
                RerankResult {
                    ranking: RankedList::from_ordered(
                        bundle.shortlist.query_id.clone(),
                        ids.into_iter().enumerate().map(|(i, id)| (id, (n - i) as f64)),
                    ),
                    justification: resp.justification,
                    mode: RerankMode::Llm,
                }
            }
            _ => {
                log::warn!("rerank response for {} failed validation, using fallback", bundle.query.query_id);
                fallback_rerank(bundle, alpha)
            }
        },
        Err(e) => {
            log::warn!("rerank call for {} failed ({e}), using fallback", bundle.query.query_id);
            fallback_rerank(bundle, alpha)
        }
    }
}

/// Reranks the first `shortlist_len` entries of `full` and keeps the tail in
/// Stage-1 order.
pub fn splice_reranked(full: &RankedList, reranked: &RankedList) -> RankedList {
    let head: BTreeSet<&str> = reranked.ids().collect();
    let rows = reranked
        .entries
        .iter()
        .map(|e| (e.entity_id.clone(), e.score))
        .chain(full.entries.iter().filter(|e| !head.contains(e.entity_id.as_str())).map(|e| (e.entity_id.clone(), e.score)));
    RankedList::from_ordered(full.query_id.clone(), rows)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftTriplet {
    #[serde(rename = "Q")]
    pub q: String,
    #[serde(rename = "R")]
    pub r: String,
    #[serde(rename = "A")]
    pub a: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SftOptions {
    pub max_shortlist: usize,
    pub seed: u64,
    pub instruction: String,
}

impl Default for SftOptions {
    fn default() -> Self {
        SftOptions { max_shortlist: 20, seed: 0, instruction: crate::retrieval::DEFAULT_INSTRUCTION.into() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SftReport {
    pub written: usize,
    /// `(paper, kind)` pairs skipped for an empty gold set.
    pub skipped: Vec<(String, EntityKind)>,
}

/// One triplet for `paper` and `kind`, or `None` when its gold set is empty.
///
/// The shortlist mixes gold items with the strongest chain terminals outside
/// the gold set, shuffled with a seed derived from `opts.seed`, paper and
/// kind. Retrieval scores are not available here and are serialized as 0.
pub fn build_sft_triplet(
    store: &CorpusStore,
    graph: &InteractionGraph,
    paper: &str,
    kind: EntityKind,
    opts: &SftOptions,
) -> Result<Option<SftTriplet>> {
    let gold = store.gold(paper, kind)?;
    if gold.is_empty() {
        return Ok(None);
    }
    let direction = ChainDirection::toward(kind);
    let chains = enumerate_chains_holdout(graph, paper, direction, None)?;
    let support = |id: &str| top_chains(&chains, id, DEFAULT_TOP_CHAINS).total_support();
    let by_support = |ids: &mut Vec<(usize, String)>| ids.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));

    let mut gold_ranked: Vec<(usize, String)> = gold.iter().map(|g| (support(g), g.clone())).collect();
    by_support(&mut gold_ranked);
    gold_ranked.truncate(opts.max_shortlist);
    let distractor_ids: BTreeSet<&String> = chains.iter().map(|c| &c.terminal_entity).filter(|t| !gold.contains(*t)).collect();
    let mut distractors: Vec<(usize, String)> = distractor_ids.into_iter().map(|d| (support(d), d.clone())).collect();
    by_support(&mut distractors);
    distractors.truncate(opts.max_shortlist - gold_ranked.len());

    let mut listed: Vec<String> = gold_ranked.iter().chain(&distractors).map(|(_, id)| id.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ fnv1a64(&format!("{paper}/{kind}")));
    listed.shuffle(&mut rng);

    let paper_rec = store.paper(paper)?;
    let query = Query::for_paper(paper_rec, opts.instruction.clone());
    let shortlist = RankedList::from_ordered(paper, listed.into_iter().map(|id| (id, 0.0)));
    let bundle = assemble_evidence(&query, kind, &shortlist, graph, store, &ChainAnchor::Paper(paper.to_string()))?;

    let mut a = String::from("Candidates backed by chains with high co-usage support are the most likely fit.\n");
    for (s, id) in &gold_ranked {
        match bundle.per_candidate[id].chains.first() {
            Some(c) => {
                let _ = writeln!(a, "- {id}: total support {s}; strongest chain {}.", c.render());
            }
            None => {
                let _ = writeln!(a, "- {id}: no chain evidence, but it fits the stated idea.");
            }
        }
    }
    for (s, id) in &distractors {
        let _ = writeln!(a, "- {id}: total support {s}, weaker fit for this idea.");
    }
    let order: Vec<&str> = gold_ranked.iter().chain(&distractors).map(|(_, id)| id.as_str()).collect();
    a.push_str(&format_ranking_line(&order));

    Ok(Some(SftTriplet { q: format_query(&query), r: build_rerank_prompt(&bundle), a }))
}

/// Writes one JSON line per (paper, kind) with a nonempty gold set.
pub fn emit_sft_triplets(
    store: &CorpusStore,
    graph: &InteractionGraph,
    split: &[String],
    out_path: &Path,
    opts: &SftOptions,
) -> Result<SftReport> {
    if opts.max_shortlist == 0 {
        return Err(Error::InvalidArgument("max_shortlist must be >= 1".into()));
    }
    let mut report = SftReport::default();
    let mut out = String::new();
    for paper in split {
        for kind in EntityKind::ALL {
            match build_sft_triplet(store, graph, paper, kind, opts)? {
                Some(t) => {
                    out.push_str(&serde_json::to_string(&t).expect("triplet serializes"));
                    out.push('\n');
                    report.written += 1;
                }
                None => {
                    log::warn!("{paper} has no gold {kind}s, skipped");
                    report.skipped.push((paper.clone(), kind));
                }
            }
        }
    }
    std::fs::write(out_path, out).map_err(|e| Error::io("writing triplets", out_path, e))?;
    Ok(report)
}
