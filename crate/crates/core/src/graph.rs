//! Paper/baseline/dataset usage graph and interaction chains
//! `p → e → p′ → e′`, where `p′ ≠ p` shares the bridge entity `e` with `p`
//! and `e′` is a candidate of the other kind. A chain's support is the number
//! of papers using both `e` and `e′`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusStore, EntityKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChainDirection {
    /// Dataset bridge, baseline terminal: recommends baselines.
    #[serde(rename = "D→B")]
    DatasetToBaseline,
    /// Baseline bridge, dataset terminal: recommends datasets.
    #[serde(rename = "B→D")]
    BaselineToDataset,
}

impl ChainDirection {
    pub fn toward(kind: EntityKind) -> Self {
        match kind {
            EntityKind::Baseline => ChainDirection::DatasetToBaseline,
            EntityKind::Dataset => ChainDirection::BaselineToDataset,
        }
    }

    pub fn terminal_kind(self) -> EntityKind {
        match self {
            ChainDirection::DatasetToBaseline => EntityKind::Baseline,
            ChainDirection::BaselineToDataset => EntityKind::Dataset,
        }
    }

    pub fn bridge_kind(self) -> EntityKind {
        self.terminal_kind().other()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ChainDirection::DatasetToBaseline => "D→B",
            ChainDirection::BaselineToDataset => "B→D",
        }
    }
}

/// Forward (paper → entities) and inverted (entity → papers) usage maps.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InteractionGraph {
    paper_to_baselines: BTreeMap<String, BTreeSet<String>>,
    paper_to_datasets: BTreeMap<String, BTreeSet<String>>,
    baseline_to_papers: BTreeMap<String, BTreeSet<String>>,
    dataset_to_papers: BTreeMap<String, BTreeSet<String>>,
    entity_kinds: BTreeMap<String, EntityKind>,
    paper_years: BTreeMap<String, i32>,
}

static EMPTY: BTreeSet<String> = BTreeSet::new();

impl InteractionGraph {
    pub fn build(store: &CorpusStore) -> Self {
        let mut g = InteractionGraph {
            entity_kinds: store.entities.values().map(|e| (e.id.clone(), e.kind)).collect(),
            paper_years: store.papers.values().map(|p| (p.id.clone(), p.year)).collect(),
            ..Default::default()
        };
        for paper in store.papers.values() {
            for kind in EntityKind::ALL {
                for entity in paper.uses(kind) {
                    g.forward_mut(kind).entry(paper.id.clone()).or_default().insert(entity.clone());
                    g.inverted_mut(kind).entry(entity.clone()).or_default().insert(paper.id.clone());
                }
            }
        }
        g
    }

    fn forward_mut(&mut self, kind: EntityKind) -> &mut BTreeMap<String, BTreeSet<String>> {
        match kind {
            EntityKind::Baseline => &mut self.paper_to_baselines,
            EntityKind::Dataset => &mut self.paper_to_datasets,
        }
    }

    fn inverted_mut(&mut self, kind: EntityKind) -> &mut BTreeMap<String, BTreeSet<String>> {
        match kind {
            EntityKind::Baseline => &mut self.baseline_to_papers,
            EntityKind::Dataset => &mut self.dataset_to_papers,
        }
    }

    pub fn forward(&self, kind: EntityKind) -> &BTreeMap<String, BTreeSet<String>> {
        match kind {
            EntityKind::Baseline => &self.paper_to_baselines,
            EntityKind::Dataset => &self.paper_to_datasets,
        }
    }

    pub fn inverted(&self, kind: EntityKind) -> &BTreeMap<String, BTreeSet<String>> {
        match kind {
            EntityKind::Baseline => &self.baseline_to_papers,
            EntityKind::Dataset => &self.dataset_to_papers,
        }
    }

    /// Entities of `kind` used by `paper` (empty when none).
    pub fn uses(&self, paper: &str, kind: EntityKind) -> &BTreeSet<String> {
        self.forward(kind).get(paper).unwrap_or(&EMPTY)
    }

    /// Papers using `entity`.
    pub fn papers_using(&self, entity: &str) -> &BTreeSet<String> {
        match self.entity_kinds.get(entity) {
            Some(&kind) => self.inverted(kind).get(entity).unwrap_or(&EMPTY),
            None => &EMPTY,
        }
    }

    pub fn edge_count(&self) -> usize {
        self.paper_to_baselines.values().chain(self.paper_to_datasets.values()).map(BTreeSet::len).sum()
    }

    pub fn contains_paper(&self, paper: &str) -> bool {
        self.paper_years.contains_key(paper)
    }

    pub fn paper_year(&self, paper: &str) -> Option<i32> {
        self.paper_years.get(paper).copied()
    }

    pub fn entity_kind(&self, entity: &str) -> Result<EntityKind> {
        self.entity_kinds.get(entity).copied().ok_or_else(|| Error::UnknownEntity(entity.to_string()))
    }

    pub fn has_edge(&self, paper: &str, entity: &str) -> bool {
        self.entity_kinds.get(entity).is_some_and(|&k| self.uses(paper, k).contains(entity))
    }
}

/// Number of papers using both `x` and `y`.
pub fn co_usage_count(graph: &InteractionGraph, x: &str, y: &str) -> Result<usize> {
    graph.entity_kind(x)?;
    graph.entity_kind(y)?;
    let (a, b) = (graph.papers_using(x), graph.papers_using(y));
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    Ok(small.iter().filter(|p| large.contains(*p)).count())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InteractionChain {
    #[serde(rename = "origin")]
    pub origin_paper: String,
    pub direction: ChainDirection,
    #[serde(rename = "bridgeEntity")]
    pub bridge_entity: String,
    #[serde(rename = "bridgePaper")]
    pub bridge_paper: String,
    #[serde(rename = "terminal")]
    pub terminal_entity: String,
    pub support: usize,
    #[serde(skip)]
    pub bridge_year: i32,
}

impl InteractionChain {
    /// `p → e → p′ → candidate (support=m)`
    pub fn render(&self) -> String {
        format!(
            "{} → {} → {} → {} (support={})",
            self.origin_paper, self.bridge_entity, self.bridge_paper, self.terminal_entity, self.support
        )
    }
}

/// Chains from a paper in the graph.
pub fn enumerate_chains(
    graph: &InteractionGraph,
    origin: &str,
    direction: ChainDirection,
    exclude_terminals: Option<&BTreeSet<String>>,
) -> Result<Vec<InteractionChain>> {
    if !graph.contains_paper(origin) {
        return Err(Error::UnknownPaper(origin.to_string()));
    }
    let bridges = graph.uses(origin, direction.bridge_kind()).clone();
    enumerate_chains_from(graph, origin, &bridges, direction, exclude_terminals)
}

/// Chains from `origin` as if its terminal-kind usage were unknown: supports
/// do not count the origin itself. Equivalent to enumerating on a graph with
/// the origin's terminal-kind edges removed, which is the inference-time view
/// of a corpus paper.
pub fn enumerate_chains_holdout(
    graph: &InteractionGraph,
    origin: &str,
    direction: ChainDirection,
    exclude_terminals: Option<&BTreeSet<String>>,
) -> Result<Vec<InteractionChain>> {
    let mut chains = enumerate_chains(graph, origin, direction, exclude_terminals)?;
    let own = graph.uses(origin, direction.terminal_kind());
    for c in &mut chains {
        if own.contains(&c.terminal_entity) {
            c.support -= 1;
        }
    }
    sort_chains(&mut chains);
    Ok(chains)
}

fn sort_chains(chains: &mut [InteractionChain]) {
    chains.sort_by(|a, b| {
        b.support
            .cmp(&a.support)
            .then_with(|| a.bridge_entity.cmp(&b.bridge_entity))
            .then_with(|| a.terminal_entity.cmp(&b.terminal_entity))
            .then_with(|| a.bridge_paper.cmp(&b.bridge_paper))
    });
}

/// Chains from an arbitrary anchor (a corpus paper or a pseudo-paper
/// declared by its bridge entities). Bridge papers never equal `origin`.
///
/// Order: support descending, then bridge entity, terminal, bridge paper.
pub fn enumerate_chains_from(
    graph: &InteractionGraph,
    origin: &str,
    bridges: &BTreeSet<String>,
    direction: ChainDirection,
    exclude_terminals: Option<&BTreeSet<String>>,
) -> Result<Vec<InteractionChain>> {
    let terminal_kind = direction.terminal_kind();
    let mut support_cache: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    let mut chains = Vec::new();
    for bridge in bridges {
        if graph.entity_kind(bridge)? != direction.bridge_kind() {
            return Err(Error::InvalidArgument(format!("{bridge} is not a {}", direction.bridge_kind())));
        }
        for bridge_paper in graph.papers_using(bridge) {
            if bridge_paper == origin {
                continue;
            }
            for terminal in graph.uses(bridge_paper, terminal_kind) {
                if exclude_terminals.is_some_and(|ex| ex.contains(terminal)) {
                    continue;
                }
                let support = match support_cache.get(&(bridge.as_str(), terminal.as_str())) {
                    Some(&m) => m,
                    None => {
                        let m = co_usage_count(graph, bridge, terminal)?;
                        support_cache.insert((bridge, terminal), m);
                        m
                    }
                };
                chains.push(InteractionChain {
                    origin_paper: origin.to_string(),
                    direction,
                    bridge_entity: bridge.clone(),
                    bridge_paper: bridge_paper.clone(),
                    terminal_entity: terminal.clone(),
                    support,
                    bridge_year: graph.paper_year(bridge_paper).unwrap_or_default(),
                });
            }
        }
    }
    sort_chains(&mut chains);
    Ok(chains)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainEvidence {
    pub candidate: String,
    pub chains: Vec<InteractionChain>,
}

impl ChainEvidence {
    pub fn total_support(&self) -> usize {
        self.chains.iter().map(|c| c.support).sum()
    }
}

pub const DEFAULT_TOP_CHAINS: usize = 3;

/// The `k` strongest chains ending at `candidate`. Ties in support go to the
/// more recent bridge paper, then the smaller bridge paper id.
pub fn top_chains(chains: &[InteractionChain], candidate: &str, k: usize) -> ChainEvidence {
    let mut matching: Vec<&InteractionChain> = chains.iter().filter(|c| c.terminal_entity == candidate).collect();
    matching.sort_by(|a, b| {
        b.support
            .cmp(&a.support)
            .then_with(|| b.bridge_year.cmp(&a.bridge_year))
            .then_with(|| a.bridge_paper.cmp(&b.bridge_paper))
            .then_with(|| a.bridge_entity.cmp(&b.bridge_entity))
    });
    ChainEvidence { candidate: candidate.to_string(), chains: matching.into_iter().take(k).cloned().collect() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolStats {
    pub pool: BTreeSet<String>,
    pub gold_size: usize,
    pub hits: usize,
    pub recall: f64,
    pub precision: f64,
}

impl PoolStats {
    pub fn compute(pool: BTreeSet<String>, gold: &BTreeSet<String>) -> Result<Self> {
        if gold.is_empty() {
            return Err(Error::UndefinedRecall);
        }
        let hits = pool.intersection(gold).count();
        let precision = if pool.is_empty() { 0.0 } else { hits as f64 / pool.len() as f64 };
        Ok(PoolStats { gold_size: gold.len(), hits, recall: hits as f64 / gold.len() as f64, precision, pool })
    }
}

/// Distinct chain terminals from `origin`, scored against its gold set.
pub fn chain_candidate_pool(
    graph: &InteractionGraph,
    store: &CorpusStore,
    origin: &str,
    direction: ChainDirection,
) -> Result<PoolStats> {
    let gold = store.gold(origin, direction.terminal_kind())?;
    if gold.is_empty() {
        return Err(Error::UndefinedRecall);
    }
    let pool = enumerate_chains(graph, origin, direction, None)?
        .into_iter()
        .map(|c| c.terminal_entity)
        .collect();
    PoolStats::compute(pool, gold)
}

/// Comparison pool: entities of the terminal kind used by other papers at
/// the same venue. Not a reproduction of any published protocol.
pub fn same_venue_pool(store: &CorpusStore, origin: &str, kind: EntityKind) -> Result<PoolStats> {
    let paper = store.paper(origin)?;
    let pool = store
        .papers
        .values()
        .filter(|p| p.id != paper.id && p.venue == paper.venue)
        .flat_map(|p| p.uses(kind).iter().cloned())
        .collect();
    PoolStats::compute(pool, store.gold(origin, kind)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolRow {
    pub paper: String,
    pub direction: ChainDirection,
    pub pool_size: usize,
    pub gold_size: usize,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolSummary {
    pub setting: String,
    pub direction: ChainDirection,
    pub papers: usize,
    pub mean_recall: f64,
    pub mean_precision: f64,
    pub mean_pool_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolReport {
    pub rows: Vec<PoolRow>,
    pub summaries: Vec<PoolSummary>,
    /// Papers skipped because their gold set of the terminal kind is empty.
    pub skipped: Vec<(String, ChainDirection)>,
}

/// Chain-pool recall/precision for every paper in `split`, both directions,
/// plus the same-venue comparison when `with_venue` is set.
pub fn analyze_chain_pools(
    graph: &InteractionGraph,
    store: &CorpusStore,
    split: &[String],
    with_venue: bool,
) -> Result<PoolReport> {
    let mut report = PoolReport { rows: Vec::new(), summaries: Vec::new(), skipped: Vec::new() };
    for direction in [ChainDirection::DatasetToBaseline, ChainDirection::BaselineToDataset] {
        let kind = direction.terminal_kind();
        let mut chain_stats = Vec::new();
        let mut venue_stats = Vec::new();
        for paper in split {
            if store.gold(paper, kind)?.is_empty() {
                report.skipped.push((paper.clone(), direction));
                continue;
            }
            let stats = chain_candidate_pool(graph, store, paper, direction)?;
            report.rows.push(PoolRow {
                paper: paper.clone(),
                direction,
                pool_size: stats.pool.len(),
                gold_size: stats.gold_size,
                recall: stats.recall,
                precision: stats.precision,
            });
            chain_stats.push(stats);
            if with_venue {
                venue_stats.push(same_venue_pool(store, paper, kind)?);
            }
        }
        report.summaries.push(summarize("chain", direction, &chain_stats));
        if with_venue {
            report.summaries.push(summarize("same-venue", direction, &venue_stats));
        }
    }
    Ok(report)
}

fn summarize(setting: &str, direction: ChainDirection, stats: &[PoolStats]) -> PoolSummary {
    let n = stats.len();
    let mean = |f: &dyn Fn(&PoolStats) -> f64| if n == 0 { 0.0 } else { stats.iter().map(f).sum::<f64>() / n as f64 };
    PoolSummary {
        setting: setting.to_string(),
        direction,
        papers: n,
        mean_recall: mean(&|s| s.recall),
        mean_precision: mean(&|s| s.precision),
        mean_pool_size: mean(&|s| s.pool.len() as f64),
    }
}

impl PoolReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{:<12} {:<5} {:>6} {:>10} {:>10} {:>10}", "setting", "dir", "papers", "recall", "precision", "pool").unwrap();
        for s in &self.summaries {
            writeln!(
                out,
                "{:<12} {:<5} {:>6} {:>10.4} {:>10.4} {:>10.1}",
                s.setting,
                s.direction.as_str(),
                s.papers,
                s.mean_recall,
                s.mean_precision,
                s.mean_pool_size
            )
            .unwrap();
        }
        writeln!(out).unwrap();
        writeln!(out, "{:<16} {:<5} {:>6} {:>6} {:>10} {:>10}", "paper", "dir", "pool", "gold", "recall", "precision").unwrap();
        for r in &self.rows {
            writeln!(
                out,
                "{:<16} {:<5} {:>6} {:>6} {:>10.4} {:>10.4}",
                r.paper,
                r.direction.as_str(),
                r.pool_size,
                r.gold_size,
                r.recall,
                r.precision
            )
            .unwrap();
        }
        if !self.skipped.is_empty() {
            writeln!(out, "\nskipped (empty gold): {}", self.skipped.len()).unwrap();
        }
        out
    }
}

/// Line-delimited chain export.
pub fn export_chains(chains: &[InteractionChain]) -> String {
    chains.iter().map(|c| serde_json::to_string(c).expect("chain serializes") + "\n").collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{PaperRecord, ResourceEntity};

    pub(crate) fn store(papers: &[(&str, i32, &[&str], &[&str])], entities: &[(&str, EntityKind)]) -> CorpusStore {
        let entities = entities
            .iter()
            .map(|(id, kind)| ResourceEntity::new(*id, *kind, &format!("name {id}"), [""; 0], "").unwrap());
        let papers = papers.iter().map(|(id, year, bs, ds)| PaperRecord {
            id: id.to_string(),
            title: String::new(),
            abstract_text: String::new(),
            venue: "V".into(),
            year: *year,
            sections: vec![],
            used_baselines: bs.iter().map(|s| s.to_string()).collect(),
            used_datasets: ds.iter().map(|s| s.to_string()).collect(),
        });
        CorpusStore::from_parts(papers, entities).unwrap()
    }

    use EntityKind::{Baseline as B, Dataset as D};

    #[test]
    fn build_counts_edges_both_ways() {
        let s = store(
            &[("P1", 2020, &["b1"], &["d1"]), ("P2", 2021, &["b1", "b2"], &[]), ("P3", 2022, &[], &["d1"])],
            &[("b1", B), ("b2", B), ("d1", D)],
        );
        let g = InteractionGraph::build(&s);
        assert_eq!(g.edge_count(), 5);
        let inverted: usize = EntityKind::ALL.iter().flat_map(|&k| g.inverted(k).values()).map(BTreeSet::len).sum();
        assert_eq!(inverted, 5);
        assert!(!g.forward(D).contains_key("P2"));
    }

    #[test]
    fn co_usage_example() {
        let s = store(
            &[("P1", 2020, &["b1"], &["d1"]), ("P2", 2020, &["b1"], &["d1"]), ("P3", 2020, &["b2"], &["d1"])],
            &[("b1", B), ("b2", B), ("d1", D), ("d9", D)],
        );
        let g = InteractionGraph::build(&s);
        assert_eq!(co_usage_count(&g, "d1", "b1").unwrap(), 2);
        assert_eq!(co_usage_count(&g, "b1", "d1").unwrap(), 2);
        assert_eq!(co_usage_count(&g, "d9", "b1").unwrap(), 0);
        assert!(co_usage_count(&g, "zz", "b1").is_err());
    }

    #[test]
    fn single_path_chain() {
        let s = store(&[("P1", 2020, &[], &["d1"]), ("P2", 2021, &["b7"], &["d1"])], &[("b7", B), ("d1", D)]);
        let g = InteractionGraph::build(&s);
        let chains = enumerate_chains(&g, "P1", ChainDirection::DatasetToBaseline, None).unwrap();
        assert_eq!(chains.len(), 1);
        assert_eq!(chains[0].render(), "P1 → d1 → P2 → b7 (support=1)");
        assert!(enumerate_chains(&g, "P2", ChainDirection::BaselineToDataset, None).unwrap().is_empty());
        assert!(matches!(enumerate_chains(&g, "P9", ChainDirection::BaselineToDataset, None), Err(Error::UnknownPaper(_))));
    }

    #[test]
    fn no_bridge_means_no_chains() {
        let s = store(&[("P1", 2020, &["b1"], &[]), ("P2", 2021, &["b1"], &["d1"])], &[("b1", B), ("d1", D)]);
        let g = InteractionGraph::build(&s);
        assert!(enumerate_chains(&g, "P1", ChainDirection::DatasetToBaseline, None).unwrap().is_empty());
    }

    fn chain(bridge_paper: &str, year: i32, support: usize) -> InteractionChain {
        InteractionChain {
            origin_paper: "P0".into(),
            direction: ChainDirection::DatasetToBaseline,
            bridge_entity: "d".into(),
            bridge_paper: bridge_paper.into(),
            terminal_entity: "b".into(),
            support,
            bridge_year: year,
        }
    }

    #[test]
    fn top_three_by_support() {
        let chains = vec![chain("P1", 2020, 3), chain("P2", 2020, 1), chain("P3", 2020, 5), chain("P4", 2020, 3)];
        let ev = top_chains(&chains, "b", 3);
        let supports: Vec<_> = ev.chains.iter().map(|c| c.support).collect();
        assert_eq!(supports, [5, 3, 3]);
        assert_eq!(ev.total_support(), 11);
        assert_eq!(top_chains(&chains[..1], "b", 3).chains.len(), 1);
        assert!(top_chains(&chains, "other", 3).chains.is_empty());
    }

    #[test]
    fn ties_prefer_recent_then_smaller_id() {
        let chains = vec![chain("P9", 2019, 2), chain("P5", 2023, 2), chain("P1", 2023, 2), chain("P2", 2018, 2)];
        let ev = top_chains(&chains, "b", 3);
        let ids: Vec<_> = ev.chains.iter().map(|c| c.bridge_paper.as_str()).collect();
        assert_eq!(ids, ["P1", "P5", "P9"]);
    }

    #[test]
    fn pool_arithmetic() {
        let gold = BTreeSet::from(["b1".to_string(), "b2".to_string()]);
        let pool = BTreeSet::from(["b1".to_string(), "b3".to_string(), "b4".to_string()]);
        let s = PoolStats::compute(pool, &gold).unwrap();
        assert_eq!(s.recall, 0.5);
        assert!((s.precision - 1.0 / 3.0).abs() < 1e-15);
        let s = PoolStats::compute(BTreeSet::new(), &gold).unwrap();
        assert_eq!((s.recall, s.precision), (0.0, 0.0));
        assert!(matches!(PoolStats::compute(BTreeSet::new(), &BTreeSet::new()), Err(Error::UndefinedRecall)));
    }

    #[test]
    fn pool_containing_gold_has_full_recall() {
        let s = store(
            &[("P1", 2020, &["b1"], &["d1"]), ("P2", 2021, &["b1", "b2"], &["d1"])],
            &[("b1", B), ("b2", B), ("d1", D)],
        );
        let g = InteractionGraph::build(&s);
        let stats = chain_candidate_pool(&g, &s, "P1", ChainDirection::DatasetToBaseline).unwrap();
        assert_eq!(stats.recall, 1.0);
        assert_eq!(stats.precision, 0.5);
        let err = chain_candidate_pool(&g, &s, "P2", ChainDirection::BaselineToDataset);
        assert!(err.is_ok());
    }

    #[test]
    fn export_format() {
        let line = export_chains(&[chain("P1", 2020, 2)]);
        assert_eq!(
            line,
            "{\"origin\":\"P0\",\"direction\":\"D→B\",\"bridgeEntity\":\"d\",\"bridgePaper\":\"P1\",\"terminal\":\"b\",\"support\":2}\n"
        );
    }

    #[test]
    fn holdout_matches_graph_without_origin_terminal_edges() {
        let papers: &[(&str, i32, &[&str], &[&str])] = &[
            ("P1", 2020, &["b1", "b2"], &["d1", "d2"]),
            ("P2", 2021, &["b1"], &["d1"]),
            ("P3", 2022, &["b1", "b3"], &["d1", "d2"]),
            ("P4", 2019, &["b2"], &["d2"]),
        ];
        let ents = [("b1", B), ("b2", B), ("b3", B), ("d1", D), ("d2", D)];
        let g = InteractionGraph::build(&store(papers, &ents));
        let mut cut = papers.to_vec();
        cut[0].2 = &[];
        let g_cut = InteractionGraph::build(&store(&cut, &ents));
        let got = enumerate_chains_holdout(&g, "P1", ChainDirection::DatasetToBaseline, None).unwrap();
        let want = enumerate_chains(&g_cut, "P1", ChainDirection::DatasetToBaseline, None).unwrap();
        assert_eq!(got, want);
        assert!(got.iter().any(|c| c.terminal_entity == "b1" && c.support == 2));
    }
}
