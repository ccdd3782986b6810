//! Citation-context windows, their per-entity pools, the collective
//! perception summary built from a pool, and the fused text each candidate
//! is embedded from.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusStore, EntityKind, Mention, PaperRecord, ResourceEntity, SectionKind};
use crate::error::{Error, Result};
use crate::providers::ProviderClient;
use crate::text::{tokenize, truncate_bytes};

pub const DESC_MARKER: &str = "[DESC] ";
pub const CP_MARKER: &str = " [CP] ";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CitationContext {
    pub entity_id: String,
    pub paper_id: String,
    pub window_text: String,
    pub section_index: usize,
    pub center_sentence_index: usize,
    /// Number of sentences joined into `window_text`.
    pub window_len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextPool {
    pub entity_id: String,
    pub contexts: Vec<CitationContext>,
}

impl ContextPool {
    pub fn texts(&self) -> Vec<String> {
        self.contexts.iter().map(|c| c.window_text.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthesisMethod {
    ExternalSummarizer,
    ExtractiveFallback,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CollectivePerception {
    pub entity_id: String,
    pub method: SynthesisMethod,
    pub evidence_count: usize,
    pub summary_text: String,
}

impl CollectivePerception {
    pub fn empty(entity_id: &str) -> Self {
        CollectivePerception {
            entity_id: entity_id.to_string(),
            method: SynthesisMethod::ExtractiveFallback,
            evidence_count: 0,
            summary_text: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetRepresentation {
    pub entity_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SummaryParams {
    pub max_windows: usize,
    pub byte_budget: usize,
    pub jaccard_threshold: f64,
    pub separator: String,
}

impl Default for SummaryParams {
    fn default() -> Self {
        SummaryParams { max_windows: 8, byte_budget: 2048, jaccard_threshold: 0.8, separator: " | ".into() }
    }
}

/// One window per (sentence) mention of `entity_id` inside an
/// experiment-centric section of `paper`: sentences `[i - radius, i + radius]`
/// clipped to the section.
pub fn extract_citation_contexts(
    paper: &PaperRecord,
    entity_id: &str,
    mentions: &[Mention],
    radius: usize,
) -> Vec<CitationContext> {
    let centers: BTreeSet<(usize, usize)> = mentions
        .iter()
        .filter(|m| m.paper_id == paper.id && m.entity_id == entity_id)
        .filter(|m| {
            paper.sections.get(m.section_index).is_some_and(|s| s.kind == SectionKind::ExperimentCentric)
        })
        .map(|m| (m.section_index, m.sentence_index))
        .collect();
    centers
        .into_iter()
        .filter_map(|(si, ti)| {
            let sentences = &paper.sections[si].sentences;
            if ti >= sentences.len() {
                return None;
            }
            let lo = ti.saturating_sub(radius);
            let hi = (ti + radius).min(sentences.len() - 1);
            let window: Vec<&str> = sentences[lo..=hi].iter().map(|s| s.trim()).collect();
            Some(CitationContext {
                entity_id: entity_id.to_string(),
                paper_id: paper.id.clone(),
                window_text: window.join(" "),
                section_index: si,
                center_sentence_index: ti,
                window_len: hi - lo + 1,
            })
        })
        .collect()
}

/// All windows for an entity across the corpus, ordered by
/// (paper, section, sentence). Papers in `excluded` contribute nothing.
pub fn pool_contexts_excluding(
    store: &CorpusStore,
    entity_id: &str,
    radius: usize,
    excluded: &BTreeSet<String>,
) -> Result<ContextPool> {
    store.entity(entity_id)?;
    let mut by_paper: BTreeMap<&str, Vec<Mention>> = BTreeMap::new();
    for m in store.mentions_of(entity_id) {
        if !excluded.contains(&m.paper_id) {
            by_paper.entry(m.paper_id.as_str()).or_default().push(m.clone());
        }
    }
    let contexts = by_paper
        .into_iter()
        .flat_map(|(pid, ms)| extract_citation_contexts(&store.papers[pid], entity_id, &ms, radius))
        .collect();
    Ok(ContextPool { entity_id: entity_id.to_string(), contexts })
}

pub fn pool_contexts(store: &CorpusStore, entity_id: &str, radius: usize) -> Result<ContextPool> {
    pool_contexts_excluding(store, entity_id, radius, &BTreeSet::new())
}

fn token_set(text: &str) -> BTreeSet<String> {
    tokenize(text).into_iter().collect()
}

fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Offline summary of a context pool.
///
/// Drops windows whose token set has Jaccard similarity at or above the
/// threshold with an already-kept window, ranks the rest by the mean IDF of
/// their distinct terms (IDF computed over the kept windows), keeps the top
/// `max_windows`, joins them and truncates to `byte_budget`.
pub fn extractive_summary(windows: &[String], params: &SummaryParams) -> String {
    let mut kept: Vec<(usize, &str, BTreeSet<String>)> = Vec::new();
    for (i, w) in windows.iter().enumerate() {
        let toks = token_set(w);
        if kept.iter().all(|(_, _, k)| jaccard(k, &toks) < params.jaccard_threshold) {
            kept.push((i, w.trim(), toks));
        }
    }
    let n = kept.len() as f64;
    let mut df: HashMap<&str, usize> = HashMap::new();
    for (_, _, toks) in &kept {
        for t in toks {
            *df.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut scored: Vec<(f64, usize, &str)> = kept
        .iter()
        .map(|(i, w, toks)| {
            let score = if toks.is_empty() {
                0.0
            } else {
                toks.iter().map(|t| (1.0 + n / df[t.as_str()] as f64).ln()).sum::<f64>() / toks.len() as f64
            };
            (score, *i, *w)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let joined = scored
        .iter()
        .take(params.max_windows)
        .map(|(_, _, w)| *w)
        .collect::<Vec<_>>()
        .join(&params.separator);
    truncate_bytes(&joined, params.byte_budget).trim_end().to_string()
}

/// Summarizes a pool, through the provider when one is given.
///
/// A failing or empty provider response falls back to [`extractive_summary`],
/// and the result records which path produced it.
pub fn synthesize_perception(
    pool: &ContextPool,
    summarizer: Option<&ProviderClient>,
    params: &SummaryParams,
) -> CollectivePerception {
    let evidence_count = pool.contexts.len();
    let texts = pool.texts();
    let mut perception = CollectivePerception {
        entity_id: pool.entity_id.clone(),
        method: SynthesisMethod::ExtractiveFallback,
        evidence_count,
        summary_text: String::new(),
    };
    if evidence_count == 0 {
        if summarizer.is_some() {
            perception.method = SynthesisMethod::ExternalSummarizer;
        }
        return perception;
    }
    if let Some(client) = summarizer {
        let mut seen = BTreeSet::new();
        let unique: Vec<String> = texts.iter().filter(|t| seen.insert(t.as_str())).cloned().collect();
        match client.summarize(&unique) {
            Ok(summary) => {
                let summary = truncate_bytes(summary.trim(), params.byte_budget).trim_end().to_string();
                if !summary.is_empty() {
                    perception.method = SynthesisMethod::ExternalSummarizer;
                    perception.summary_text = summary;
                    return perception;
                }
                log::warn!("empty summary for {}, using extractive fallback", pool.entity_id);
            }
            Err(e) => log::warn!("summarizer failed for {}: {e}", pool.entity_id),
        }
    }
    perception.summary_text = extractive_summary(&texts, params);
    perception
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerceptionParams {
    pub radius: usize,
    pub summary: SummaryParams,
}

impl Default for PerceptionParams {
    fn default() -> Self {
        PerceptionParams { radius: 1, summary: SummaryParams::default() }
    }
}

/// Perceptions for every entity (optionally of one kind), computed in
/// parallel. Papers in `excluded` are not used as evidence.
pub fn build_perceptions(
    store: &CorpusStore,
    kind: Option<EntityKind>,
    params: &PerceptionParams,
    summarizer: Option<&ProviderClient>,
    excluded: &BTreeSet<String>,
) -> Result<BTreeMap<String, CollectivePerception>> {
    let ids: Vec<&String> = store
        .entities
        .values()
        .filter(|e| kind.is_none_or(|k| e.kind == k))
        .map(|e| &e.id)
        .collect();
    ids.par_iter()
        .map(|id| {
            let pool = pool_contexts_excluding(store, id, params.radius, excluded)?;
            Ok(((*id).clone(), synthesize_perception(&pool, summarizer, &params.summary)))
        })
        .collect()
}

/// Which segments of the fused representation are populated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepresentationToggles {
    pub description: bool,
    pub perception: bool,
}

impl Default for RepresentationToggles {
    fn default() -> Self {
        RepresentationToggles { description: true, perception: true }
    }
}

/// `"[DESC] " + description + " [CP] " + summary`.
pub fn build_target_representation(entity: &ResourceEntity, cp: &CollectivePerception) -> Result<TargetRepresentation> {
    build_target_representation_with(entity, cp, RepresentationToggles::default())
}

pub fn build_target_representation_with(
    entity: &ResourceEntity,
    cp: &CollectivePerception,
    toggles: RepresentationToggles,
) -> Result<TargetRepresentation> {
    if cp.entity_id != entity.id {
        return Err(Error::IdMismatch { expected: entity.id.clone(), actual: cp.entity_id.clone() });
    }
    if !toggles.description && !toggles.perception {
        return Err(Error::InvalidArgument("representation needs at least one segment".into()));
    }
    let desc = if toggles.description { entity.description.as_str() } else { "" };
    let summary = if toggles.perception { cp.summary_text.as_str() } else { "" };
    Ok(TargetRepresentation { entity_id: entity.id.clone(), text: format!("{DESC_MARKER}{desc}{CP_MARKER}{summary}") })
}

/// Recovers (description, summary) from a representation text.
pub fn split_representation(text: &str) -> Option<(&str, &str)> {
    let rest = text.strip_prefix(DESC_MARKER)?;
    let at = rest.rfind(CP_MARKER)?;
    Some((&rest[..at], &rest[at + CP_MARKER.len()..]))
}

/// Representations for every entity of `kind`; entities missing from
/// `perceptions` get an empty summary segment.
pub fn build_representations(
    store: &CorpusStore,
    kind: EntityKind,
    perceptions: &BTreeMap<String, CollectivePerception>,
    toggles: RepresentationToggles,
) -> Result<Vec<TargetRepresentation>> {
    store
        .entities_of(kind)
        .map(|e| {
            let cp = perceptions.get(&e.id).cloned().unwrap_or_else(|| CollectivePerception::empty(&e.id));
            build_target_representation_with(e, &cp, toggles)
        })
        .collect()
}

pub fn write_perception_cache(path: &Path, perceptions: &BTreeMap<String, CollectivePerception>) -> Result<()> {
    let mut out = String::new();
    for cp in perceptions.values() {
        writeln!(out, "{}", serde_json::to_string(cp).expect("perception serializes")).unwrap();
    }
    std::fs::write(path, out).map_err(|e| Error::io("writing perception cache", path, e))
}

pub fn read_perception_cache(path: &Path) -> Result<BTreeMap<String, CollectivePerception>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io("reading perception cache", path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let cp: CollectivePerception = serde_json::from_str(line).map_err(|e| Error::Format {
                path: path.to_path_buf(),
                reason: format!("line {}: {e}", i + 1),
            })?;
            Ok((cp.entity_id.clone(), cp))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::corpus::{parse_corpus, EntityKind, IngestOptions, Section};

    fn section_paper(n: usize, heading: &str) -> PaperRecord {
        PaperRecord {
            id: "P1".into(),
            title: String::new(),
            abstract_text: String::new(),
            venue: String::new(),
            year: 2020,
            sections: vec![Section {
                heading: heading.into(),
                kind: crate::corpus::classify_section(heading),
                sentences: (0..n).map(|i| format!("s{i}.")).collect(),
            }],
            used_baselines: Default::default(),
            used_datasets: Default::default(),
        }
    }

    fn mention_at(sentence: usize) -> Mention {
        Mention {
            paper_id: "P1".into(),
            entity_id: "e".into(),
            section_index: 0,
            sentence_index: sentence,
            surface_form: "E".into(),
        }
    }

    #[test]
    fn window_is_centered_and_clipped() {
        let paper = section_paper(10, "Experiments");
        let ctx = extract_citation_contexts(&paper, "e", &[mention_at(5)], 1);
        assert_eq!(ctx[0].window_text, "s4. s5. s6.");
        let ctx = extract_citation_contexts(&paper, "e", &[mention_at(0)], 1);
        assert_eq!(ctx[0].window_text, "s0. s1.");
        assert_eq!(ctx[0].window_len, 2);
        let ctx = extract_citation_contexts(&paper, "e", &[mention_at(9)], 0);
        assert_eq!(ctx[0].window_text, "s9.");
    }

    #[test]
    fn same_sentence_mentions_yield_one_window() {
        let paper = section_paper(10, "Experiments");
        let ctx = extract_citation_contexts(&paper, "e", &[mention_at(5), mention_at(5)], 1);
        assert_eq!(ctx.len(), 1);
    }

    #[test]
    fn non_experiment_sections_are_ignored() {
        let paper = section_paper(10, "Related Work");
        assert!(extract_citation_contexts(&paper, "e", &[mention_at(5)], 1).is_empty());
    }

    const CORPUS: &str = r#"{"type":"entity","id":"b1","kind":"baseline","name":"Alpha","description":"first"}
{"type":"entity","id":"b2","kind":"baseline","name":"Gamma","description":"never cited"}
{"type":"paper","id":"P1","year":2020,"sections":[{"heading":"Experiments","sentences":["Alpha runs fast.","Filler.","More filler.","Alpha again here."]}]}
{"type":"paper","id":"P2","year":2021,"sections":[{"heading":"Intro","sentences":["Alpha is old."]},{"heading":"Results","sentences":["We beat Alpha."]}]}
"#;

    #[test]
    fn pooling_unions_over_papers() {
        let store = parse_corpus(CORPUS, &IngestOptions::default()).unwrap();
        let pool = pool_contexts(&store, "b1", 1).unwrap();
        assert_eq!(pool.contexts.len(), 3);
        let keys: Vec<_> = pool.contexts.iter().map(|c| (c.paper_id.as_str(), c.section_index, c.center_sentence_index)).collect();
        assert_eq!(keys, [("P1", 0, 0), ("P1", 0, 3), ("P2", 1, 0)]);
        assert!(pool_contexts(&store, "b2", 1).unwrap().contexts.is_empty());
        assert!(matches!(pool_contexts(&store, "zz", 1), Err(Error::UnknownEntity(_))));
        let excluded = BTreeSet::from(["P1".to_string()]);
        assert_eq!(pool_contexts_excluding(&store, "b1", 1, &excluded).unwrap().contexts.len(), 1);
    }

    #[test]
    fn extractive_edge_cases() {
        let p = SummaryParams::default();
        assert_eq!(extractive_summary(&[], &p), "");
        assert_eq!(extractive_summary(&["  only window  ".into()], &p), "only window");
        let long = "word ".repeat(1000);
        assert!(extractive_summary(&[long], &p).len() <= 2048);
    }

    #[test]
    fn exact_duplicate_contributes_nothing() {
        let p = SummaryParams::default();
        let a = "We evaluate Alpha on long documents.".to_string();
        let b = "Alpha serves as the retrieval baseline for QA.".to_string();
        let c = "Results with Alpha under distribution shift.".to_string();
        let with_dup = extractive_summary(&[a.clone(), b.clone(), a.clone(), c.clone()], &p);
        let without = extractive_summary(&[a, b, c], &p);
        assert_eq!(with_dup, without);
    }

    #[test]
    fn near_duplicates_dropped_and_rarer_windows_first() {
        let p = SummaryParams { max_windows: 2, ..Default::default() };
        let windows = vec![
            "common words here".to_string(),
            "common words here too".to_string(), // jaccard 3/4 < 0.8, kept
            "common words here".to_string(),     // duplicate, dropped
            "distinct vocabulary entirely".to_string(),
        ];
        let s = extractive_summary(&windows, &p);
        assert_eq!(s, "distinct vocabulary entirely | common words here too");
    }

    #[test]
    fn synthesis_records_method_and_count() {
        let pool = ContextPool { entity_id: "e".into(), contexts: vec![] };
        let cp = synthesize_perception(&pool, None, &SummaryParams::default());
        assert_eq!((cp.evidence_count, cp.summary_text.as_str()), (0, ""));
        let store = parse_corpus(CORPUS, &IngestOptions::default()).unwrap();
        let pool = pool_contexts(&store, "b1", 1).unwrap();
        let offline = synthesize_perception(&pool, None, &SummaryParams::default());
        assert_eq!(offline.method, SynthesisMethod::ExtractiveFallback);
        assert_eq!(offline.evidence_count, 3);
        let client = ProviderClient::mock();
        let online = synthesize_perception(&pool, Some(&client), &SummaryParams::default());
        assert_eq!(online.method, SynthesisMethod::ExternalSummarizer);
        assert_eq!(online.summary_text, offline.summary_text);
    }

    #[test]
    fn provider_failure_falls_back() {
        use crate::providers::{wire::Endpoint, Backend, TransportError};
        struct Down;
        impl Backend for Down {
            fn call(&self, _: Endpoint, _: &str) -> Result<String, TransportError> {
                Err(TransportError::Io("refused".into()))
            }
        }
        let client = ProviderClient::with_backend(Box::new(Down), 1, 0);
        let store = parse_corpus(CORPUS, &IngestOptions::default()).unwrap();
        let pool = pool_contexts(&store, "b1", 1).unwrap();
        let cp = synthesize_perception(&pool, Some(&client), &SummaryParams::default());
        assert_eq!(cp.method, SynthesisMethod::ExtractiveFallback);
        assert!(!cp.summary_text.is_empty());
    }

    #[test]
    fn representation_layout() {
        let e = ResourceEntity::new("e", EntityKind::Dataset, "E", [""; 0], "d").unwrap();
        let mut cp = CollectivePerception::empty("e");
        cp.summary_text = "s".into();
        assert_eq!(build_target_representation(&e, &cp).unwrap().text, "[DESC] d [CP] s");
        cp.summary_text.clear();
        assert_eq!(build_target_representation(&e, &cp).unwrap().text, "[DESC] d [CP] ");
        let other = CollectivePerception::empty("x");
        assert!(matches!(build_target_representation(&e, &other), Err(Error::IdMismatch { .. })));
        let off = RepresentationToggles { description: false, perception: false };
        assert!(build_target_representation_with(&e, &cp, off).is_err());
    }

    #[test]
    fn cache_round_trip() {
        let store = parse_corpus(CORPUS, &IngestOptions::default()).unwrap();
        let cps = build_perceptions(&store, None, &PerceptionParams::default(), None, &BTreeSet::new()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cp.jsonl");
        write_perception_cache(&path, &cps).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(r#"{"entityId":"b1","method":"extractive-fallback","evidenceCount":3,"summaryText":"#));
        assert_eq!(read_perception_cache(&path).unwrap(), cps);
    }

    proptest! {
        #[test]
        fn representation_splits_back(desc in "[a-z .,]{0,30}", summary in "[a-z .,|]{0,30}") {
            let e = ResourceEntity::new("e", EntityKind::Baseline, "E", [""; 0], desc.clone()).unwrap();
            let mut cp = CollectivePerception::empty("e");
            cp.summary_text = summary.clone();
            let rep = build_target_representation(&e, &cp).unwrap();
            let d_at = rep.text.find(&desc).unwrap();
            prop_assert!(rep.text[d_at + desc.len()..].contains(&summary));
            prop_assert_eq!(split_representation(&rep.text), Some((desc.as_str(), summary.as_str())));
        }

        #[test]
        fn window_length_bounds(n in 1usize..12, center in 0usize..12, radius in 0usize..4) {
            let paper = section_paper(n, "Results");
            let ctx = extract_citation_contexts(&paper, "e", &[mention_at(center)], radius);
            if center < n {
                prop_assert_eq!(ctx.len(), 1);
                prop_assert!(ctx[0].window_len >= 1 && ctx[0].window_len <= 2 * radius + 1);
            } else {
                prop_assert!(ctx.is_empty());
            }
        }

        #[test]
        fn extractive_is_pure(windows in prop::collection::vec("[a-e ]{0,20}", 0..10)) {
            let p = SummaryParams::default();
            prop_assert_eq!(extractive_summary(&windows, &p), extractive_summary(&windows.clone(), &p));
        }
    }
}
