//! Papers, baseline/dataset entities, usage links and mention evidence.

mod aliases;
mod filter;
mod ingest;
mod mentions;
mod normalize;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use aliases::{merge_aliases, MergeEvent, MergeOutcome};
pub use filter::{
    filter_mentions, rule_filter, EntityMentionStats, FilterDecision, FilterThresholds, MentionStats,
    Verifier,
};
pub use ingest::{export_corpus, ingest_corpus, ingest_corpus_with, parse_corpus, IngestOptions};
pub use mentions::resolve_mentions;
pub use normalize::{classify_section, normalize_name, SectionClassifier, DEFAULT_SECTION_KEYWORDS};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Baseline,
    Dataset,
}

impl EntityKind {
    pub const ALL: [EntityKind; 2] = [EntityKind::Baseline, EntityKind::Dataset];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Baseline => "baseline",
            EntityKind::Dataset => "dataset",
        }
    }

    pub fn other(self) -> EntityKind {
        match self {
            EntityKind::Baseline => EntityKind::Dataset,
            EntityKind::Dataset => EntityKind::Baseline,
        }
    }
}

impl std::fmt::Display for EntityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EntityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(EntityKind::Baseline),
            "dataset" => Ok(EntityKind::Dataset),
            other => Err(Error::InvalidArgument(format!("unknown entity kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SectionKind {
    ExperimentCentric,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub heading: String,
    pub kind: SectionKind,
    pub sentences: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaperRecord {
    pub id: String,
    pub title: String,
    pub abstract_text: String,
    pub venue: String,
    pub year: i32,
    pub sections: Vec<Section>,
    pub used_baselines: BTreeSet<String>,
    pub used_datasets: BTreeSet<String>,
}

impl PaperRecord {
    pub fn uses(&self, kind: EntityKind) -> &BTreeSet<String> {
        match kind {
            EntityKind::Baseline => &self.used_baselines,
            EntityKind::Dataset => &self.used_datasets,
        }
    }

    pub(crate) fn uses_mut(&mut self, kind: EntityKind) -> &mut BTreeSet<String> {
        match kind {
            EntityKind::Baseline => &mut self.used_baselines,
            EntityKind::Dataset => &mut self.used_datasets,
        }
    }
}

/// A baseline or dataset. Aliases are stored in normalized form and always
/// include the canonical name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceEntity {
    pub id: String,
    pub kind: EntityKind,
    pub canonical_name: String,
    pub aliases: BTreeSet<String>,
    pub description: String,
    pub introducing_paper: Option<String>,
    pub repo: Option<String>,
    pub year: Option<i32>,
}

impl ResourceEntity {
    /// Builds an entity from raw name and aliases, normalizing both.
    pub fn new(
        id: impl Into<String>,
        kind: EntityKind,
        name: &str,
        aliases: impl IntoIterator<Item = impl AsRef<str>>,
        description: impl Into<String>,
    ) -> Result<Self> {
        let canonical_name = normalize_name(name)?;
        let mut normalized = BTreeSet::new();
        normalized.insert(canonical_name.clone());
        for alias in aliases {
            normalized.insert(normalize_name(alias.as_ref())?);
        }
        Ok(ResourceEntity {
            id: id.into(),
            kind,
            canonical_name,
            aliases: normalized,
            description: description.into(),
            introducing_paper: None,
            repo: None,
            year: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mention {
    pub paper_id: String,
    pub entity_id: String,
    pub section_index: usize,
    pub sentence_index: usize,
    pub surface_form: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GoldSets {
    pub baselines: BTreeSet<String>,
    pub datasets: BTreeSet<String>,
}

impl GoldSets {
    pub fn of(&self, kind: EntityKind) -> &BTreeSet<String> {
        match kind {
            EntityKind::Baseline => &self.baselines,
            EntityKind::Dataset => &self.datasets,
        }
    }
}

/// Validated corpus. Immutable once built; share it by reference across threads.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStore {
    pub papers: BTreeMap<String, PaperRecord>,
    pub entities: BTreeMap<String, ResourceEntity>,
    pub mentions: Vec<Mention>,
    pub gold: BTreeMap<String, GoldSets>,
}

impl CorpusStore {
    /// Assembles a store from already-parsed records, enforcing referential
    /// integrity, resolving mentions and populating gold sets.
    pub fn from_parts(
        papers: impl IntoIterator<Item = PaperRecord>,
        entities: impl IntoIterator<Item = ResourceEntity>,
    ) -> Result<Self> {
        let mut store = CorpusStore::default();
        for entity in entities {
            if store.entities.contains_key(&entity.id) {
                return Err(Error::DuplicateId(entity.id));
            }
            store.entities.insert(entity.id.clone(), entity);
        }
        for paper in papers {
            if store.papers.contains_key(&paper.id) {
                return Err(Error::DuplicateId(paper.id));
            }
            store.papers.insert(paper.id.clone(), paper);
        }
        store.check_references()?;
        store.rebuild_gold();
        store.mentions = resolve_mentions(&store.papers, &store.entities);
        Ok(store)
    }

    pub fn paper(&self, id: &str) -> Result<&PaperRecord> {
        self.papers.get(id).ok_or_else(|| Error::UnknownPaper(id.to_string()))
    }

    pub fn entity(&self, id: &str) -> Result<&ResourceEntity> {
        self.entities.get(id).ok_or_else(|| Error::UnknownEntity(id.to_string()))
    }

    pub fn entities_of(&self, kind: EntityKind) -> impl Iterator<Item = &ResourceEntity> {
        self.entities.values().filter(move |e| e.kind == kind)
    }

    pub fn gold(&self, paper_id: &str, kind: EntityKind) -> Result<&BTreeSet<String>> {
        self.gold
            .get(paper_id)
            .map(|g| g.of(kind))
            .ok_or_else(|| Error::UnknownPaper(paper_id.to_string()))
    }

    pub fn mentions_of<'a>(&'a self, entity_id: &'a str) -> impl Iterator<Item = &'a Mention> + 'a {
        self.mentions.iter().filter(move |m| m.entity_id == entity_id)
    }

    /// Every usage edge, mention and gold item resolves to an existing node.
    pub fn check_references(&self) -> Result<()> {
        for paper in self.papers.values() {
            for kind in EntityKind::ALL {
                for entity_id in paper.uses(kind) {
                    let entity = self.entities.get(entity_id).ok_or_else(|| Error::DanglingReference {
                        paper: paper.id.clone(),
                        entity: entity_id.clone(),
                    })?;
                    if entity.kind != kind {
                        return Err(Error::InvalidRecord {
                            id: paper.id.clone(),
                            reason: format!("{entity_id} is a {}, listed as {kind}", entity.kind),
                        });
                    }
                }
            }
        }
        for m in &self.mentions {
            let paper = self.paper(&m.paper_id)?;
            self.entity(&m.entity_id)?;
            let in_bounds = paper
                .sections
                .get(m.section_index)
                .is_some_and(|s| m.sentence_index < s.sentences.len());
            if !in_bounds {
                return Err(Error::InvalidRecord {
                    id: m.paper_id.clone(),
                    reason: format!("mention of {} addresses a missing sentence", m.entity_id),
                });
            }
        }
        for (paper_id, gold) in &self.gold {
            let paper = self.paper(paper_id)?;
            if gold.baselines != paper.used_baselines || gold.datasets != paper.used_datasets {
                return Err(Error::InvalidRecord {
                    id: paper_id.clone(),
                    reason: "gold sets diverge from usage lists".into(),
                });
            }
        }
        Ok(())
    }

    fn rebuild_gold(&mut self) {
        self.gold = self
            .papers
            .values()
            .map(|p| {
                let gold = GoldSets { baselines: p.used_baselines.clone(), datasets: p.used_datasets.clone() };
                (p.id.clone(), gold)
            })
            .collect();
    }
}
