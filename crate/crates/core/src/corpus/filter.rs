use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::{normalize_name, CorpusStore, Mention, ResourceEntity, SectionKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterDecision {
    Keep,
    Borderline,
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterThresholds {
    pub min_mentions: usize,
    pub min_experiment_mentions: usize,
}

impl Default for FilterThresholds {
    fn default() -> Self {
        FilterThresholds { min_mentions: 2, min_experiment_mentions: 1 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntityMentionStats {
    pub mentions: usize,
    pub experiment_mentions: usize,
    /// Normalized surface forms seen for this entity.
    pub surface_forms: BTreeSet<String>,
}

/// Corpus-wide mention statistics consumed by [`rule_filter`].
#[derive(Debug, Clone, Default)]
pub struct MentionStats {
    pub per_entity: BTreeMap<String, EntityMentionStats>,
    /// Normalized surface form -> entities it was resolved to.
    pub surface_owners: BTreeMap<String, BTreeSet<String>>,
}

impl MentionStats {
    pub fn collect(store: &CorpusStore) -> Self {
        let mut stats = MentionStats::default();
        for id in store.entities.keys() {
            stats.per_entity.insert(id.clone(), EntityMentionStats::default());
        }
        for m in &store.mentions {
            let kind = store.papers[&m.paper_id].sections[m.section_index].kind;
            let entry = stats.per_entity.entry(m.entity_id.clone()).or_default();
            entry.mentions += 1;
            if kind == SectionKind::ExperimentCentric {
                entry.experiment_mentions += 1;
            }
            if let Ok(form) = normalize_name(&m.surface_form) {
                entry.surface_forms.insert(form.clone());
                stats.surface_owners.entry(form).or_default().insert(m.entity_id.clone());
            }
        }
        stats
    }

    /// Every surface form of the entity resolves to this entity alone.
    pub fn naming_consistent(&self, entity_id: &str) -> bool {
        self.per_entity.get(entity_id).is_some_and(|s| {
            s.surface_forms
                .iter()
                .all(|f| self.surface_owners.get(f).is_some_and(|owners| owners.len() == 1))
        })
    }
}

/// Classifies a mention by its entity's corpus-level evidence.
pub fn rule_filter(mention: &Mention, stats: &MentionStats, thresholds: FilterThresholds) -> Result<FilterDecision> {
    let s = stats
        .per_entity
        .get(&mention.entity_id)
        .ok_or_else(|| Error::UnknownEntity(mention.entity_id.clone()))?;
    if s.experiment_mentions == 0 {
        return Ok(FilterDecision::Drop);
    }
    let keep = s.mentions >= thresholds.min_mentions
        && s.experiment_mentions >= thresholds.min_experiment_mentions
        && stats.naming_consistent(&mention.entity_id);
    Ok(if keep { FilterDecision::Keep } else { FilterDecision::Borderline })
}

/// External check for borderline mentions, typically backed by the
/// `/verify` provider endpoint.
pub trait Verifier {
    fn verify(&self, mention: &Mention, entity: &ResourceEntity, sentence: &str) -> Result<bool>;
}

/// Applies [`rule_filter`] to every mention and returns the survivors.
///
/// Borderline mentions survive only on verifier approval; without a verifier,
/// or when verification fails, they are dropped.
pub fn filter_mentions(
    store: &CorpusStore,
    thresholds: FilterThresholds,
    verifier: Option<&dyn Verifier>,
) -> Result<Vec<Mention>> {
    let stats = MentionStats::collect(store);
    let mut kept = Vec::new();
    for m in &store.mentions {
        let keep = match rule_filter(m, &stats, thresholds)? {
            FilterDecision::Keep => true,
            FilterDecision::Drop => false,
            FilterDecision::Borderline => match verifier {
                Some(v) => {
                    let sentence = &store.papers[&m.paper_id].sections[m.section_index].sentences[m.sentence_index];
                    v.verify(m, store.entity(&m.entity_id)?, sentence).unwrap_or_else(|e| {
                        log::warn!("verifier failed for {}/{}: {e}", m.paper_id, m.entity_id);
                        false
                    })
                }
                None => false,
            },
        };
        if keep {
            kept.push(m.clone());
        }
    }
    Ok(kept)
}
