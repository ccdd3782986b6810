use std::collections::{BTreeMap, HashMap};

use crate::corpus::{Mention, PaperRecord, ResourceEntity};
use crate::text::{token_spans, tokenize};

/// Finds every occurrence of an entity alias in every sentence.
///
/// Aliases match as whole token sequences. Overlapping matches of the same
/// entity collapse to the leftmost-longest one.
pub fn resolve_mentions(
    papers: &BTreeMap<String, PaperRecord>,
    entities: &BTreeMap<String, ResourceEntity>,
) -> Vec<Mention> {
    let mut by_first: HashMap<String, Vec<(Vec<String>, &str)>> = HashMap::new();
    for entity in entities.values() {
        for alias in &entity.aliases {
            let toks = tokenize(alias);
            if let Some(first) = toks.first() {
                by_first.entry(first.clone()).or_default().push((toks, entity.id.as_str()));
            }
        }
    }

    let mut mentions = Vec::new();
    for paper in papers.values() {
        for (si, section) in paper.sections.iter().enumerate() {
            for (ti, sentence) in section.sentences.iter().enumerate() {
                let spans = token_spans(sentence);
                // entity -> [(start token, end token)]
                let mut hits: BTreeMap<&str, Vec<(usize, usize)>> = BTreeMap::new();
                for (pos, (_, _, tok)) in spans.iter().enumerate() {
                    let Some(candidates) = by_first.get(tok) else { continue };
                    for (alias, entity_id) in candidates {
                        let end = pos + alias.len();
                        if end <= spans.len() && spans[pos..end].iter().map(|s| &s.2).eq(alias.iter()) {
                            hits.entry(entity_id).or_default().push((pos, end));
                        }
                    }
                }
                for (entity_id, mut ranges) in hits {
                    ranges.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
                    let mut covered = 0;
                    for (start, end) in ranges {
                        if start < covered {
                            continue;
                        }
                        covered = end;
                        mentions.push(Mention {
                            paper_id: paper.id.clone(),
                            entity_id: entity_id.to_string(),
                            section_index: si,
                            sentence_index: ti,
                            surface_form: sentence[spans[start].0..spans[end - 1].1].to_string(),
                        });
                    }
                }
            }
        }
    }
    mentions
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::corpus::{EntityKind, Section, SectionKind};

    fn paper(sentences: &[&str]) -> PaperRecord {
        PaperRecord {
            id: "P1".into(),
            title: String::new(),
            abstract_text: String::new(),
            venue: String::new(),
            year: 2024,
            sections: vec![Section {
                heading: "Experiments".into(),
                kind: SectionKind::ExperimentCentric,
                sentences: sentences.iter().map(|s| s.to_string()).collect(),
            }],
            used_baselines: BTreeSet::new(),
            used_datasets: BTreeSet::new(),
        }
    }

    fn entity(id: &str, name: &str, aliases: &[&str]) -> ResourceEntity {
        ResourceEntity::new(id, EntityKind::Baseline, name, aliases, "").unwrap()
    }

    #[test]
    fn finds_multi_token_aliases_with_surface_forms() {
        let papers = BTreeMap::from([("P1".to_string(), paper(&["We compare to ResNet-50 and BERT.", "none here"]))]);
        let entities = BTreeMap::from([
            ("b1".to_string(), entity("b1", "ResNet-50", &["RN50"])),
            ("b2".to_string(), entity("b2", "BERT", &[])),
        ]);
        let ms = resolve_mentions(&papers, &entities);
        assert_eq!(ms.len(), 2);
        assert_eq!(ms[0].entity_id, "b1");
        assert_eq!(ms[0].surface_form, "ResNet-50");
        assert_eq!(ms[1].surface_form, "BERT");
        assert_eq!((ms[1].section_index, ms[1].sentence_index), (0, 0));
    }

    #[test]
    fn overlapping_aliases_collapse_to_one_mention() {
        let papers = BTreeMap::from([("P1".to_string(), paper(&["ResNet 50 is strong"]))]);
        let entities = BTreeMap::from([("b1".to_string(), entity("b1", "ResNet 50", &["ResNet"]))]);
        let ms = resolve_mentions(&papers, &entities);
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0].surface_form, "ResNet 50");
    }

    #[test]
    fn partial_token_is_not_a_mention() {
        let papers = BTreeMap::from([("P1".to_string(), paper(&["BERTology is a field"]))]);
        let entities = BTreeMap::from([("b2".to_string(), entity("b2", "BERT", &[]))]);
        assert!(resolve_mentions(&papers, &entities).is_empty());
    }
}
