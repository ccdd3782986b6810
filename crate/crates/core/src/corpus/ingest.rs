use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{
    merge_aliases, CorpusStore, EntityKind, PaperRecord, ResourceEntity, Section,
    SectionClassifier,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub classifier: SectionClassifier,
    /// Merge entities whose normalized aliases intersect before resolving mentions.
    pub merge_aliases: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions { classifier: SectionClassifier::default(), merge_aliases: true }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Record {
    Paper(PaperLine),
    Entity(EntityLine),
}

#[derive(Debug, Serialize, Deserialize)]
struct PaperLine {
    id: String,
    #[serde(default)]
    title: String,
    #[serde(rename = "abstract", default)]
    abstract_text: String,
    #[serde(default)]
    venue: String,
    year: i32,
    #[serde(default)]
    sections: Vec<SectionLine>,
    #[serde(default)]
    baselines: Vec<String>,
    #[serde(default)]
    datasets: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SectionLine {
    heading: String,
    #[serde(default)]
    sentences: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EntityLine {
    id: String,
    kind: EntityKind,
    name: String,
    #[serde(default)]
    aliases: Vec<String>,
    #[serde(default)]
    description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    introducing_paper: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    repo: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    year: Option<i32>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

pub fn ingest_corpus(path: &Path) -> Result<CorpusStore> {
    ingest_corpus_with(path, &IngestOptions::default())
}

pub fn ingest_corpus_with(path: &Path, options: &IngestOptions) -> Result<CorpusStore> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io("reading corpus", path, e))?;
    parse_corpus(&text, options)
}

/// Parses line-delimited paper/entity records into a validated store.
pub fn parse_corpus(text: &str, options: &IngestOptions) -> Result<CorpusStore> {
    let mut papers = Vec::new();
    let mut entities = Vec::new();
    let mut paper_ids = HashSet::new();
    let mut entity_ids = HashSet::new();

    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| Error::MalformedRecord { line: line_no, reason };
        let record: Record = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
        match record {
            Record::Paper(p) => {
                if !valid_id(&p.id) {
                    return Err(malformed(format!("invalid paper id {:?}", p.id)));
                }
                if !paper_ids.insert(p.id.clone()) {
                    return Err(Error::DuplicateId(p.id));
                }
                if !(1900..=2100).contains(&p.year) {
                    return Err(malformed(format!("year {} out of range for {}", p.year, p.id)));
                }
                for id in p.baselines.iter().chain(&p.datasets) {
                    if !valid_id(id) {
                        return Err(malformed(format!("invalid entity id {id:?} in {}", p.id)));
                    }
                }
                papers.push(PaperRecord {
                    sections: p
                        .sections
                        .into_iter()
                        .map(|s| Section {
                            kind: options.classifier.classify(&s.heading),
                            heading: s.heading,
                            sentences: s.sentences,
                        })
                        .collect(),
                    id: p.id,
                    title: p.title,
                    abstract_text: p.abstract_text,
                    venue: p.venue,
                    year: p.year,
                    used_baselines: p.baselines.into_iter().collect(),
                    used_datasets: p.datasets.into_iter().collect(),
                });
            }
            Record::Entity(e) => {
                if !valid_id(&e.id) {
                    return Err(malformed(format!("invalid entity id {:?}", e.id)));
                }
                if !entity_ids.insert(e.id.clone()) {
                    return Err(Error::DuplicateId(e.id));
                }
                if let Some(y) = e.year {
                    if !(1900..=2100).contains(&y) {
                        return Err(malformed(format!("year {y} out of range for {}", e.id)));
                    }
                }
                let mut entity = ResourceEntity::new(e.id, e.kind, &e.name, &e.aliases, e.description)
                    .map_err(|err| malformed(err.to_string()))?;
                entity.introducing_paper = e.introducing_paper;
                entity.repo = e.repo;
                entity.year = e.year;
                entities.push(entity);
            }
        }
    }

    if options.merge_aliases {
        let outcome = merge_aliases(entities)?;
        let remap: BTreeMap<&str, &str> = outcome
            .log
            .iter()
            .flat_map(|ev| ev.absorbed.iter().map(move |a| (a.as_str(), ev.kept.as_str())))
            .collect();
        if !remap.is_empty() {
            for paper in &mut papers {
                for kind in EntityKind::ALL {
                    let used: BTreeSet<String> = paper
                        .uses(kind)
                        .iter()
                        .map(|id| remap.get(id.as_str()).map_or_else(|| id.clone(), |k| k.to_string()))
                        .collect();
                    *paper.uses_mut(kind) = used;
                }
            }
            for event in &outcome.log {
                log::info!("merged {:?} into {}", event.absorbed, event.kept);
            }
        }
        entities = outcome.entities;
    }

    CorpusStore::from_parts(papers, entities)
}

/// Canonical line-delimited export: entities then papers, each sorted by id.
pub fn export_corpus(store: &CorpusStore) -> String {
    let mut out = String::new();
    for e in store.entities.values() {
        let line = Record::Entity(EntityLine {
            id: e.id.clone(),
            kind: e.kind,
            name: e.canonical_name.clone(),
            aliases: e.aliases.iter().cloned().collect(),
            description: e.description.clone(),
            introducing_paper: e.introducing_paper.clone(),
            repo: e.repo.clone(),
            year: e.year,
        });
        writeln!(out, "{}", serde_json::to_string(&line).expect("record serializes")).unwrap();
    }
    for p in store.papers.values() {
        let line = Record::Paper(PaperLine {
            id: p.id.clone(),
            title: p.title.clone(),
            abstract_text: p.abstract_text.clone(),
            venue: p.venue.clone(),
            year: p.year,
            sections: p
                .sections
                .iter()
                .map(|s| SectionLine { heading: s.heading.clone(), sentences: s.sentences.clone() })
                .collect(),
            baselines: p.used_baselines.iter().cloned().collect(),
            datasets: p.used_datasets.iter().cloned().collect(),
        });
        writeln!(out, "{}", serde_json::to_string(&line).expect("record serializes")).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::normalize_name;

    fn normalized_everywhere(store: &CorpusStore) -> bool {
        store.entities.values().all(|e| {
            normalize_name(&e.canonical_name).ok().as_deref() == Some(e.canonical_name.as_str())
                && e.aliases.contains(&e.canonical_name)
        })
    }

    const FIXTURE: &str = r#"{"type":"entity","id":"b1","kind":"baseline","name":"ResNet-50","aliases":["RN50"],"description":"A deep residual network."}
{"type":"entity","id":"b2","kind":"baseline","name":"BERT","aliases":[],"description":"A bidirectional transformer."}
{"type":"entity","id":"d1","kind":"dataset","name":"ImageNet","aliases":["ILSVRC"],"description":"Large image corpus.","year":2009}
{"type":"paper","id":"P1","title":"T1","abstract":"We study vision.","venue":"V","year":2021,"sections":[{"heading":"Related Work","sentences":["BERT is popular."]},{"heading":"5. Experiments","sentences":["We train on ImageNet.","We compare with RN50.","It works."]}],"baselines":["b1"],"datasets":["d1"]}
{"type":"paper","id":"P2","title":"T2","abstract":"We study text.","venue":"V","year":2022,"sections":[{"heading":"Results","sentences":["BERT wins."]}],"baselines":["b2"],"datasets":[]}
"#;

    #[test]
    fn ingests_fixture() {
        let store = parse_corpus(FIXTURE, &IngestOptions::default()).unwrap();
        assert_eq!(store.papers.len(), 2);
        assert_eq!(store.entities.len(), 3);
        assert_eq!(store.mentions.len(), 4);
        assert!(store.gold("P1", EntityKind::Baseline).unwrap().contains("b1"));
        assert!(store.gold("P2", EntityKind::Dataset).unwrap().is_empty());
        assert!(normalized_everywhere(&store));
        store.check_references().unwrap();
    }

    #[test]
    fn dangling_reference_names_paper_and_entity() {
        let text = FIXTURE.replace(r#""baselines":["b2"]"#, r#""baselines":["bX"]"#);
        let err = parse_corpus(&text, &IngestOptions::default()).unwrap_err();
        assert_eq!(err.to_string(), "dangling reference P2→bX");
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let dup = format!("{FIXTURE}{}\n", FIXTURE.lines().nth(1).unwrap());
        let err = parse_corpus(&dup, &IngestOptions::default()).unwrap_err();
        assert!(matches!(err, Error::DuplicateId(ref id) if id == "b2"), "{err}");
    }

    #[test]
    fn malformed_record_reports_line() {
        let text = format!("{}\n{{not json\n", FIXTURE.lines().next().unwrap());
        let err = parse_corpus(&text, &IngestOptions::default()).unwrap_err();
        assert!(matches!(err, Error::MalformedRecord { line: 2, .. }), "{err}");
    }

    #[test]
    fn wrong_kind_reference_is_rejected() {
        let text = FIXTURE.replace(r#""datasets":["d1"]"#, r#""datasets":["b2"]"#);
        assert!(matches!(parse_corpus(&text, &IngestOptions::default()), Err(Error::InvalidRecord { .. })));
    }

    #[test]
    fn year_bounds_and_id_charset() {
        let text = FIXTURE.replace(r#""year":2022"#, r#""year":1800"#);
        assert!(matches!(parse_corpus(&text, &IngestOptions::default()), Err(Error::MalformedRecord { line: 5, .. })));
        let text = FIXTURE.replace(r#""id":"P2""#, r#""id":"P 2""#);
        assert!(matches!(parse_corpus(&text, &IngestOptions::default()), Err(Error::MalformedRecord { .. })));
    }

    #[test]
    fn export_round_trip_is_byte_identical() {
        let first = parse_corpus(FIXTURE, &IngestOptions::default()).unwrap();
        let exported = export_corpus(&first);
        let second = parse_corpus(&exported, &IngestOptions::default()).unwrap();
        assert_eq!(first, second);
        assert_eq!(exported, export_corpus(&second));
    }

    #[test]
    fn duplicate_entities_merge_and_usage_is_remapped() {
        let text = format!(
            "{FIXTURE}{}\n{}\n",
            r#"{"type":"entity","id":"b9","kind":"baseline","name":"resnet_50","aliases":[],"description":"dup"}"#,
            r#"{"type":"paper","id":"P3","title":"","abstract":"","venue":"","year":2023,"sections":[],"baselines":["b9"],"datasets":[]}"#
        );
        let store = parse_corpus(&text, &IngestOptions::default()).unwrap();
        assert!(!store.entities.contains_key("b9"));
        assert!(store.papers["P3"].used_baselines.contains("b1"));
        let unmerged = parse_corpus(&text, &IngestOptions { merge_aliases: false, ..Default::default() }).unwrap();
        assert!(unmerged.entities.contains_key("b9"));
    }
}
