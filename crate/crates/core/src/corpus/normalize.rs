use crate::corpus::SectionKind;
use crate::error::{Error, Result};

pub const DEFAULT_SECTION_KEYWORDS: [&str; 7] =
    ["experiment", "result", "evaluation", "ablation", "benchmark", "setup", "comparison"];

/// Keyword matcher deciding which sections carry usage evidence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionClassifier {
    keywords: Vec<String>,
}

impl Default for SectionClassifier {
    fn default() -> Self {
        Self::new(DEFAULT_SECTION_KEYWORDS)
    }
}

impl SectionClassifier {
    pub fn new(keywords: impl IntoIterator<Item = impl AsRef<str>>) -> Self {
        let keywords = keywords.into_iter().map(|k| k.as_ref().to_lowercase()).collect();
        SectionClassifier { keywords }
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    pub fn classify(&self, heading: &str) -> SectionKind {
        let folded = heading.to_lowercase();
        if self.keywords.iter().any(|k| folded.contains(k.as_str())) {
            SectionKind::ExperimentCentric
        } else {
            SectionKind::Other
        }
    }
}

/// Classifies a heading with the default keyword set.
pub fn classify_section(heading: &str) -> SectionKind {
    SectionClassifier::default().classify(heading)
}

/// Canonical form of an entity name: case-folded, `-`/`_`/`/` turned into
/// spaces, whitespace collapsed, trailing punctuation stripped.
pub fn normalize_name(raw: &str) -> Result<String> {
    let folded: String = raw
        .to_lowercase()
        .chars()
        .map(|c| if matches!(c, '-' | '_' | '/') { ' ' } else { c })
        .collect();
    let mut out = folded.split_whitespace().collect::<Vec<_>>().join(" ");
    loop {
        let stripped = out.trim_end_matches(|c: char| c.is_ascii_punctuation()).trim_end();
        if stripped.len() == out.len() {
            break;
        }
        out.truncate(stripped.len());
    }
    if out.is_empty() {
        return Err(Error::EmptyCanonicalForm(raw.to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn experiment_headings() {
        assert_eq!(classify_section("5. Experiments"), SectionKind::ExperimentCentric);
        assert_eq!(classify_section("Related Work"), SectionKind::Other);
        assert_eq!(classify_section("Ablation Study"), SectionKind::ExperimentCentric);
        assert_eq!(classify_section("EVALUATION SETUP"), SectionKind::ExperimentCentric);
        assert_eq!(classify_section("Introduction"), SectionKind::Other);
    }

    #[test]
    fn custom_keywords() {
        let c = SectionClassifier::new(["Analysis"]);
        assert_eq!(c.classify("4 Empirical analysis"), SectionKind::ExperimentCentric);
        assert_eq!(c.classify("Experiments"), SectionKind::Other);
    }

    #[test]
    fn normalization_rules() {
        assert_eq!(normalize_name("ResNet-50").unwrap(), "resnet 50");
        assert_eq!(normalize_name("BERT.").unwrap(), "bert");
        assert_eq!(normalize_name("  Graph_SAGE / v2 ...  ").unwrap(), "graph sage v2");
        assert_eq!(normalize_name("a.b").unwrap(), "a.b");
        assert_eq!(normalize_name("x .").unwrap(), "x");
    }

    #[test]
    fn all_punctuation_is_rejected() {
        assert!(matches!(normalize_name("..."), Err(Error::EmptyCanonicalForm(_))));
        assert!(matches!(normalize_name("-_/ "), Err(Error::EmptyCanonicalForm(_))));
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(raw in "\\PC{0,24}") {
            if let Ok(once) = normalize_name(&raw) {
                prop_assert_eq!(normalize_name(&once).unwrap(), once);
            }
        }

        #[test]
        fn normalize_is_idempotent_on_name_like(raw in "[A-Za-z0-9 ._/,;:!-]{1,24}") {
            if let Ok(once) = normalize_name(&raw) {
                prop_assert_eq!(normalize_name(&once).unwrap(), once);
            }
        }

        #[test]
        fn classify_is_total(heading in "\\PC{1,40}") {
            let a = classify_section(&heading);
            prop_assert_eq!(a, classify_section(&heading));
        }
    }
}
