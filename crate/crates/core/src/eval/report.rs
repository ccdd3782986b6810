use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::EvalResult;
use crate::corpus::EntityKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub kind: EntityKind,
    pub metric: String,
    pub k: usize,
    pub value: f64,
}

/// Flat `{method, kind, metric, k, value}` rows, recall before hitrate.
pub fn report_rows(results: &[EvalResult]) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for r in results {
        for (&kind, m) in &r.means {
            let recall = m.recall.iter().map(|(&k, &v)| ("recall", k, v));
            let hit = m.hit.iter().map(|(&k, &v)| ("hitrate", k, v));
            for (metric, k, value) in recall.chain(hit) {
                rows.push(ReportRow { method: r.method.clone(), kind, metric: metric.into(), k, value });
            }
        }
    }
    rows
}

/// One line per method; baseline columns, then dataset columns.
pub fn report_text(results: &[EvalResult]) -> String {
    let mut out = String::new();
    let width = results.iter().map(|r| r.method.len()).max().unwrap_or(6).max(6);
    let columns = |kind: EntityKind| -> Vec<String> {
        let Some(m) = results.iter().find_map(|r| r.means.get(&kind)) else { return vec![] };
        m.recall.keys().map(|k| format!("R@{k}")).chain(m.hit.keys().map(|k| format!("HR@{k}"))).collect()
    };
    let _ = write!(out, "{:width$}", "method");
    for kind in EntityKind::ALL {
        let cols = columns(kind);
        if !cols.is_empty() {
            let _ = write!(out, " | {kind}: {}", cols.iter().map(|c| format!("{c:>7}")).collect::<Vec<_>>().join(" "));
        }
    }
    out.push('\n');
    for r in results {
        let _ = write!(out, "{:width$}", r.method);
        for kind in EntityKind::ALL {
            let Some(m) = r.means.get(&kind) else { continue };
            let values: Vec<String> = m.recall.values().chain(m.hit.values()).map(|v| format!("{v:>7.4}")).collect();
            let pad = kind.as_str().len() + 2;
            let _ = write!(out, " | {:pad$}{}", "", values.join(" "));
        }
        let _ = writeln!(out, "  (n={}, excluded={})", r.means.values().map(|m| m.queries).sum::<usize>(), r.excluded.len());
    }
    if let Some(first) = results.first() {
        let _ = writeln!(out, "config {}", first.fingerprint);
    }
    out
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::eval::KindMeans;

    #[test]
    fn rows_cover_every_mean() {
        let means = KindMeans {
            queries: 2,
            recall: BTreeMap::from([(10, 0.5), (20, 0.75)]),
            hit: BTreeMap::from([(5, 1.0)]),
        };
        let r = EvalResult {
            method: "dense".into(),
            fingerprint: "abc".into(),
            per_query: BTreeMap::new(),
            means: BTreeMap::from([(EntityKind::Baseline, means)]),
            excluded: vec![],
        };
        let rows = report_rows(std::slice::from_ref(&r));
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2], ReportRow { method: "dense".into(), kind: EntityKind::Baseline, metric: "hitrate".into(), k: 5, value: 1.0 });
        let text = report_text(&[r]);
        assert!(text.contains("R@20") && text.contains("0.7500") && text.contains("config abc"));
    }
}
