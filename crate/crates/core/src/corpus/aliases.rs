use std::collections::HashMap;

use crate::corpus::ResourceEntity;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeEvent {
    pub kept: String,
    pub absorbed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeOutcome {
    pub entities: Vec<ResourceEntity>,
    pub log: Vec<MergeEvent>,
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Merges entities whose normalized alias sets intersect, transitively.
///
/// The merged entity keeps the smallest id (and its canonical name), the
/// union of aliases, the earliest year and the longest description.
/// Output groups appear in the order of their first member in the input.
pub fn merge_aliases(entities: Vec<ResourceEntity>) -> Result<MergeOutcome> {
    let mut sets = DisjointSet::new(entities.len());
    let mut owner: HashMap<&str, usize> = HashMap::new();
    for (i, e) in entities.iter().enumerate() {
        for alias in &e.aliases {
            match owner.get(alias.as_str()) {
                Some(&j) => sets.union(i, j),
                None => {
                    owner.insert(alias, i);
                }
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of_root: HashMap<usize, usize> = HashMap::new();
    for i in 0..entities.len() {
        let root = sets.find(i);
        let g = *group_of_root.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }

    let mut slots: Vec<Option<ResourceEntity>> = entities.into_iter().map(Some).collect();
    let mut merged = Vec::with_capacity(groups.len());
    let mut log = Vec::new();
    for members in groups {
        let mut group: Vec<ResourceEntity> = members.iter().map(|&i| slots[i].take().unwrap()).collect();
        if group.len() == 1 {
            merged.push(group.pop().unwrap());
            continue;
        }
        group.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(odd) = group.iter().find(|e| e.kind != group[0].kind) {
            return Err(Error::KindMismatch { a: group[0].id.clone(), b: odd.id.clone() });
        }
        let description = group
            .iter()
            .max_by(|a, b| a.description.len().cmp(&b.description.len()).then(b.id.cmp(&a.id)))
            .map(|e| e.description.clone())
            .unwrap_or_default();
        let year = group.iter().filter_map(|e| e.year).min();
        let introducing_paper = group.iter().find_map(|e| e.introducing_paper.clone());
        let repo = group.iter().find_map(|e| e.repo.clone());
        let mut iter = group.into_iter();
        let mut kept = iter.next().unwrap();
        let mut absorbed = Vec::new();
        for other in iter {
            kept.aliases.extend(other.aliases);
            absorbed.push(other.id);
        }
        kept.description = description;
        kept.year = year;
        kept.introducing_paper = introducing_paper;
        kept.repo = repo;
        log.push(MergeEvent { kept: kept.id.clone(), absorbed });
        merged.push(kept);
    }
    Ok(MergeOutcome { entities: merged, log })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use proptest::prelude::*;

    use super::*;
    use crate::corpus::EntityKind;

    fn ent(id: &str, aliases: &[&str]) -> ResourceEntity {
        ResourceEntity::new(id, EntityKind::Baseline, aliases[0], &aliases[1..], format!("desc of {id}")).unwrap()
    }

    #[test]
    fn intersecting_aliases_merge() {
        let out = merge_aliases(vec![ent("A", &["resnet 50"]), ent("B", &["resnet 50", "rn50"])]).unwrap();
        assert_eq!(out.entities.len(), 1);
        let e = &out.entities[0];
        assert_eq!(e.id, "A");
        assert_eq!(e.aliases, BTreeSet::from(["resnet 50".to_string(), "rn50".to_string()]));
        assert_eq!(out.log, vec![MergeEvent { kept: "A".into(), absorbed: vec!["B".into()] }]);
    }

    #[test]
    fn merging_is_transitive() {
        let out = merge_aliases(vec![ent("C", &["z", "y"]), ent("A", &["x"]), ent("B", &["x", "y"])]).unwrap();
        assert_eq!(out.entities.len(), 1);
        assert_eq!(out.entities[0].id, "A");
        assert_eq!(out.entities[0].aliases.len(), 3);
    }

    #[test]
    fn disjoint_input_is_unchanged() {
        let input = vec![ent("b", &["one"]), ent("a", &["two"])];
        let out = merge_aliases(input.clone()).unwrap();
        assert_eq!(out.entities, input);
        assert!(out.log.is_empty());
    }

    #[test]
    fn attributes_follow_tie_breaks() {
        let mut a = ent("A", &["x"]);
        a.year = Some(2019);
        a.description = "short".into();
        let mut b = ent("B", &["x"]);
        b.year = Some(2015);
        b.description = "a much longer description".into();
        b.repo = Some("https://example.org/b".into());
        let e = merge_aliases(vec![b, a]).unwrap().entities.pop().unwrap();
        assert_eq!(e.id, "A");
        assert_eq!(e.canonical_name, "x");
        assert_eq!(e.year, Some(2015));
        assert_eq!(e.description, "a much longer description");
        assert_eq!(e.repo.as_deref(), Some("https://example.org/b"));
    }

    #[test]
    fn kind_mismatch_names_both() {
        let mut d = ent("D", &["x"]);
        d.kind = EntityKind::Dataset;
        let err = merge_aliases(vec![ent("A", &["x"]), d]).unwrap_err();
        assert!(matches!(err, Error::KindMismatch { ref a, ref b } if a == "A" && b == "D"));
    }

    /// Connected components of the alias-intersection graph by repeated
    /// flooding over an explicit adjacency matrix.
    fn component_count(alias_sets: &[BTreeSet<String>]) -> usize {
        let n = alias_sets.len();
        let adj: Vec<Vec<bool>> = (0..n)
            .map(|i| (0..n).map(|j| !alias_sets[i].is_disjoint(&alias_sets[j])).collect())
            .collect();
        let mut seen = vec![false; n];
        let mut count = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(u) = stack.pop() {
                for v in 0..n {
                    if adj[u][v] && !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        count
    }

    proptest! {
        #[test]
        fn merge_matches_component_oracle(sets in prop::collection::vec(prop::collection::btree_set(0u8..12, 1..3), 0..12)) {
            let entities: Vec<ResourceEntity> = sets
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let aliases: Vec<String> = s.iter().map(|a| format!("alias {a}")).collect();
                    ResourceEntity::new(format!("e{i:02}"), EntityKind::Dataset, &aliases[0], &aliases, "").unwrap()
                })
                .collect();
            let alias_sets: Vec<_> = entities.iter().map(|e| e.aliases.clone()).collect();
            let components = component_count(&alias_sets);
            let out = merge_aliases(entities.clone()).unwrap();
            prop_assert_eq!(out.entities.len(), components);
            let absorbed: usize = out.log.iter().map(|e| e.absorbed.len()).sum();
            prop_assert_eq!(absorbed, entities.len() - components);
            for (i, a) in out.entities.iter().enumerate() {
                for b in &out.entities[i + 1..] {
                    prop_assert!(a.aliases.is_disjoint(&b.aliases));
                }
            }
        }
    }
}
