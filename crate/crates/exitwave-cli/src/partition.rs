//! Split assignment by source group and the leakage audit.

use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PartitionError {
    #[error("group key {0:?} has no split assignment")]
    UnknownGroupKey(String),
    #[error("material {material:?} appears in splits {a:?} and {b:?}")]
    Leakage {
        material: String,
        a: String,
        b: String,
    },
}

/// Assign each record's group key to its configured split. Every key
/// must appear in the rule map.
pub fn partition_by_source(
    groups: &[String],
    rule: &BTreeMap<String, String>,
) -> Result<Vec<String>, PartitionError> {
    groups
        .iter()
        .map(|g| {
            rule.get(g)
                .cloned()
                .ok_or_else(|| PartitionError::UnknownGroupKey(g.clone()))
        })
        .collect()
}

/// The train-side class a split belongs to for leakage purposes: the
/// "unseen" split reuses training materials by construction, so it
/// audits as "train".
fn audit_class(split: &str) -> &str {
    if split == "unseen" {
        "train"
    } else {
        split
    }
}

/// Verify that no material identifier crosses train/validation/test
/// boundaries.
pub fn audit_no_leakage<'a>(
    assignments: impl IntoIterator<Item = (&'a str, &'a str)>,
) -> Result<(), PartitionError> {
    let mut seen: BTreeMap<&str, &str> = BTreeMap::new();
    for (material, split) in assignments {
        let class = audit_class(split);
        match seen.get(material) {
            None => {
                seen.insert(material, class);
            }
            Some(&prev) if prev == class => {}
            Some(&prev) => {
                return Err(PartitionError::Leakage {
                    material: material.to_string(),
                    a: prev.to_string(),
                    b: class.to_string(),
                });
            }
        }
    }
    Ok(())
}
