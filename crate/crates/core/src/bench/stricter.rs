//! Stricter relevance grouping: cases are grouped by their full
//! (sub-factor, option) key; when no two cases agree on the full key the key
//! is truncated one sub-factor at a time until some group has two members.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};

/// Ordered (sub-factor, option) pairs of one case.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct StricterKey(pub Vec<(String, u32)>);

impl StricterKey {
    pub fn new(pairs: Vec<(String, u32)>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (name, _) in &pairs {
            if !seen.insert(name.as_str()) {
                return Err(Error::Domain(format!("sub-factor {name:?} appears twice in one key")));
            }
        }
        Ok(StricterKey(pairs))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn names(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|(n, _)| n.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StricterMode {
    /// Every group of two or more cases at the first key length that has one.
    #[default]
    AllGroups,
    /// Only the first such group (in order of first appearance).
    FirstGroup,
}

/// Groups of size >= 2 when keys are cut to their first `len` pairs, in order
/// of first appearance; members keep input order.
fn groups_at(cases: &[(String, StricterKey)], len: usize) -> Vec<Vec<String>> {
    let mut slot: HashMap<&[(String, u32)], usize> = HashMap::new();
    let mut groups: Vec<Vec<String>> = Vec::new();
    for (id, key) in cases {
        let prefix = &key.0[..len];
        let i = *slot.entry(prefix).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[i].push(id.clone());
    }
    groups.retain(|g| g.len() >= 2);
    groups
}

pub fn stricter_grouping(cases: &[(String, StricterKey)], mode: StricterMode) -> Result<Vec<Vec<String>>> {
    let Some((first_id, first_key)) = cases.first() else {
        return Ok(Vec::new());
    };
    for (id, key) in cases {
        if key.names().ne(first_key.names()) {
            return Err(Error::Domain(format!(
                "case {id:?} lists sub-factors in a different order than case {first_id:?}"
            )));
        }
    }

    let full = first_key.len();
    let mut found = groups_at(cases, full);
    if found.is_empty() {
        for r in (1..=full).rev() {
            found = groups_at(cases, r);
            if !found.is_empty() {
                break;
            }
        }
    }
    if mode == StricterMode::FirstGroup {
        found.truncate(1);
    }
    Ok(found)
}
