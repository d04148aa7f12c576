use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};

/// A standard relevance group: cases sharing a charge title and statutes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub group_id: String,
    pub category: String,
    #[serde(default)]
    pub charge_titles: Vec<String>,
    #[serde(default)]
    pub statutes: Vec<String>,
}

impl GroupSpec {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.group_id.is_empty() {
            return Err("group_id must be non-empty".into());
        }
        if self.charge_titles.is_empty() && self.statutes.is_empty() {
            return Err(format!(
                "group {:?} needs at least one charge title or statute",
                self.group_id
            ));
        }
        Ok(())
    }

    /// All of the group's statutes are cited by the case, and the case
    /// carries one of the group's charge titles when any are listed.
    pub fn matches(&self, doc: &Document) -> bool {
        self.statutes.iter().all(|s| doc.statutes.contains(s))
            && (self.charge_titles.is_empty()
                || self.charge_titles.iter().any(|c| doc.charges.contains(c)))
    }
}

pub fn read_group_specs(path: impl AsRef<Path>) -> Result<Vec<GroupSpec>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut specs: Vec<GroupSpec> = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let spec: GroupSpec = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        spec.validate().map_err(|message| Error::Parse { line: i + 1, message })?;
        if specs.iter().any(|s| s.group_id == spec.group_id) {
            return Err(Error::Integrity(format!(
                "line {}: duplicate group_id {:?}",
                i + 1,
                spec.group_id
            )));
        }
        specs.push(spec);
    }
    Ok(specs)
}

/// Cases assigned to each standard group.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardMapping {
    /// group_id -> member doc_ids in corpus order.
    pub members: BTreeMap<String, Vec<String>>,
    pub mapped_cases: usize,
    pub total_cases: usize,
}

impl StandardMapping {
    /// Share of cases that landed in at least one group.
    pub fn mapped_fraction(&self) -> f64 {
        if self.total_cases == 0 {
            0.0
        } else {
            self.mapped_cases as f64 / self.total_cases as f64
        }
    }
}

pub fn map_cases_to_standard_groups(corpus: &Corpus, specs: &[GroupSpec]) -> StandardMapping {
    let mut members: BTreeMap<String, Vec<String>> =
        specs.iter().map(|s| (s.group_id.clone(), Vec::new())).collect();
    let mut mapped_cases = 0;
    for doc in corpus.docs() {
        let mut mapped = false;
        for spec in specs.iter().filter(|s| s.matches(doc)) {
            members
                .get_mut(&spec.group_id)
                .expect("every spec has an entry")
                .push(doc.doc_id.clone());
            mapped = true;
        }
        mapped_cases += mapped as usize;
    }
    StandardMapping {
        members,
        mapped_cases,
        total_cases: corpus.len(),
    }
}
