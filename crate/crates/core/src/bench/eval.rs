use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::bench::qrels::{Qrels, RunRecord};
use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 5;
/// Category used for queries without one.
pub const DEFAULT_CATEGORY: &str = "all";

#[derive(Debug, Clone, PartialEq)]
pub struct QueryScore {
    pub query_id: String,
    pub category: String,
    pub precision: f64,
    /// The run had no entry for this query.
    pub missing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryScore {
    pub queries: usize,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub k: usize,
    pub per_query: Vec<QueryScore>,
    pub per_category: BTreeMap<String, CategoryScore>,
    /// Mean over all queries.
    pub total: f64,
}

impl EvalReport {
    pub fn missing(&self) -> impl Iterator<Item = &str> {
        self.per_query.iter().filter(|q| q.missing).map(|q| q.query_id.as_str())
    }

    /// `name P@k queries` lines, categories first, `total` last.
    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# category P@{} queries", self.k).unwrap();
        for (name, c) in &self.per_category {
            writeln!(out, "{name} {:.4} {}", c.precision, c.queries).unwrap();
        }
        writeln!(out, "total {:.4} {}", self.total, self.per_query.len()).unwrap();
        out
    }
}

/// Precision at `k` of `ranking` (already ordered), with the query doc removed
/// before the cut; the denominator is always `k`.
pub fn precision_at_k<'a>(
    ranking: impl IntoIterator<Item = &'a str>,
    relevant: &std::collections::BTreeSet<String>,
    query_doc: Option<&str>,
    k: usize,
) -> f64 {
    let hits = ranking
        .into_iter()
        .filter(|d| Some(*d) != query_doc)
        .take(k)
        .filter(|d| relevant.contains(*d))
        .count();
    hits as f64 / k as f64
}

pub fn evaluate(run: &[RunRecord], qrels: &Qrels, k: usize) -> Result<EvalReport> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    let mut by_query: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for r in run {
        by_query.entry(r.query_id.as_str()).or_default().push(r);
    }
    for list in by_query.values_mut() {
        list.sort_by_key(|r| r.rank);
    }

    let mut per_query = Vec::with_capacity(qrels.len());
    for q in qrels.query_ids() {
        let category = qrels.category(q).unwrap_or(DEFAULT_CATEGORY).to_string();
        let relevant = qrels.relevant(q).expect("listed query");
        let (precision, missing) = match by_query.get(q) {
            Some(list) => (
                precision_at_k(list.iter().map(|r| r.doc_id.as_str()), relevant, qrels.query_doc(q), k),
                false,
            ),
            None => {
                log::warn!("run has no results for query {q:?}; scored 0");
                (0.0, true)
            }
        };
        per_query.push(QueryScore {
            query_id: q.to_string(),
            category,
            precision,
            missing,
        });
    }

    let mut sums: BTreeMap<String, (usize, f64)> = BTreeMap::new();
    for s in &per_query {
        let e = sums.entry(s.category.clone()).or_default();
        e.0 += 1;
        e.1 += s.precision;
    }
    let per_category = sums
        .into_iter()
        .map(|(name, (n, sum))| {
            (
                name,
                CategoryScore {
                    queries: n,
                    precision: sum / n as f64,
                },
            )
        })
        .collect();
    let total = if per_query.is_empty() {
        0.0
    } else {
        per_query.iter().map(|s| s.precision).sum::<f64>() / per_query.len() as f64
    };
    Ok(EvalReport {
        k,
        per_query,
        per_category,
        total,
    })
}
