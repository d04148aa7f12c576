use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A relevance group ready to be turned into a query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedGroup {
    pub group_id: String,
    pub category: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QueryPolicy {
    /// The lexicographically first member is the query.
    #[default]
    FirstLexicographic,
}

/// One line of a queries file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub query_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_doc: Option<String>,
}

/// A query produced by `build_qrels`, before its text is filled in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuerySpec {
    pub query_id: String,
    pub query_doc: String,
    pub category: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    relevant: BTreeMap<String, BTreeSet<String>>,
    query_doc: BTreeMap<String, String>,
    category: BTreeMap<String, String>,
}

impl Qrels {
    pub fn insert(&mut self, query_id: &str, doc_id: &str) -> Result<()> {
        if self.query_doc.get(query_id).is_some_and(|q| q == doc_id) {
            return Err(Error::Integrity(format!(
                "query {query_id:?}: query doc {doc_id:?} cannot be relevant to itself"
            )));
        }
        self.relevant
            .entry(query_id.to_string())
            .or_default()
            .insert(doc_id.to_string());
        Ok(())
    }

    pub fn set_query_doc(&mut self, query_id: &str, doc_id: &str) -> Result<()> {
        if self.relevant.get(query_id).is_some_and(|r| r.contains(doc_id)) {
            return Err(Error::Integrity(format!(
                "query {query_id:?}: query doc {doc_id:?} is listed as relevant"
            )));
        }
        self.query_doc.insert(query_id.to_string(), doc_id.to_string());
        Ok(())
    }

    pub fn set_category(&mut self, query_id: &str, category: &str) {
        self.category.insert(query_id.to_string(), category.to_string());
    }

    /// Query doc and category from a queries file, for queries present here.
    pub fn attach_queries(&mut self, queries: &[QueryRecord]) -> Result<()> {
        for q in queries {
            if !self.relevant.contains_key(&q.query_id) {
                continue;
            }
            if let Some(d) = &q.query_doc {
                self.set_query_doc(&q.query_id, d)?;
            }
            if let Some(c) = &q.category {
                self.set_category(&q.query_id, c);
            }
        }
        Ok(())
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.relevant.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.relevant.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relevant.is_empty()
    }

    pub fn relevant(&self, query_id: &str) -> Option<&BTreeSet<String>> {
        self.relevant.get(query_id)
    }

    pub fn query_doc(&self, query_id: &str) -> Option<&str> {
        self.query_doc.get(query_id).map(String::as_str)
    }

    pub fn category(&self, query_id: &str) -> Option<&str> {
        self.category.get(query_id).map(String::as_str)
    }

    /// `query_id<TAB>doc_id` lines, sorted.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (q, docs) in &self.relevant {
            for d in docs {
                writeln!(out, "{q}\t{d}")?;
            }
        }
        Ok(())
    }

    pub fn read_tsv(path: impl AsRef<Path>) -> Result<Qrels> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut qrels = Qrels::default();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                [q, d] if !q.is_empty() && !d.is_empty() => qrels.insert(q, d)?,
                _ => {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: "expected query_id<TAB>doc_id".into(),
                    })
                }
            }
        }
        Ok(qrels)
    }
}

/// One query per group of two or more members; singletons are skipped.
pub fn build_qrels(groups: &[NamedGroup], policy: QueryPolicy) -> Result<(Qrels, Vec<QuerySpec>)> {
    let mut qrels = Qrels::default();
    let mut queries = Vec::new();
    for g in groups {
        let members: BTreeSet<&str> = g.members.iter().map(String::as_str).collect();
        if members.len() < 2 {
            log::warn!("group {:?} has a single member; skipped", g.group_id);
            continue;
        }
        if qrels.relevant.contains_key(&g.group_id) {
            return Err(Error::Integrity(format!("duplicate group id {:?}", g.group_id)));
        }
        let query_doc = match policy {
            QueryPolicy::FirstLexicographic => *members.first().expect("two or more members"),
        };
        for d in members.iter().filter(|&&d| d != query_doc) {
            qrels.insert(&g.group_id, d)?;
        }
        qrels.set_query_doc(&g.group_id, query_doc)?;
        qrels.set_category(&g.group_id, &g.category);
        queries.push(QuerySpec {
            query_id: g.group_id.clone(),
            query_doc: query_doc.to_string(),
            category: g.category.clone(),
        });
    }
    Ok((qrels, queries))
}

pub fn read_queries(path: impl AsRef<Path>) -> Result<Vec<QueryRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out: Vec<QueryRecord> = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let q: QueryRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if q.query_id.is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                message: "query_id must be non-empty".into(),
            });
        }
        if !seen.insert(q.query_id.clone()) {
            return Err(Error::Integrity(format!(
                "line {}: duplicate query_id {:?}",
                i + 1,
                q.query_id
            )));
        }
        out.push(q);
    }
    Ok(out)
}

pub fn write_queries<W: Write>(queries: &[QueryRecord], mut out: W) -> std::io::Result<()> {
    for q in queries {
        serde_json::to_writer(&mut out, q)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub query_id: String,
    pub doc_id: String,
    pub rank: usize,
    pub score: f64,
}

/// `query_id<TAB>doc_id<TAB>rank<TAB>score`, score with four decimals.
pub fn write_run<W: Write>(records: &[RunRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        writeln!(out, "{}\t{}\t{}\t{:.4}", r.query_id, r.doc_id, r.rank, r.score)?;
    }
    Ok(())
}

/// Ranks must start at 1 and increase strictly within each query.
pub fn read_run(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out: Vec<RunRecord> = Vec::new();
    let mut last_rank: BTreeMap<String, usize> = BTreeMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse { line: i + 1, message };
        let fields: Vec<&str> = line.split('\t').collect();
        let [q, d, rank, score] = fields.as_slice() else {
            return Err(bad("expected query_id<TAB>doc_id<TAB>rank<TAB>score".into()));
        };
        let rank: usize = rank.parse().map_err(|_| bad(format!("bad rank {rank:?}")))?;
        let score: f64 = score.parse().map_err(|_| bad(format!("bad score {score:?}")))?;
        if rank == 0 {
            return Err(bad("ranks are 1-based".into()));
        }
        if let Some(&prev) = last_rank.get(*q) {
            if rank <= prev {
                return Err(bad(format!("rank {rank} does not increase after {prev} for query {q:?}")));
            }
        }
        last_rank.insert(q.to_string(), rank);
        out.push(RunRecord {
            query_id: q.to_string(),
            doc_id: d.to_string(),
            rank,
            score,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn group(id: &str, members: &[&str]) -> NamedGroup {
        NamedGroup {
            group_id: id.into(),
            category: "c".into(),
            members: members.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn first_member_is_query() {
        let (qrels, queries) =
            build_qrels(&[group("g1", &["C", "A", "B"]), group("g2", &["Z"])], QueryPolicy::default()).unwrap();
        assert_eq!(queries.len(), 1);
        assert_eq!(queries[0].query_doc, "A");
        let rel: Vec<&str> = qrels.relevant("g1").unwrap().iter().map(String::as_str).collect();
        assert_eq!(rel, vec!["B", "C"]);
        assert_eq!(qrels.query_doc("g1"), Some("A"));
        assert!(qrels.relevant("g2").is_none());
    }

    #[test]
    fn query_doc_never_relevant_to_itself() {
        let mut q = Qrels::default();
        q.insert("q", "A").unwrap();
        assert!(q.set_query_doc("q", "A").is_err());
        q.set_query_doc("q", "B").unwrap();
        assert!(q.insert("q", "B").is_err());
    }

    #[test]
    fn qrels_round_trip() {
        let (qrels, _) = build_qrels(&[group("g1", &["A", "B", "C"])], QueryPolicy::default()).unwrap();
        let mut f = tempfile::NamedTempFile::new().unwrap();
        qrels.write_tsv(&mut f).unwrap();
        let back = Qrels::read_tsv(f.path()).unwrap();
        assert_eq!(back.relevant("g1"), qrels.relevant("g1"));
    }

    #[test]
    fn run_round_trip_and_rank_check() {
        let records = vec![
            RunRecord { query_id: "q".into(), doc_id: "a".into(), rank: 1, score: 2.0 },
            RunRecord { query_id: "q".into(), doc_id: "b".into(), rank: 2, score: 1.23456 },
        ];
        let mut buf = Vec::new();
        write_run(&records, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "q\ta\t1\t2.0000\nq\tb\t2\t1.2346\n");
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(&buf).unwrap();
        assert_eq!(read_run(f.path()).unwrap().len(), 2);

        let mut bad = tempfile::NamedTempFile::new().unwrap();
        bad.write_all(b"q\ta\t2\t1.0\nq\tb\t2\t1.0\n").unwrap();
        assert!(matches!(read_run(bad.path()), Err(Error::Parse { line: 2, .. })));
    }
}
