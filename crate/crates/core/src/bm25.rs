//! Okapi BM25 over an in-memory inverted index.
//!
//! Analyzer: split on whitespace, lowercase, drop every non-alphanumeric
//! character, discard tokens left empty.

use std::collections::{BTreeMap, HashMap};

use crate::corpus::Corpus;

pub const DEFAULT_K1: f64 = 1.2;
pub const DEFAULT_B: f64 = 0.75;

pub fn analyze(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| c.is_alphanumeric())
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params {
            k1: DEFAULT_K1,
            b: DEFAULT_B,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    doc_ids: Vec<String>,
    doc_lens: Vec<u32>,
    avgdl: f64,
    /// term -> (document ordinal, term frequency), ordinals ascending.
    postings: BTreeMap<String, Vec<(u32, u32)>>,
}

impl InvertedIndex {
    pub fn build(corpus: &Corpus) -> Self {
        let mut postings: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
        let mut doc_ids = Vec::with_capacity(corpus.len());
        let mut doc_lens = Vec::with_capacity(corpus.len());
        for (ord, doc) in corpus.docs().iter().enumerate() {
            let terms = analyze(&doc.text);
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in &terms {
                *tf.entry(t.clone()).or_default() += 1;
            }
            for (term, count) in tf {
                postings.entry(term).or_default().push((ord as u32, count));
            }
            doc_ids.push(doc.doc_id.clone());
            doc_lens.push(terms.len() as u32);
        }
        let total: u64 = doc_lens.iter().map(|&l| l as u64).sum();
        let avgdl = if doc_lens.is_empty() {
            0.0
        } else {
            total as f64 / doc_lens.len() as f64
        };
        InvertedIndex {
            doc_ids,
            doc_lens,
            avgdl,
            postings,
        }
    }

    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn df(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn doc_len(&self, doc_id: &str) -> Option<usize> {
        self.doc_ids
            .iter()
            .position(|d| d == doc_id)
            .map(|i| self.doc_lens[i] as usize)
    }

    pub fn postings(&self, term: &str) -> impl Iterator<Item = (&str, u32)> + '_ {
        self.postings
            .get(term)
            .into_iter()
            .flatten()
            .map(|&(ord, tf)| (self.doc_ids[ord as usize].as_str(), tf))
    }

    /// `ln(1 + (N − df + 0.5) / (df + 0.5))`.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.num_docs() as f64;
        let df = self.df(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Top `k` documents for `query`; every query token contributes once per
    /// occurrence. Documents sharing no term with the query are left out.
    pub fn search(&self, query: &str, k: usize, params: Bm25Params) -> Vec<ScoredDoc> {
        let mut scores: HashMap<u32, f64> = HashMap::new();
        for term in analyze(query) {
            let Some(list) = self.postings.get(&term) else {
                continue;
            };
            let idf = self.idf(&term);
            for &(ord, tf) in list {
                let tf = tf as f64;
                let dl = self.doc_lens[ord as usize] as f64;
                let norm = params.k1 * (1.0 - params.b + params.b * dl / self.avgdl);
                *scores.entry(ord).or_default() += idf * tf / (tf + norm);
            }
        }
        let mut ranked: Vec<ScoredDoc> = scores
            .into_iter()
            .map(|(ord, score)| ScoredDoc {
                doc_id: self.doc_ids[ord as usize].clone(),
                score,
            })
            .collect();
        ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id)));
        ranked.truncate(k);
        ranked
    }
}
