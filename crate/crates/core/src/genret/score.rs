use std::collections::{BTreeMap, HashMap};

use crate::corpus::{detokenize, Symbol};
use crate::error::{Error, Result};
use crate::fmindex::FmIndex;
use crate::genret::decode::{DecodeConfig, ScoredSpan};

#[derive(Debug, Clone, PartialEq)]
pub struct SpanContribution {
    pub text: String,
    pub score: f64,
    /// Located occurrences of the span inside this document.
    pub occurrences: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalResult {
    pub doc_id: String,
    pub score: f64,
    pub spans: Vec<SpanContribution>,
}

/// `ln(1 + N / df)`.
pub fn span_idf(num_docs: usize, df: usize) -> f64 {
    (1.0 + num_docs as f64 / df as f64).ln()
}

/// Aggregates spans into a document ranking.
///
/// Each distinct span `S` (best score kept on duplicates) adds
/// `exp(score(S)) · ln(1 + N / df(S))` to every document it was located in,
/// where `df` counts the documents among the first `locate_limit`
/// occurrences. Results are sorted by score, then by `doc_id`.
pub fn score_documents(
    idx: &FmIndex,
    spans: &[ScoredSpan],
    cfg: &DecodeConfig,
) -> Result<Vec<RetrievalResult>> {
    let mut best: BTreeMap<&[Symbol], f64> = BTreeMap::new();
    for span in spans {
        best.entry(&span.tokens)
            .and_modify(|s| *s = s.max(span.score))
            .or_insert(span.score);
    }

    let num_docs = idx.num_docs();
    let mut docs: HashMap<usize, RetrievalResult> = HashMap::new();
    for (tokens, score) in best {
        let range = idx.find(tokens)?;
        if tokens.is_empty() || range.is_empty() {
            return Err(Error::Internal(format!(
                "span {:?} does not occur in the corpus",
                detokenize(tokens).unwrap_or_default()
            )));
        }
        let mut per_doc: BTreeMap<usize, usize> = BTreeMap::new();
        for pos in idx.locate(range, cfg.locate_limit) {
            let doc = idx.doc_index_at(pos).ok_or_else(|| {
                Error::Internal(format!("occurrence at position {pos} lies outside every document"))
            })?;
            *per_doc.entry(doc).or_default() += 1;
        }
        let weight = score.exp() * span_idf(num_docs, per_doc.len());
        if weight.is_nan() || weight <= 0.0 {
            continue;
        }
        let text = detokenize(tokens)?;
        for (doc, occurrences) in per_doc {
            let entry = docs.entry(doc).or_insert_with(|| RetrievalResult {
                doc_id: idx.boundaries()[doc].doc_id.clone(),
                score: 0.0,
                spans: Vec::new(),
            });
            entry.score += weight;
            entry.spans.push(SpanContribution {
                text: text.clone(),
                score,
                occurrences,
            });
        }
    }

    let mut ranked: Vec<RetrievalResult> = docs.into_values().collect();
    for r in &mut ranked {
        r.spans
            .sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.text.cmp(&b.text)));
    }
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id)));
    Ok(ranked)
}
