//! Add-α smoothed n-gram model with backoff, trained on the corpus.
//!
//! For a context `h`, the model uses the longest suffix `s` of `h` (at most
//! `order - 1` symbols) that has been observed followed by something, and
//! scores `P(x | s) = (c(s·x) + α) / (c(s) + α·|V|)` over the full alphabet.
//! Counts come from k-gram windows inside documents and, when the context
//! cache is enabled, from the decoding context itself (query plus generated
//! prefix), so the model can copy material from the query.

use std::collections::HashMap;

use crate::corpus::{tokenize, Corpus, Symbol, ALPHABET_SIZE};
use crate::error::{Error, Result};
use crate::genret::model::LanguageModel;

pub const DEFAULT_ORDER: usize = 4;
pub const DEFAULT_ALPHA: f64 = 0.1;
/// Packed contexts use 9 bits per symbol.
pub const MAX_ORDER: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NgramConfig {
    pub order: usize,
    pub alpha: f64,
    pub context_cache: bool,
}

impl Default for NgramConfig {
    fn default() -> Self {
        NgramConfig {
            order: DEFAULT_ORDER,
            alpha: DEFAULT_ALPHA,
            context_cache: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Counts {
    total: u64,
    next: HashMap<Symbol, u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    config: NgramConfig,
    /// `tables[j]` maps packed contexts of length `j` to follower counts.
    tables: Vec<HashMap<u64, Counts>>,
}

fn pack(context: &[Symbol]) -> u64 {
    context.iter().fold(0u64, |acc, &s| (acc << 9) | s as u64)
}

pub fn train_ngram(corpus: &Corpus, config: NgramConfig) -> Result<NgramModel> {
    if config.order < 1 || config.order > MAX_ORDER {
        return Err(Error::Domain(format!(
            "n-gram order must be in 1..={MAX_ORDER}, got {}",
            config.order
        )));
    }
    if !(config.alpha > 0.0 && config.alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha must be positive, got {}", config.alpha)));
    }
    if corpus.is_empty() {
        return Err(Error::Domain("cannot train on an empty corpus".into()));
    }
    let mut tables = vec![HashMap::new(); config.order];
    for doc in corpus.docs() {
        let toks = tokenize(&doc.text);
        for i in 0..toks.len() {
            for (len, table) in tables.iter_mut().enumerate().take(i + 1) {
                let counts: &mut Counts = table.entry(pack(&toks[i - len..i])).or_default();
                counts.total += 1;
                *counts.next.entry(toks[i]).or_default() += 1;
            }
        }
    }
    Ok(NgramModel { config, tables })
}

impl NgramModel {
    pub fn config(&self) -> NgramConfig {
        self.config
    }

    /// Log-probabilities over the full alphabet for each of `candidates`.
    pub fn logprobs(&self, context: &[Symbol], candidates: &[Symbol]) -> Vec<f64> {
        let max_len = (self.config.order - 1).min(context.len());
        for len in (0..=max_len).rev() {
            let suffix = &context[context.len() - len..];
            let corpus = self.tables[len].get(&pack(suffix));
            let (cache_total, cache_next) = if self.config.context_cache {
                cache_counts(context, suffix)
            } else {
                (0, HashMap::new())
            };
            let total = corpus.map_or(0, |c| c.total) + cache_total;
            if total == 0 {
                continue;
            }
            let denom = total as f64 + self.config.alpha * ALPHABET_SIZE as f64;
            return candidates
                .iter()
                .map(|x| {
                    let hits = corpus.and_then(|c| c.next.get(x)).copied().unwrap_or(0)
                        + cache_next.get(x).copied().unwrap_or(0);
                    ((hits as f64 + self.config.alpha) / denom).ln()
                })
                .collect();
        }
        let uniform = -(ALPHABET_SIZE as f64).ln();
        vec![uniform; candidates.len()]
    }
}

/// Occurrences of `suffix` inside `context` that are followed by another
/// symbol of the context, and what follows them.
fn cache_counts(context: &[Symbol], suffix: &[Symbol]) -> (u64, HashMap<Symbol, u64>) {
    let mut total = 0;
    let mut next = HashMap::new();
    let k = suffix.len();
    for end in k..context.len() {
        if &context[end - k..end] == suffix {
            total += 1;
            *next.entry(context[end]).or_default() += 1;
        }
    }
    (total, next)
}

impl LanguageModel for NgramModel {
    fn score(&self, context: &[Symbol], candidates: &[Symbol]) -> Result<Vec<f64>> {
        Ok(self.logprobs(context, candidates))
    }
}
