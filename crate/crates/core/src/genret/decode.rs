//! FM-index constrained beam search.
//!
//! Every hypothesis carries the row range of its tokens on a reversed index,
//! so the symbols that can follow it are exactly the symbols preceding those
//! rows in the BWT. Nothing that does not occur in the corpus can ever enter
//! the beam.

use std::cmp::Ordering;

use crate::corpus::{Symbol, TERMINATOR};
use crate::error::{DecodeError, Error, Result};
use crate::fmindex::{FmIndex, Range};
use crate::genret::model::{next_logprobs, LanguageModel};
use crate::genret::policy::{first_token_candidates, FirstTokenPolicy};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeConfig {
    pub beam_width: usize,
    pub max_span_len: usize,
    pub min_span_len: usize,
    pub first_token: FirstTokenPolicy,
    /// Located occurrences per span when mapping spans to documents.
    pub locate_limit: usize,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            beam_width: 10,
            max_span_len: 32,
            min_span_len: 4,
            first_token: FirstTokenPolicy::Stoplist,
            locate_limit: 100,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_width == 0 {
            return Err(Error::Config("beam width must be >= 1".into()));
        }
        if self.min_span_len == 0 || self.min_span_len > self.max_span_len {
            return Err(Error::Config(format!(
                "need 1 <= min_span_len ({}) <= max_span_len ({})",
                self.min_span_len, self.max_span_len
            )));
        }
        if self.locate_limit == 0 {
            return Err(Error::Config("locate limit must be >= 1".into()));
        }
        Ok(())
    }
}

/// A partial or finished span.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub tokens: Vec<Symbol>,
    pub range: Range,
    pub logprob: f64,
    pub finished: bool,
}

impl Hypothesis {
    /// Length-normalized log-probability.
    pub fn score(&self) -> f64 {
        if self.tokens.is_empty() {
            0.0
        } else {
            self.logprob / self.tokens.len() as f64
        }
    }
}

/// A finished span with its cumulative and length-normalized log-probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSpan {
    pub tokens: Vec<Symbol>,
    pub range: Range,
    pub logprob: f64,
    pub score: f64,
}

/// Higher score first; ties go to the lexicographically smaller token
/// sequence, which puts the smaller symbol id and then the shorter span first.
fn beam_order(a: &Hypothesis, b: &Hypothesis) -> Ordering {
    b.score()
        .total_cmp(&a.score())
        .then_with(|| a.tokens.cmp(&b.tokens))
        .then_with(|| a.finished.cmp(&b.finished))
}

fn candidates(idx: &FmIndex, range: Range, first: Option<&FirstTokenPolicy>) -> Vec<(Symbol, Range)> {
    idx.range_symbols(range)
        .into_iter()
        .filter(|&(c, _)| c > TERMINATOR && first.is_none_or(|p| p.admits(c)))
        .collect()
}

/// Generates up to `beam_width` corpus-grounded spans conditioned on `query`.
pub fn constrained_beam_search(
    idx: &FmIndex,
    model: &dyn LanguageModel,
    query: &[Symbol],
    cfg: &DecodeConfig,
) -> Result<Vec<ScoredSpan>> {
    cfg.validate()?;
    if !idx.is_reversed() {
        return Err(Error::Config(
            "constrained decoding needs an index built in reversed mode".into(),
        ));
    }
    if first_token_candidates(idx, &cfg.first_token).is_empty() {
        return Err(DecodeError::EmptyFirstStep.into());
    }

    let mut beam = vec![Hypothesis {
        tokens: Vec::new(),
        range: idx.full_range(),
        logprob: 0.0,
        finished: false,
    }];
    let mut context = query.to_vec();

    while beam.iter().any(|h| !h.finished) {
        let mut pool = Vec::new();
        for hyp in beam {
            if hyp.finished {
                pool.push(hyp);
                continue;
            }
            let t = hyp.tokens.len();
            let first = (t == 0).then_some(&cfg.first_token);
            let next = candidates(idx, hyp.range, first);
            if t == 0 && next.is_empty() {
                return Err(DecodeError::EmptyFirstStep.into());
            }
            if !next.is_empty() {
                context.truncate(query.len());
                context.extend_from_slice(&hyp.tokens);
                let symbols: Vec<Symbol> = next.iter().map(|&(c, _)| c).collect();
                let dist = next_logprobs(model, &context, &symbols)?;
                for (&(c, range), &(_, lp)) in next.iter().zip(&dist.entries) {
                    let mut tokens = Vec::with_capacity(t + 1);
                    tokens.extend_from_slice(&hyp.tokens);
                    tokens.push(c);
                    pool.push(Hypothesis {
                        finished: tokens.len() >= cfg.max_span_len,
                        tokens,
                        range,
                        logprob: hyp.logprob + lp,
                    });
                }
            }
            if t >= cfg.min_span_len {
                pool.push(Hypothesis {
                    finished: true,
                    ..hyp
                });
            }
        }
        pool.sort_by(beam_order);
        pool.truncate(cfg.beam_width);
        beam = pool;
    }

    if beam.is_empty() {
        return Err(DecodeError::NoFinishedSpan {
            min_span_len: cfg.min_span_len,
        }
        .into());
    }
    Ok(beam
        .into_iter()
        .map(|h| ScoredSpan {
            score: h.score(),
            tokens: h.tokens,
            range: h.range,
            logprob: h.logprob,
        })
        .collect())
}
