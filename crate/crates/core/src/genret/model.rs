use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::Symbol;
use crate::error::{Error, Result};
use crate::external::LineSession;

/// A next-symbol scorer.
///
/// Implementations return one unnormalized log-score per candidate, in
/// candidate order. Only differences between scores matter: the decoder
/// renormalizes over the candidate set through [`next_logprobs`].
pub trait LanguageModel: Send + Sync {
    fn score(&self, context: &[Symbol], candidates: &[Symbol]) -> Result<Vec<f64>>;
}

/// Log-probabilities over an explicit candidate set; they sum to one in
/// probability space.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenDistribution {
    pub entries: Vec<(Symbol, f64)>,
}

impl TokenDistribution {
    pub fn logprob(&self, symbol: Symbol) -> Option<f64> {
        self.entries.iter().find(|(s, _)| *s == symbol).map(|&(_, lp)| lp)
    }
}

pub fn next_logprobs(
    model: &dyn LanguageModel,
    context: &[Symbol],
    candidates: &[Symbol],
) -> Result<TokenDistribution> {
    if candidates.is_empty() {
        return Err(Error::Domain("candidate set must be non-empty".into()));
    }
    let scores = model.score(context, candidates)?;
    if scores.len() != candidates.len() {
        return Err(Error::Internal(format!(
            "model returned {} scores for {} candidates",
            scores.len(),
            candidates.len()
        )));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::Domain(format!("model returned non-finite score {bad}")));
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    Ok(TokenDistribution {
        entries: candidates
            .iter()
            .zip(&scores)
            .map(|(&c, &s)| (c, s - log_z))
            .collect(),
    })
}

/// Every candidate equally likely.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformModel;

impl LanguageModel for UniformModel {
    fn score(&self, _context: &[Symbol], candidates: &[Symbol]) -> Result<Vec<f64>> {
        Ok(vec![0.0; candidates.len()])
    }
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    context: &'a [Symbol],
    candidates: &'a [Symbol],
}

#[derive(Deserialize)]
struct ScoreResponse {
    logprobs: Vec<f64>,
}

/// A model served by a child process over the line protocol in
/// [`crate::external`].
#[derive(Debug)]
pub struct ExternalModel {
    session: Mutex<LineSession>,
}

impl ExternalModel {
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self> {
        Ok(ExternalModel {
            session: Mutex::new(LineSession::spawn(command, timeout)?),
        })
    }
}

impl LanguageModel for ExternalModel {
    fn score(&self, context: &[Symbol], candidates: &[Symbol]) -> Result<Vec<f64>> {
        let mut session = self
            .session
            .lock()
            .map_err(|_| Error::Session("session lock poisoned".into()))?;
        let (id, resp): (u64, ScoreResponse) = session.call(&ScoreRequest { context, candidates })?;
        if resp.logprobs.len() != candidates.len() {
            return Err(session.reject(
                id,
                format!(
                    "expected {} logprobs, got {}",
                    candidates.len(),
                    resp.logprobs.len()
                ),
            ));
        }
        if resp.logprobs.iter().any(|lp| !lp.is_finite()) {
            return Err(session.reject(id, "non-finite logprob"));
        }
        Ok(resp.logprobs)
    }
}
