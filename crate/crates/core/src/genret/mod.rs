//! Generative retrieval: decode corpus-grounded spans for a query, then rank
//! the documents those spans were located in.

mod decode;
mod model;
mod ngram;
mod policy;
mod score;

pub use self::decode::{constrained_beam_search, DecodeConfig, Hypothesis, ScoredSpan};
pub use self::model::{next_logprobs, ExternalModel, LanguageModel, TokenDistribution, UniformModel};
pub use self::ngram::{train_ngram, NgramConfig, NgramModel, DEFAULT_ALPHA, DEFAULT_ORDER, MAX_ORDER};
pub use self::policy::{first_token_candidates, is_stop_byte, FirstTokenPolicy};
pub use self::score::{score_documents, span_idf, RetrievalResult, SpanContribution};

use crate::corpus::tokenize;
use crate::error::{DecodeError, Error, Result};
use crate::fmindex::FmIndex;

/// Ranked documents for one query. When decoding produced no span the
/// results are empty and `diagnostic` says why.
#[derive(Debug, Clone, PartialEq)]
pub struct Retrieval {
    pub results: Vec<RetrievalResult>,
    pub diagnostic: Option<DecodeError>,
}

pub fn retrieve(
    idx: &FmIndex,
    model: &dyn LanguageModel,
    query_text: &str,
    cfg: &DecodeConfig,
    k: usize,
) -> Result<Retrieval> {
    if k == 0 {
        return Err(Error::Domain("k must be >= 1".into()));
    }
    let query = tokenize(query_text);
    let spans = match constrained_beam_search(idx, model, &query, cfg) {
        Ok(spans) => spans,
        Err(Error::Decode(d)) => {
            return Ok(Retrieval {
                results: Vec::new(),
                diagnostic: Some(d),
            })
        }
        Err(e) => return Err(e),
    };
    let mut results = score_documents(idx, &spans, cfg)?;
    results.truncate(k);
    Ok(Retrieval {
        results,
        diagnostic: None,
    })
}
