//! Training pairs for span generation: element extraction from case text,
//! first-token repair, and query/element pair emission.

use std::collections::HashSet;
use std::io::Write;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Symbol};
use crate::error::{Error, Result};
use crate::external::LineSession;
use crate::genret::{is_stop_byte, FirstTokenPolicy};

pub const DEFAULT_MAX_QUERY_PAIRS: usize = 15;
pub const DEFAULT_MAX_ELEMENT_PAIRS: usize = 5;
pub const DEFAULT_MIN_ELEMENT_LEN: usize = 4;

const DELIMITERS: &[char] = &['.', '!', '?', ';', ',', '\n', '。'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairKind {
    QueryElement,
    ElementElement,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub input: String,
    pub target: String,
    pub kind: PairKind,
}

pub trait ElementExtractor {
    fn extract(&self, text: &str) -> Result<Vec<String>>;
}

/// Splits on sentence and clause delimiters and keeps segments with at least
/// `min_len` bytes once words made only of digits, punctuation and
/// whitespace are removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleExtractor {
    pub min_len: usize,
}

impl Default for RuleExtractor {
    fn default() -> Self {
        RuleExtractor {
            min_len: DEFAULT_MIN_ELEMENT_LEN,
        }
    }
}

fn informative_len(segment: &str) -> usize {
    let words: Vec<&str> = segment
        .split_whitespace()
        .filter(|w| !w.bytes().all(is_stop_byte))
        .collect();
    if words.is_empty() {
        0
    } else {
        words.iter().map(|w| w.len()).sum::<usize>() + words.len() - 1
    }
}

impl ElementExtractor for RuleExtractor {
    fn extract(&self, text: &str) -> Result<Vec<String>> {
        let mut seen = HashSet::new();
        Ok(text
            .split(DELIMITERS)
            .map(str::trim)
            .filter(|s| informative_len(s) >= self.min_len)
            .filter(|s| seen.insert(*s))
            .map(str::to_string)
            .collect())
    }
}

#[derive(Serialize)]
struct ExtractRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct ExtractResponse {
    elements: Vec<String>,
}

/// Delegates extraction to a child process: `{"id","text"}` in,
/// `{"id","elements"}` out.
#[derive(Debug)]
pub struct ExternalExtractor {
    session: Mutex<LineSession>,
}

impl ExternalExtractor {
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self> {
        Ok(ExternalExtractor {
            session: Mutex::new(LineSession::spawn(command, timeout)?),
        })
    }
}

impl ElementExtractor for ExternalExtractor {
    fn extract(&self, text: &str) -> Result<Vec<String>> {
        let mut session = self
            .session
            .lock()
            .map_err(|_| Error::Session("extractor session lock poisoned".into()))?;
        let (_, resp): (u64, ExtractResponse) = session.call(&ExtractRequest { text })?;
        Ok(resp.elements)
    }
}

fn admitted(policy: &FirstTokenPolicy, word: &str) -> bool {
    word.bytes().next().is_some_and(|b| policy.admits(b as Symbol + 2))
}

/// Restarts `element` at its first word whose first byte passes `policy`;
/// `None` when no word does.
pub fn first_token_reorder(element: &str, policy: &FirstTokenPolicy) -> Option<String> {
    let element = element.trim();
    if admitted(policy, element) {
        return Some(element.to_string());
    }
    let mut offset = 0;
    for word in element.split_inclusive(char::is_whitespace) {
        let start = offset + (word.len() - word.trim_start().len());
        offset += word.len();
        let rest = &element[start..];
        if admitted(policy, rest) {
            return Some(rest.trim_end().to_string());
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairConfig {
    pub max_query_pairs: usize,
    pub max_element_pairs: usize,
    pub policy: FirstTokenPolicy,
}

impl Default for PairConfig {
    fn default() -> Self {
        PairConfig {
            max_query_pairs: DEFAULT_MAX_QUERY_PAIRS,
            max_element_pairs: DEFAULT_MAX_ELEMENT_PAIRS,
            policy: FirstTokenPolicy::default(),
        }
    }
}

/// Elements of one document after first-token repair, deduplicated, in
/// extraction order.
pub fn document_elements(text: &str, extractor: &dyn ElementExtractor, policy: &FirstTokenPolicy) -> Result<Vec<String>> {
    let mut seen = HashSet::new();
    Ok(extractor
        .extract(text)?
        .iter()
        .filter_map(|e| first_token_reorder(e, policy))
        .filter(|e| seen.insert(e.clone()))
        .collect())
}

/// Per document: the case text paired with each of its first
/// `max_query_pairs` elements, then adjacent elements `(e_i, e_{i+1})` up to
/// `max_element_pairs`.
pub fn build_ssft_pairs(corpus: &Corpus, extractor: &dyn ElementExtractor, cfg: &PairConfig) -> Result<Vec<TrainingPair>> {
    if corpus.is_empty() {
        return Err(Error::Domain("cannot build training pairs from an empty corpus".into()));
    }
    let mut out = Vec::new();
    for doc in corpus.docs() {
        let elements = document_elements(&doc.text, extractor, &cfg.policy)?;
        out.extend(elements.iter().take(cfg.max_query_pairs).map(|e| TrainingPair {
            input: doc.text.clone(),
            target: e.clone(),
            kind: PairKind::QueryElement,
        }));
        out.extend(elements.windows(2).take(cfg.max_element_pairs).map(|w| TrainingPair {
            input: w[0].clone(),
            target: w[1].clone(),
            kind: PairKind::ElementElement,
        }));
    }
    Ok(out)
}

pub fn write_pairs<W: Write>(pairs: &[TrainingPair], mut out: W) -> std::io::Result<()> {
    for p in pairs {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    fn extract(text: &str) -> Vec<String> {
        RuleExtractor::default().extract(text).unwrap()
    }

    #[test]
    fn rule_extraction() {
        assert_eq!(
            extract("On 2024-01-02, the defendant distributed false images. He profited."),
            vec!["the defendant distributed false images", "He profited"]
        );
        assert!(extract("2024 01 02. 3,000,000").is_empty());
        assert_eq!(extract("he lied. he lied; he lied"), vec!["he lied"]);
    }

    #[test]
    fn reorder() {
        let p = FirstTokenPolicy::default();
        assert_eq!(
            first_token_reorder("2024-01-02 defendant distributed images", &p).as_deref(),
            Some("defendant distributed images")
        );
        assert_eq!(first_token_reorder("the defendant fled", &p).as_deref(), Some("the defendant fled"));
        assert_eq!(first_token_reorder("2024 01 02", &p), None);
        assert_eq!(first_token_reorder("x", &FirstTokenPolicy::All).as_deref(), Some("x"));
    }

    fn doc_with(n: usize) -> Corpus {
        let text: Vec<String> = (0..n).map(|i| format!("element number {}", (b'a' + i as u8) as char)).collect();
        Corpus::new(vec![Document::new("d", text.join(". "))]).unwrap()
    }

    #[test]
    fn pair_counts() {
        let cfg = PairConfig::default();
        let count = |pairs: &[TrainingPair], k: PairKind| pairs.iter().filter(|p| p.kind == k).count();
        let three = build_ssft_pairs(&doc_with(3), &RuleExtractor::default(), &cfg).unwrap();
        assert_eq!(count(&three, PairKind::QueryElement), 3);
        assert_eq!(count(&three, PairKind::ElementElement), 2);
        assert_eq!(three[3].input, "element number a");
        assert_eq!(three[3].target, "element number b");
        let twenty = build_ssft_pairs(&doc_with(20), &RuleExtractor::default(), &cfg).unwrap();
        assert_eq!(count(&twenty, PairKind::QueryElement), 15);
        assert_eq!(count(&twenty, PairKind::ElementElement), 5);
    }

    #[test]
    fn no_elements_no_pairs() {
        let c = Corpus::new(vec![Document::new("d", "12. 34")]).unwrap();
        assert!(build_ssft_pairs(&c, &RuleExtractor::default(), &PairConfig::default()).unwrap().is_empty());
        assert!(build_ssft_pairs(&Corpus::default(), &RuleExtractor::default(), &PairConfig::default()).is_err());
    }

    #[test]
    fn jsonl_shape() {
        let pairs = vec![TrainingPair {
            input: "a".into(),
            target: "b".into(),
            kind: PairKind::ElementElement,
        }];
        let mut buf = Vec::new();
        write_pairs(&pairs, &mut buf).unwrap();
        assert_eq!(buf, b"{\"input\":\"a\",\"target\":\"b\",\"kind\":\"element-element\"}\n");
    }

    #[test]
    fn external_extractor() {
        let script = r#"read h; echo '{"ready":true}'; while read l; do id=$(echo "$l" | sed 's/.*"id":\([0-9]*\).*/\1/'); echo "{\"id\":$id,\"elements\":[\"one thing\",\"9 other\"]}"; done"#;
        let ex = ExternalExtractor::spawn(script, Duration::from_secs(5)).unwrap();
        let els = document_elements("ignored", &ex, &FirstTokenPolicy::default()).unwrap();
        assert_eq!(els, vec!["one thing", "other"]);
    }
}
