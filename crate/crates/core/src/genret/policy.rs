use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;

use crate::corpus::Symbol;
use crate::error::{Error, Result};
use crate::fmindex::FmIndex;

/// Which symbols may open a generated span.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum FirstTokenPolicy {
    /// Any textual symbol.
    All,
    /// No ASCII digits, punctuation or whitespace, so spans do not open on
    /// dates, numbers or layout.
    #[default]
    Stoplist,
    /// Only the listed first symbols.
    Allowlist(BTreeSet<Symbol>),
}

/// Bytes excluded by [`FirstTokenPolicy::Stoplist`].
pub fn is_stop_byte(b: u8) -> bool {
    b.is_ascii_digit() || b.is_ascii_punctuation() || b.is_ascii_whitespace() || b == 0x0b
}

impl FirstTokenPolicy {
    pub fn admits(&self, symbol: Symbol) -> bool {
        if !(2..258).contains(&symbol) {
            return false;
        }
        match self {
            FirstTokenPolicy::All => true,
            FirstTokenPolicy::Stoplist => !is_stop_byte((symbol - 2) as u8),
            FirstTokenPolicy::Allowlist(set) => set.contains(&symbol),
        }
    }

    /// Reads one element per line and keeps the first symbol of each.
    pub fn allowlist_from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read allowlist {}: {e}", path.display())))?;
        Ok(FirstTokenPolicy::Allowlist(
            text.lines()
                .filter_map(|l| l.trim().bytes().next())
                .map(|b| Symbol::from(b) + 2)
                .collect(),
        ))
    }

    /// Parses `all`, `stoplist` or `allowlist:PATH`.
    pub fn parse(spec: &str) -> Result<Self> {
        match spec {
            "all" => Ok(FirstTokenPolicy::All),
            "stoplist" => Ok(FirstTokenPolicy::Stoplist),
            _ => match spec.strip_prefix("allowlist:") {
                Some(path) => Self::allowlist_from_file(path),
                None => Err(Error::Config(format!(
                    "unknown first-token policy {spec:?} (expected all, stoplist or allowlist:FILE)"
                ))),
            },
        }
    }
}

impl fmt::Display for FirstTokenPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FirstTokenPolicy::All => f.write_str("all"),
            FirstTokenPolicy::Stoplist => f.write_str("stoplist"),
            FirstTokenPolicy::Allowlist(set) => write!(f, "allowlist({} symbols)", set.len()),
        }
    }
}

/// Symbols occurring in the index that the policy lets open a span.
pub fn first_token_candidates(idx: &FmIndex, policy: &FirstTokenPolicy) -> BTreeSet<Symbol> {
    idx.present_symbols().filter(|&s| policy.admits(s)).collect()
}
