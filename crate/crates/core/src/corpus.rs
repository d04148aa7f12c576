//! Document ingestion, byte-level tokenization and corpus concatenation.
//!
//! Every byte `b` of a document maps to the symbol `b + 2`. Symbol `0`
//! separates documents and symbol `1` terminates the whole sequence, so a
//! pattern made of textual symbols can never straddle two documents.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Symbol = u16;

pub const SEPARATOR: Symbol = 0;
pub const TERMINATOR: Symbol = 1;
/// Number of distinct symbols: two control symbols plus 256 byte values.
pub const ALPHABET_SIZE: usize = 258;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub option: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub charges: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub statutes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<Factor>>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            doc_id: doc_id.into(),
            text: text.into(),
            charges: Vec::new(),
            statutes: Vec::new(),
            factors: None,
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.doc_id.is_empty() {
            return Err("doc_id must be non-empty".into());
        }
        if self.text.is_empty() {
            return Err(format!("document {:?} has empty text", self.doc_id));
        }
        if let Some(f) = self.factors.iter().flatten().find(|f| f.option < 1) {
            return Err(format!(
                "document {:?}: factor {:?} has option {} (must be >= 1)",
                self.doc_id, f.name, f.option
            ));
        }
        Ok(())
    }
}

/// An ordered collection of documents with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    docs: Vec<Document>,
}

impl Corpus {
    pub fn new(docs: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(docs.len());
        for doc in &docs {
            doc.validate().map_err(Error::Integrity)?;
            if !seen.insert(doc.doc_id.as_str()) {
                return Err(Error::Integrity(format!("duplicate doc_id {:?}", doc.doc_id)));
            }
        }
        Ok(Corpus { docs })
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.docs.iter().find(|d| d.doc_id == doc_id)
    }

    /// Writes the corpus back out as JSON lines in canonical field order.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for doc in &self.docs {
            serde_json::to_writer(&mut out, doc)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Reads a JSON-lines corpus file. Blank lines are skipped.
pub fn ingest_jsonl(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        doc.validate().map_err(|message| Error::Parse {
            line: i + 1,
            message,
        })?;
        if !seen.insert(doc.doc_id.clone()) {
            return Err(Error::Integrity(format!(
                "line {}: duplicate doc_id {:?}",
                i + 1,
                doc.doc_id
            )));
        }
        docs.push(doc);
    }
    Ok(Corpus { docs })
}

pub fn tokenize(text: &str) -> Vec<Symbol> {
    text.bytes().map(|b| Symbol::from(b) + 2).collect()
}

/// Maps textual symbols back to bytes.
pub fn symbols_to_bytes(symbols: &[Symbol]) -> Result<Vec<u8>> {
    symbols
        .iter()
        .map(|&s| {
            if (2..ALPHABET_SIZE as Symbol).contains(&s) {
                Ok((s - 2) as u8)
            } else {
                Err(Error::Domain(format!("symbol {s} is not a textual symbol")))
            }
        })
        .collect()
}

/// Inverse of [`tokenize`]. Byte sequences that are not valid UTF-8 (a span
/// cut inside a multi-byte character) are decoded lossily.
pub fn detokenize(symbols: &[Symbol]) -> Result<String> {
    let bytes = symbols_to_bytes(symbols)?;
    Ok(match String::from_utf8(bytes) {
        Ok(s) => s,
        Err(e) => String::from_utf8_lossy(e.as_bytes()).into_owned(),
    })
}

/// Half-open span `[start, end)` of one document inside a [`SymbolSequence`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Boundary {
    pub start: usize,
    pub end: usize,
    pub doc_id: String,
}

/// The indexable text: all documents, separated and terminated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolSequence {
    symbols: Vec<Symbol>,
    boundaries: Vec<Boundary>,
}

impl SymbolSequence {
    /// Wraps a raw symbol array. The array must end with the only occurrence
    /// of [`TERMINATOR`]; boundaries must be sorted and disjoint.
    pub fn new(symbols: Vec<Symbol>, boundaries: Vec<Boundary>) -> Result<Self> {
        check_terminated(&symbols)?;
        let mut prev_end = 0;
        for b in &boundaries {
            if b.start < prev_end || b.start > b.end || b.end >= symbols.len() {
                return Err(Error::Domain(format!(
                    "boundary ({}, {}, {:?}) is out of order or out of range",
                    b.start, b.end, b.doc_id
                )));
            }
            prev_end = b.end;
        }
        Ok(SymbolSequence {
            symbols,
            boundaries,
        })
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn boundaries(&self) -> &[Boundary] {
        &self.boundaries
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn into_parts(self) -> (Vec<Symbol>, Vec<Boundary>) {
        (self.symbols, self.boundaries)
    }

    /// Index into [`Self::boundaries`] of the document covering `pos`.
    pub fn doc_index_at(&self, pos: usize) -> Option<usize> {
        doc_index_at(&self.boundaries, pos)
    }
}

pub(crate) fn doc_index_at(boundaries: &[Boundary], pos: usize) -> Option<usize> {
    let i = boundaries.partition_point(|b| b.end <= pos);
    boundaries
        .get(i)
        .filter(|b| b.start <= pos && pos < b.end)
        .map(|_| i)
}

pub(crate) fn check_terminated(symbols: &[Symbol]) -> Result<()> {
    match symbols.last() {
        Some(&TERMINATOR) => {}
        _ => {
            return Err(Error::Domain(
                "sequence must end with the terminator symbol".into(),
            ))
        }
    }
    if let Some(pos) = symbols[..symbols.len() - 1]
        .iter()
        .position(|&s| s == TERMINATOR || s as usize >= ALPHABET_SIZE)
    {
        return Err(Error::Domain(format!(
            "symbol {} at position {pos} is not allowed before the terminator",
            symbols[pos]
        )));
    }
    Ok(())
}

/// Concatenates `tok(d1) 0 tok(d2) 0 ... tok(dk) 0 1`.
pub fn concat(corpus: &Corpus) -> Result<SymbolSequence> {
    if corpus.is_empty() {
        return Err(Error::Domain("cannot concatenate an empty corpus".into()));
    }
    let total: usize = corpus.docs.iter().map(|d| d.text.len() + 1).sum::<usize>() + 1;
    let mut symbols = Vec::with_capacity(total);
    let mut boundaries = Vec::with_capacity(corpus.len());
    for doc in &corpus.docs {
        let start = symbols.len();
        symbols.extend(doc.text.bytes().map(|b| Symbol::from(b) + 2));
        boundaries.push(Boundary {
            start,
            end: symbols.len(),
            doc_id: doc.doc_id.clone(),
        });
        symbols.push(SEPARATOR);
    }
    symbols.push(TERMINATOR);
    Ok(SymbolSequence {
        symbols,
        boundaries,
    })
}
