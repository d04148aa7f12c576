//! FM-index over a [`SymbolSequence`]: BWT, `C` array, `Occ` table, sampled
//! suffix array and the document boundary table.
//!
//! A *reversed* index is built over the body of the sequence read backwards
//! (the terminator stays last). On such an index, appending a symbol to the
//! right of a forward pattern is one [`FmIndex::backward_extend`] step, which
//! is what the span decoder relies on. Positions reported by
//! [`FmIndex::locate`] are always in original coordinates.

mod io;
mod occ;
mod suffix_array;

use std::collections::BTreeSet;

pub use self::io::{FORMAT_VERSION, MAGIC};
pub use self::occ::OCC_BLOCK;
pub use self::suffix_array::{naive_suffix_array, suffix_array};

use self::occ::{OccTable, RankBits};
use crate::corpus::{doc_index_at, Boundary, Symbol, SymbolSequence, ALPHABET_SIZE, TERMINATOR};
use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_RATE: usize = 32;

/// Half-open block of suffix-array rows `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Range {
    pub lo: usize,
    pub hi: usize,
}

impl Range {
    pub fn new(lo: usize, hi: usize) -> Self {
        Range { lo, hi }
    }

    pub fn width(&self) -> usize {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FmIndex {
    bwt: Vec<Symbol>,
    /// `c_array[c]` = symbols smaller than `c`; one extra slot holding `n`.
    c_array: Vec<usize>,
    occ: OccTable,
    /// Rows whose suffix starts at a multiple of `sample_rate`.
    sampled_rows: RankBits,
    sa_samples: Vec<usize>,
    sample_rate: usize,
    boundaries: Vec<Boundary>,
    reversed: bool,
}

impl FmIndex {
    pub fn build(seq: &SymbolSequence, sample_rate: usize, reversed: bool) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Domain("sample_rate must be >= 1".into()));
        }
        let text: Vec<Symbol> = if reversed {
            let body = &seq.symbols()[..seq.len() - 1];
            body.iter().rev().copied().chain([TERMINATOR]).collect()
        } else {
            seq.symbols().to_vec()
        };
        let sa = suffix_array(&text)?;
        let n = text.len();
        let bwt: Vec<Symbol> = sa.iter().map(|&p| text[(p + n - 1) % n]).collect();

        let mut counts = [0usize; ALPHABET_SIZE];
        for &s in &text {
            counts[s as usize] += 1;
        }
        let mut c_array = Vec::with_capacity(ALPHABET_SIZE + 1);
        let mut acc = 0;
        for c in counts {
            c_array.push(acc);
            acc += c;
        }
        c_array.push(acc);

        let occ = OccTable::build(&bwt);
        let sampled_rows = RankBits::from_fn(n, |row| sa[row] % sample_rate == 0);
        let sa_samples = sa.iter().copied().filter(|p| p % sample_rate == 0).collect();

        Ok(FmIndex {
            bwt,
            c_array,
            occ,
            sampled_rows,
            sa_samples,
            sample_rate,
            boundaries: seq.boundaries().to_vec(),
            reversed,
        })
    }

    pub fn len(&self) -> usize {
        self.bwt.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bwt.is_empty()
    }

    pub fn bwt(&self) -> &[Symbol] {
        &self.bwt
    }

    pub fn c_array(&self) -> &[usize] {
        &self.c_array
    }

    pub fn sample_rate(&self) -> usize {
        self.sample_rate
    }

    pub fn is_reversed(&self) -> bool {
        self.reversed
    }

    pub fn boundaries(&self) -> &[Boundary] {
        &self.boundaries
    }

    pub fn num_docs(&self) -> usize {
        self.boundaries.len()
    }

    /// Number of symbols smaller than `c` in the text.
    pub fn c(&self, c: Symbol) -> usize {
        self.c_array[c as usize]
    }

    /// Occurrences of `c` in `bwt[..i]`.
    pub fn occ(&self, c: Symbol, i: usize) -> usize {
        self.occ.occ(&self.bwt, c, i)
    }

    /// Last-to-first mapping.
    pub fn lf(&self, row: usize) -> usize {
        let c = self.bwt[row];
        self.c(c) + self.occ(c, row)
    }

    pub fn full_range(&self) -> Range {
        Range::new(0, self.len())
    }

    /// Number of times `c` occurs in the indexed text.
    pub fn symbol_count(&self, c: Symbol) -> usize {
        self.c_array[c as usize + 1] - self.c_array[c as usize]
    }

    /// Symbols that occur in the text, ascending.
    pub fn present_symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        (0..ALPHABET_SIZE as Symbol).filter(|&c| self.symbol_count(c) > 0)
    }

    /// Rows of the pattern `c·P`, given the rows `r` of `P`.
    pub fn backward_extend(&self, r: Range, c: Symbol) -> Result<Range> {
        if c as usize >= ALPHABET_SIZE {
            return Err(Error::Domain(format!("symbol {c} is outside the alphabet")));
        }
        if r.is_empty() {
            return Ok(Range::new(r.lo, r.lo));
        }
        let base = self.c(c);
        Ok(Range::new(base + self.occ(c, r.lo), base + self.occ(c, r.hi)))
    }

    /// Backward search over the indexed text, consuming `pattern` right to left.
    /// An empty pattern matches every row.
    pub fn match_pattern(&self, pattern: &[Symbol]) -> Result<Range> {
        let mut r = self.full_range();
        for &c in pattern.iter().rev() {
            r = self.backward_extend(r, c)?;
            if r.is_empty() {
                break;
            }
        }
        Ok(r)
    }

    /// Rows of `pattern` as it reads in the original documents, whichever way
    /// the index was built.
    pub fn find(&self, pattern: &[Symbol]) -> Result<Range> {
        if !self.reversed {
            return self.match_pattern(pattern);
        }
        let mut r = self.full_range();
        for &c in pattern {
            r = self.backward_extend(r, c)?;
            if r.is_empty() {
                break;
            }
        }
        Ok(r)
    }

    /// Every symbol `c` for which `backward_extend(r, c)` is non-empty, with
    /// that extended range, in increasing symbol order.
    pub fn range_symbols(&self, r: Range) -> Vec<(Symbol, Range)> {
        if r.is_empty() {
            return Vec::new();
        }
        if r.width() <= 2 * OCC_BLOCK {
            let mut seen: Vec<Symbol> = self.bwt[r.lo..r.hi].to_vec();
            seen.sort_unstable();
            seen.dedup();
            return seen
                .into_iter()
                .map(|c| {
                    let base = self.c(c);
                    (c, Range::new(base + self.occ(c, r.lo), base + self.occ(c, r.hi)))
                })
                .collect();
        }
        let mut lo = [0u32; ALPHABET_SIZE];
        let mut hi = [0u32; ALPHABET_SIZE];
        self.occ.occ_all(&self.bwt, r.lo, &mut lo);
        self.occ.occ_all(&self.bwt, r.hi, &mut hi);
        (0..ALPHABET_SIZE)
            .filter(|&c| hi[c] > lo[c])
            .map(|c| {
                let base = self.c_array[c];
                (
                    c as Symbol,
                    Range::new(base + lo[c] as usize, base + hi[c] as usize),
                )
            })
            .collect()
    }

    /// Text position of the suffix at `row`, in the coordinates of the indexed
    /// (possibly reversed) text.
    pub(crate) fn suffix_position(&self, mut row: usize) -> usize {
        let mut steps = 0;
        while !self.sampled_rows.get(row) {
            row = self.lf(row);
            steps += 1;
        }
        self.sa_samples[self.sampled_rows.rank1(row)] + steps
    }

    fn to_original(&self, p: usize) -> usize {
        let n_body = self.len() - 1;
        if self.reversed && p < n_body {
            n_body - 1 - p
        } else {
            p
        }
    }

    /// Up to `limit` occurrence positions for the rows of `r`, taken in row
    /// order. On a reversed index the position of the match's first indexed
    /// symbol is mapped back with `p ↦ n_body − 1 − p`, i.e. it is the
    /// position of the *last* symbol of the forward pattern.
    pub fn locate(&self, r: Range, limit: usize) -> Vec<usize> {
        (r.lo..r.hi)
            .take(limit)
            .map(|row| self.to_original(self.suffix_position(row)))
            .collect()
    }

    /// Start positions (original coordinates) of a forward pattern of length
    /// `pattern_len` whose rows are `r`.
    pub fn occurrence_starts(&self, r: Range, pattern_len: usize, limit: usize) -> Vec<usize> {
        let located = self.locate(r, limit);
        if self.reversed {
            located
                .into_iter()
                .map(|p| (p + 1).saturating_sub(pattern_len))
                .collect()
        } else {
            located
        }
    }

    /// Index into [`Self::boundaries`] of the document covering `pos`.
    pub fn doc_index_at(&self, pos: usize) -> Option<usize> {
        doc_index_at(&self.boundaries, pos)
    }

    /// Documents of the first `limit` located occurrences.
    pub fn docs_in_range(&self, r: Range, limit: usize) -> Result<BTreeSet<String>> {
        self.locate(r, limit)
            .into_iter()
            .map(|p| {
                self.doc_index_at(p)
                    .map(|i| self.boundaries[i].doc_id.clone())
                    .ok_or_else(|| {
                        Error::Internal(format!("occurrence at position {p} lies outside every document"))
                    })
            })
            .collect()
    }

    /// Reconstructs the indexed text (reversed body if the index is reversed)
    /// by walking LF from the terminator row.
    pub fn extract_text(&self) -> Vec<Symbol> {
        let n = self.len();
        let mut out = vec![TERMINATOR; n];
        let mut row = self.c(TERMINATOR);
        for slot in out[..n - 1].iter_mut().rev() {
            *slot = self.bwt[row];
            row = self.lf(row);
        }
        out
    }
}

/// Inverts a BWT from scratch, without any precomputed index structures.
/// The text's terminator must be [`TERMINATOR`].
pub fn invert_bwt(bwt: &[Symbol]) -> Vec<Symbol> {
    let n = bwt.len();
    let mut counts = vec![0usize; ALPHABET_SIZE];
    let mut rank_at = Vec::with_capacity(n);
    for &s in bwt {
        rank_at.push(counts[s as usize]);
        counts[s as usize] += 1;
    }
    let mut first = vec![0usize; ALPHABET_SIZE];
    let mut acc = 0;
    for (c, &k) in counts.iter().enumerate() {
        first[c] = acc;
        acc += k;
    }
    let mut out = vec![TERMINATOR; n];
    let mut row = first[TERMINATOR as usize];
    for i in (0..n.saturating_sub(1)).rev() {
        let c = bwt[row];
        out[i] = c;
        row = first[c as usize] + rank_at[row];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{concat, tokenize, Corpus, Document};

    fn banana_index(sample_rate: usize) -> FmIndex {
        let mut t = tokenize("banana");
        t.push(TERMINATOR);
        let seq = SymbolSequence::new(t, vec![]).unwrap();
        FmIndex::build(&seq, sample_rate, false).unwrap()
    }

    fn sym(ch: char) -> Symbol {
        ch as Symbol + 2
    }

    fn render(bwt: &[Symbol]) -> String {
        bwt.iter()
            .map(|&s| if s == TERMINATOR { '$' } else { (s - 2) as u8 as char })
            .collect()
    }

    #[test]
    fn banana_bwt_and_c() {
        let idx = banana_index(1);
        assert_eq!(render(idx.bwt()), "annb$aa");
        assert_eq!(idx.c(TERMINATOR), 0);
        assert_eq!(idx.c(sym('a')), 1);
        assert_eq!(idx.c(sym('b')), 4);
        assert_eq!(idx.c(sym('n')), 5);
        assert_eq!(invert_bwt(idx.bwt()), idx.extract_text());
    }

    #[test]
    fn banana_backward_extend() {
        let idx = banana_index(2);
        let a = idx.match_pattern(&tokenize("a")).unwrap();
        assert_eq!(a, Range::new(1, 4));
        let na = idx.backward_extend(a, sym('n')).unwrap();
        assert_eq!(na, Range::new(5, 7));
        assert_eq!(na, idx.match_pattern(&tokenize("na")).unwrap());

        let term = idx.backward_extend(idx.full_range(), TERMINATOR).unwrap();
        assert_eq!(term.width(), 1);

        let empty = Range::new(3, 3);
        assert!(idx.backward_extend(empty, sym('a')).unwrap().is_empty());
        assert!(matches!(idx.backward_extend(a, 300), Err(Error::Domain(_))));
    }

    #[test]
    fn banana_match_and_locate() {
        for rate in [1, 2, 3, 32] {
            let idx = banana_index(rate);
            let ana = idx.match_pattern(&tokenize("ana")).unwrap();
            assert_eq!(ana.width(), 2);
            let mut pos = idx.locate(ana, 10);
            pos.sort();
            assert_eq!(pos, vec![1, 3]);
            assert!(idx.locate(Range::new(2, 2), 10).is_empty());
        }
        let idx = banana_index(4);
        assert!(idx.match_pattern(&tokenize("zz")).unwrap().is_empty());
        assert_eq!(idx.match_pattern(&[]).unwrap(), Range::new(0, 7));
    }

    #[test]
    fn banana_range_symbols() {
        let idx = banana_index(1);
        // rows [1, 4) are "a$", "ana$", "anana$", preceded by n, n, b
        let a = Range::new(1, 4);
        assert_eq!(render(&idx.bwt()[1..4]), "nnb");
        let got = idx.range_symbols(a);
        assert_eq!(
            got,
            vec![
                (sym('b'), idx.match_pattern(&tokenize("ba")).unwrap()),
                (sym('n'), Range::new(5, 7)),
            ]
        );
        assert!(idx.range_symbols(Range::new(4, 4)).is_empty());
        let all: Vec<Symbol> = idx.range_symbols(idx.full_range()).into_iter().map(|(c, _)| c).collect();
        assert_eq!(all, vec![TERMINATOR, sym('a'), sym('b'), sym('n')]);
    }

    fn two_doc_corpus(a: &str, b: &str) -> SymbolSequence {
        concat(&Corpus::new(vec![Document::new("d1", a), Document::new("d2", b)]).unwrap()).unwrap()
    }

    #[test]
    fn docs_in_range_examples() {
        for reversed in [false, true] {
            let idx = FmIndex::build(&two_doc_corpus("ab", "ab"), 2, reversed).unwrap();
            let r = idx.find(&tokenize("ab")).unwrap();
            let docs: Vec<_> = idx.docs_in_range(r, 10).unwrap().into_iter().collect();
            assert_eq!(docs, vec!["d1", "d2"]);

            let idx = FmIndex::build(&two_doc_corpus("abc", "xyz"), 3, reversed).unwrap();
            let r = idx.find(&tokenize("yz")).unwrap();
            let docs: Vec<_> = idx.docs_in_range(r, 10).unwrap().into_iter().collect();
            assert_eq!(docs, vec!["d2"]);
        }
    }

    #[test]
    fn separator_occurrence_is_internal_error() {
        let idx = FmIndex::build(&two_doc_corpus("ab", "cd"), 1, false).unwrap();
        let r = idx.match_pattern(&[0]).unwrap();
        assert!(matches!(idx.docs_in_range(r, 10), Err(Error::Internal(_))));
    }

    #[test]
    fn reversed_locate_reports_original_coordinates() {
        let seq = two_doc_corpus("hello", "yellow");
        let idx = FmIndex::build(&seq, 3, true).unwrap();
        let pat = tokenize("ello");
        let r = idx.find(&pat).unwrap();
        assert_eq!(r.width(), 2);
        // last symbol of "ello" is at 4 in d1 and 6+4 = 10 in d2
        let mut last = idx.locate(r, 10);
        last.sort();
        assert_eq!(last, vec![4, 10]);
        let mut starts = idx.occurrence_starts(r, pat.len(), 10);
        starts.sort();
        assert_eq!(starts, vec![1, 7]);
    }

    #[test]
    fn reversed_build_keeps_terminator_last() {
        let seq = two_doc_corpus("ab", "c");
        let idx = FmIndex::build(&seq, 1, true).unwrap();
        let body: Vec<Symbol> = seq.symbols()[..seq.len() - 1].iter().rev().copied().collect();
        let mut expected = body;
        expected.push(TERMINATOR);
        assert_eq!(idx.extract_text(), expected);
    }

    #[test]
    fn zero_sample_rate_rejected() {
        let seq = two_doc_corpus("ab", "c");
        assert!(FmIndex::build(&seq, 0, false).is_err());
    }
}
