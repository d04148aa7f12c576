use crate::corpus::{Symbol, ALPHABET_SIZE};

/// Distance between stored rank checkpoints.
pub const OCC_BLOCK: usize = 128;

/// `Occ(c, i)` over a BWT: absolute counts every [`OCC_BLOCK`] positions,
/// finished by a linear scan from the nearer checkpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct OccTable {
    /// Row-major `[checkpoint][symbol]`, `len / OCC_BLOCK + 1` rows.
    checkpoints: Vec<u32>,
}

impl OccTable {
    pub fn build(bwt: &[Symbol]) -> Self {
        let rows = bwt.len() / OCC_BLOCK + 1;
        let mut checkpoints = Vec::with_capacity(rows * ALPHABET_SIZE);
        let mut running = [0u32; ALPHABET_SIZE];
        for (i, &s) in bwt.iter().enumerate() {
            if i % OCC_BLOCK == 0 {
                checkpoints.extend_from_slice(&running);
            }
            running[s as usize] += 1;
        }
        if bwt.len().is_multiple_of(OCC_BLOCK) {
            checkpoints.extend_from_slice(&running);
        }
        debug_assert_eq!(checkpoints.len(), rows * ALPHABET_SIZE);
        OccTable { checkpoints }
    }

    pub fn from_raw(checkpoints: Vec<u32>, bwt_len: usize) -> Option<Self> {
        (checkpoints.len() == (bwt_len / OCC_BLOCK + 1) * ALPHABET_SIZE)
            .then_some(OccTable { checkpoints })
    }

    pub fn raw(&self) -> &[u32] {
        &self.checkpoints
    }

    /// Occurrences of `c` in `bwt[..i]`.
    #[inline]
    pub fn occ(&self, bwt: &[Symbol], c: Symbol, i: usize) -> usize {
        let block = i / OCC_BLOCK;
        let next = (block + 1) * OCC_BLOCK;
        if i - block * OCC_BLOCK > OCC_BLOCK / 2 && next <= bwt.len() {
            let base = self.checkpoints[(block + 1) * ALPHABET_SIZE + c as usize] as usize;
            return base - bwt[i..next].iter().filter(|&&s| s == c).count();
        }
        let base = self.checkpoints[block * ALPHABET_SIZE + c as usize] as usize;
        base + bwt[block * OCC_BLOCK..i].iter().filter(|&&s| s == c).count()
    }

    /// Occurrences of every symbol in `bwt[..i]`.
    pub fn occ_all(&self, bwt: &[Symbol], i: usize, out: &mut [u32; ALPHABET_SIZE]) {
        let block = i / OCC_BLOCK;
        out.copy_from_slice(&self.checkpoints[block * ALPHABET_SIZE..(block + 1) * ALPHABET_SIZE]);
        for &s in &bwt[block * OCC_BLOCK..i] {
            out[s as usize] += 1;
        }
    }
}

/// Plain bit vector with constant-time rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct RankBits {
    words: Vec<u64>,
    /// Ones before each word.
    prefix: Vec<u32>,
    len: usize,
}

impl RankBits {
    pub fn from_fn(len: usize, mut bit: impl FnMut(usize) -> bool) -> Self {
        let mut words = vec![0u64; len.div_ceil(64)];
        for i in 0..len {
            if bit(i) {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        Self::from_words(words, len)
    }

    pub fn from_words(words: Vec<u64>, len: usize) -> Self {
        let mut prefix = Vec::with_capacity(words.len() + 1);
        let mut acc = 0u32;
        for w in &words {
            prefix.push(acc);
            acc += w.count_ones();
        }
        prefix.push(acc);
        RankBits { words, prefix, len }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn count_ones(&self) -> usize {
        self.prefix[self.words.len()] as usize
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    /// Ones in positions `[0, i)`.
    #[inline]
    pub fn rank1(&self, i: usize) -> usize {
        let w = i / 64;
        let r = i % 64;
        let partial = if r == 0 {
            0
        } else {
            (self.words[w] & ((1u64 << r) - 1)).count_ones()
        };
        (self.prefix[w] + partial) as usize
    }
}
