use crate::corpus::{check_terminated, Symbol, ALPHABET_SIZE};
use crate::error::Result;

/// Builds the suffix array of a terminated symbol sequence by prefix doubling
/// with counting sorts, `O(n log n)`.
///
/// The terminator is unique and final, so the order of cyclic rotations equals
/// the order of suffixes and the cyclic formulation can be used directly.
pub fn suffix_array(text: &[Symbol]) -> Result<Vec<usize>> {
    check_terminated(text)?;
    let n = text.len();
    let mut sa = vec![0usize; n];
    let mut class = vec![0usize; n];
    let mut cnt = vec![0usize; ALPHABET_SIZE.max(n)];

    for &s in text {
        cnt[s as usize] += 1;
    }
    for i in 1..ALPHABET_SIZE {
        cnt[i] += cnt[i - 1];
    }
    for i in (0..n).rev() {
        let s = text[i] as usize;
        cnt[s] -= 1;
        sa[cnt[s]] = i;
    }
    let mut classes = 1;
    for i in 1..n {
        if text[sa[i]] != text[sa[i - 1]] {
            classes += 1;
        }
        class[sa[i]] = classes - 1;
    }

    let mut shifted = vec![0usize; n];
    let mut next_class = vec![0usize; n];
    let mut k = 1;
    while classes < n {
        // Rotations sorted by their second half, i.e. by class[i + k].
        for (dst, &p) in shifted.iter_mut().zip(&sa) {
            *dst = (p + n - k) % n;
        }
        cnt[..classes].fill(0);
        for &p in &shifted {
            cnt[class[p]] += 1;
        }
        for i in 1..classes {
            cnt[i] += cnt[i - 1];
        }
        for &p in shifted.iter().rev() {
            let c = class[p];
            cnt[c] -= 1;
            sa[cnt[c]] = p;
        }

        next_class[sa[0]] = 0;
        classes = 1;
        for i in 1..n {
            let cur = (class[sa[i]], class[(sa[i] + k) % n]);
            let prev = (class[sa[i - 1]], class[(sa[i - 1] + k) % n]);
            if cur != prev {
                classes += 1;
            }
            next_class[sa[i]] = classes - 1;
        }
        std::mem::swap(&mut class, &mut next_class);
        k <<= 1;
    }
    Ok(sa)
}

/// Reference construction: sort all suffixes with slice comparison.
pub fn naive_suffix_array(text: &[Symbol]) -> Vec<usize> {
    let mut sa: Vec<usize> = (0..text.len()).collect();
    sa.sort_by(|&a, &b| text[a..].cmp(&text[b..]));
    sa
}
