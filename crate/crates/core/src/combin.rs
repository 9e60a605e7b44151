//! Binomials with the zero-outside-range convention and k-subset enumeration
//! over 64-bit masks.

use crate::model::IndexSet;

/// `C(n, k)`, defined as 0 when `n < 0`, `k < 0` or `n < k`.
pub fn binom(n: i64, k: i64) -> i128 {
    if n < 0 || k < 0 || n < k {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: i128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as i128 / (i + 1) as i128;
    }
    acc
}

/// `max(0, x)`.
pub fn pos(x: i128) -> i128 {
    x.max(0)
}

/// All `size`-subsets of `elements`, in lexicographic order of the
/// ascending element sequence.
pub fn combinations(elements: &[usize], size: usize) -> Vec<IndexSet> {
    let n = elements.len();
    if size > n {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(binom(n as i64, size as i64) as usize);
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        out.push(idx.iter().map(|&i| elements[i]).collect());
        // advance the rightmost index that still has room
        let mut pivot = size;
        loop {
            if pivot == 0 {
                return out;
            }
            pivot -= 1;
            if idx[pivot] < pivot + n - size {
                break;
            }
        }
        idx[pivot] += 1;
        for j in pivot + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Iterates every `size`-subset of `{1, ..., universe}` as a bitmask
/// (Gosper's hack), in increasing numeric order of the mask.
pub struct KSubsets {
    next: Option<u64>,
    limit: u64,
}

impl KSubsets {
    pub fn new(universe: usize, size: usize) -> Self {
        assert!(universe <= 63, "KSubsets supports at most 63 elements");
        let limit = 1u64 << universe;
        let next = if size > universe {
            None
        } else {
            Some((1u64 << size) - 1)
        };
        Self { next, limit }
    }
}

impl Iterator for KSubsets {
    type Item = IndexSet;

    fn next(&mut self) -> Option<IndexSet> {
        let current = self.next?;
        if current >= self.limit {
            self.next = None;
            return None;
        }
        self.next = if current == 0 {
            None
        } else {
            let lowest = current & current.wrapping_neg();
            let ripple = current + lowest;
            let ones = ((current ^ ripple) >> 2) / lowest;
            Some(ripple | ones)
        };
        Some(IndexSet::from_bits(current))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binom_follows_zero_convention() {
        assert_eq!(binom(5, 2), 10);
        assert_eq!(binom(7, 4), 35);
        assert_eq!(binom(0, 0), 1);
        assert_eq!(binom(3, 5), 0);
        assert_eq!(binom(-1, 0), 0);
        assert_eq!(binom(4, -1), 0);
        assert_eq!(binom(64, 32), 1_832_624_140_942_590_534);
    }

    #[test]
    fn combinations_are_lexicographic() {
        let got: Vec<String> = combinations(&[2, 4, 5, 7], 2)
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(got, ["2,4", "2,5", "2,7", "4,5", "4,7", "5,7"]);
        assert_eq!(combinations(&[1, 2, 3], 0).len(), 1);
        assert!(combinations(&[1, 2], 3).is_empty());
        assert_eq!(combinations(&[1, 2, 3], 3).len(), 1);
    }

    #[test]
    fn k_subsets_counts_match_binomials() {
        for n in 0..=12usize {
            for k in 0..=n + 1 {
                let all: Vec<_> = KSubsets::new(n, k).collect();
                assert_eq!(all.len() as i128, binom(n as i64, k as i64), "n={n} k={k}");
                assert!(all.iter().all(|s| s.len() == k));
                assert!(all.windows(2).all(|w| w[0].bits() < w[1].bits()));
            }
        }
    }
}
