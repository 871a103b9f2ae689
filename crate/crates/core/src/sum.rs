//! Accurate summation for long accumulations.
//!
//! Bootstrap thresholds compare sums that differ only in sign patterns, so
//! the summation error must stay well below the spacing between replicates.
//! Sums run in fixed-size chunks accumulated naively, with the chunk totals
//! combined by a binary-counter pairwise reduction; both the plain statistic
//! and the sign-flipped replicates use this same structure, which keeps the
//! all-plus-one replicate bit-identical to the original statistic.

const CHUNK: usize = 1024;

/// Streaming pairwise accumulator (binary-counter scheme).
#[derive(Debug, Default)]
pub struct PairwiseSum {
    levels: Vec<f64>,
    count: u64,
}

impl PairwiseSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, value: f64) {
        let mut carry = value;
        let mut n = self.count;
        let mut level = 0;
        while n & 1 == 1 {
            carry += self.levels[level];
            level += 1;
            n >>= 1;
        }
        if level == self.levels.len() {
            self.levels.push(carry);
        } else {
            self.levels[level] = carry;
        }
        self.count += 1;
    }

    pub fn sum(&self) -> f64 {
        let mut total = 0.0;
        let mut n = self.count;
        for &v in &self.levels {
            if n & 1 == 1 {
                total += v;
            }
            n >>= 1;
        }
        total
    }
}

/// Sums `values[t]` over the index list, chunked pairwise.
pub fn design_sum(values: &[f64]) -> f64 {
    let mut acc = PairwiseSum::new();
    for chunk in values.chunks(CHUNK) {
        let mut s = 0.0;
        for &v in chunk {
            s += v;
        }
        acc.push(s);
    }
    acc.sum()
}

/// Sums `signs[i] * signs[j] * values[t]` over aligned pairs, with the same
/// chunking as [`design_sum`] so an all-ones sign vector reproduces it
/// exactly.
pub fn signed_design_sum(values: &[f64], pairs: &[(u32, u32)], signs: &[f64]) -> f64 {
    debug_assert_eq!(values.len(), pairs.len());
    let mut acc = PairwiseSum::new();
    for (chunk_v, chunk_p) in values.chunks(CHUNK).zip(pairs.chunks(CHUNK)) {
        let mut s = 0.0;
        for (&v, &(i, j)) in chunk_v.iter().zip(chunk_p) {
            s += signs[i as usize] * signs[j as usize] * v;
        }
        acc.push(s);
    }
    acc.sum()
}
