//! Index-pair designs for incomplete U-statistics.
//!
//! A design is an explicit, duplicate-free list of pairs `(i, j)` with
//! `i < j` over `0..n_items`. The statistic sums the pair kernel over this
//! list, so the design size directly sets the cost of one test. All three
//! pair kernels are symmetric under swapping their two indices, so each
//! unordered pair is stored once.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::rng::STREAM_DESIGN;
use crate::{Error, Result};

/// How a design was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// First `r` sub-diagonals of the index matrix.
    SubDiagonal { r: usize },
    /// `l` pairs sampled uniformly without replacement.
    RandomNoReplacement { l: usize, seed: u64 },
    /// Every unordered pair.
    Full,
    /// Loaded from a CSV dump; construction unknown.
    Imported,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub n_items: usize,
    pub pairs: Vec<(u32, u32)>,
    pub provenance: Provenance,
}

impl Design {
    /// Number of pairs, `L = |D|`.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Writes the pair list as a two-column CSV (`i,j` header).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["i", "j"])?;
        for &(i, j) in &self.pairs {
            wtr.write_record([i.to_string(), j.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads a pair list written by [`Design::write_csv`], validating the
    /// design invariants against `n_items`.
    pub fn read_csv<R: Read>(n_items: usize, reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut pairs = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::RaggedRows {
                    row,
                    got: record.len(),
                    expected: 2,
                });
            }
            let parse = |field: &str| -> Result<u32> {
                field.parse().map_err(|_| Error::MalformedNumber {
                    row,
                    field: field.to_string(),
                })
            };
            pairs.push((parse(&record[0])?, parse(&record[1])?));
        }
        let design = Design {
            n_items,
            pairs,
            provenance: Provenance::Imported,
        };
        design.validate()?;
        Ok(design)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::with_capacity(self.pairs.len());
        for &(i, j) in &self.pairs {
            if i >= j || (j as usize) >= self.n_items {
                return Err(Error::InvalidDesign(format!(
                    "pair ({i}, {j}) invalid for n_items = {}",
                    self.n_items
                )));
            }
            if !seen.insert((i, j)) {
                return Err(Error::InvalidDesign(format!("duplicate pair ({i}, {j})")));
            }
        }
        Ok(())
    }
}

fn check_n_items(n_items: usize) -> Result<()> {
    if n_items < 2 {
        return Err(Error::InvalidDesign(format!(
            "need at least 2 items, got {n_items}"
        )));
    }
    if n_items > u32::MAX as usize {
        return Err(Error::InvalidDesign(format!("{n_items} items exceed u32")));
    }
    Ok(())
}

/// Total number of unordered pairs over `n_items`.
pub fn total_pairs(n_items: usize) -> usize {
    n_items * (n_items - 1) / 2
}

/// The first `r` sub-diagonals of the `n × n` index matrix: pairs
/// `(i, i + s)` for `s = 1..=r`, enumerated by sub-diagonal then by row so
/// cached kernel values align reproducibly with the design.
///
/// The resulting size is `Σ_{s=1..r} (n - s) = r·n - r(r+1)/2`.
pub fn subdiagonal_design(n_items: usize, r: usize) -> Result<Design> {
    check_n_items(n_items)?;
    if r < 1 || r > n_items - 1 {
        return Err(Error::InvalidDesign(format!(
            "R = {r} outside [1, {}]",
            n_items - 1
        )));
    }
    let size: usize = (1..=r).map(|s| n_items - s).sum();
    let mut pairs = Vec::with_capacity(size);
    for s in 1..=r {
        for i in 0..(n_items - s) {
            pairs.push((i as u32, (i + s) as u32));
        }
    }
    Ok(Design {
        n_items,
        pairs,
        provenance: Provenance::SubDiagonal { r },
    })
}

/// `l` distinct unordered pairs sampled uniformly without replacement,
/// deterministically from `seed`.
pub fn random_design(n_items: usize, l: usize, seed: u64) -> Result<Design> {
    check_n_items(n_items)?;
    let total = total_pairs(n_items);
    if l == 0 || l > total {
        return Err(Error::InvalidDesign(format!(
            "L = {l} outside [1, {total}] for n_items = {n_items}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_DESIGN);
    let chosen = rand::seq::index::sample(&mut rng, total, l);
    let mut pairs: Vec<(u32, u32)> = chosen.iter().map(|t| unrank_pair(n_items, t)).collect();
    // deterministic storage order regardless of sampler internals
    pairs.sort_unstable();
    Ok(Design {
        n_items,
        pairs,
        provenance: Provenance::RandomNoReplacement { l, seed },
    })
}

/// Every unordered pair `i < j`.
pub fn full_design(n_items: usize) -> Result<Design> {
    check_n_items(n_items)?;
    let mut pairs = Vec::with_capacity(total_pairs(n_items));
    for i in 0..n_items {
        for j in (i + 1)..n_items {
            pairs.push((i as u32, j as u32));
        }
    }
    Ok(Design {
        n_items,
        pairs,
        provenance: Provenance::Full,
    })
}

/// Maps a linear index in `0..total_pairs(n)` to the pair at that position
/// of the lexicographic enumeration `(0,1), (0,2), ..., (n-2, n-1)`.
fn unrank_pair(n: usize, t: usize) -> (u32, u32) {
    // binary search for the largest row i with cumulative(n, i) <= t
    let mut lo = 0usize;
    let mut hi = n - 1;
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if cumulative(n, mid) <= t {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let i = lo;
    let j = i + 1 + (t - cumulative(n, i));
    (i as u32, j as u32)
}

/// Number of pairs whose first index is `< i`.
fn cumulative(n: usize, i: usize) -> usize {
    // Σ_{a=0..i-1} (n - 1 - a) = i(n-1) - i(i-1)/2
    i * (n - 1) - i * i.saturating_sub(1) / 2
}
