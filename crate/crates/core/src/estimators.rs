//! Pairing of raw samples, incomplete and complete U-statistics, and
//! wild-bootstrap replicates.
//!
//! All three testing problems reduce to the same second-order form: a list
//! of `n_items` abstract items and a symmetric pair kernel `h(i, j)`. The
//! incomplete statistic averages `h` over the pairs of a [`Design`]; the
//! wild bootstrap multiplies each cached `h` value by `ε_i ε_j` for
//! Rademacher signs, so replicates cost no new kernel evaluations.

use crate::design::Design;
use crate::kernel::{h_mmd_unchecked, stein_kernel_precomputed, KernelSpec, ScoreModel};
use crate::rng::{rademacher_signs, stream_rng, STREAM_WILD_QUANTILE};
use crate::sum::{design_sum, signed_design_sum, PairwiseSum};
use crate::{Error, Result, SampleMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    TwoSample,
    Independence,
    GoodnessOfFit,
}

/// Samples paired into second-order form: an item count plus a bound
/// evaluator from an index pair to the h-kernel value for that pair.
pub struct PairedData<'a> {
    problem: Problem,
    n_items: usize,
    eval: Box<dyn Fn(usize, usize) -> f64 + 'a>,
}

impl std::fmt::Debug for PairedData<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PairedData")
            .field("problem", &self.problem)
            .field("n_items", &self.n_items)
            .finish()
    }
}

impl<'a> PairedData<'a> {
    /// Wraps an arbitrary symmetric pair evaluator. Mostly useful for
    /// custom kernels and instrumentation.
    pub fn from_fn<F>(problem: Problem, n_items: usize, eval: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> f64 + 'a,
    {
        if n_items < 2 {
            return Err(Error::InsufficientSamples {
                context: "paired data",
                needed: 2,
                got: n_items,
            });
        }
        Ok(Self {
            problem,
            n_items,
            eval: Box::new(eval),
        })
    }

    pub fn problem(&self) -> Problem {
        self.problem
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    /// h-kernel value for the item pair `(i, j)`.
    pub fn h(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.n_items && j < self.n_items);
        (self.eval)(i, j)
    }
}

/// Two-sample pairing: item `i` is `(X_i, Y_i)` and the pair kernel is
/// `h_mmd(X_i, X_j; Y_i, Y_j)`. With unbalanced inputs the larger sample is
/// truncated to `min(m, n)` so indices stay aligned.
pub fn pair_two_sample<'a>(
    x: &'a SampleMatrix,
    y: &'a SampleMatrix,
    spec: &'a KernelSpec,
) -> Result<PairedData<'a>> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    if spec.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: spec.dim(),
        });
    }
    let m = x.n_rows();
    let n = y.n_rows();
    if m < 2 || n < 2 {
        return Err(Error::InsufficientSamples {
            context: "two-sample pairing",
            needed: 2,
            got: m.min(n),
        });
    }
    let n_items = m.min(n);
    PairedData::from_fn(Problem::TwoSample, n_items, move |i, j| {
        h_mmd_unchecked(spec, x.row(i), x.row(j), y.row(i), y.row(j))
    })
}

/// Independence pairing: the sample of `N` pairs is split in half and item
/// `i` is `(Z_i, Z_{i + N/2})`; for odd `N` the last sample is unused.
pub fn pair_independence<'a>(
    z: &'a SampleMatrix,
    d_x: usize,
    kspec: &'a KernelSpec,
    lspec: &'a KernelSpec,
) -> Result<PairedData<'a>> {
    let n = z.n_rows();
    if n < 4 {
        return Err(Error::InsufficientSamples {
            context: "independence pairing",
            needed: 4,
            got: n,
        });
    }
    if d_x == 0 || d_x >= z.dim() {
        return Err(Error::InvalidConfig(format!(
            "d_x = {d_x} must split {}-dimensional samples into two nonempty parts",
            z.dim()
        )));
    }
    let d_y = z.dim() - d_x;
    if kspec.dim() != d_x {
        return Err(Error::DimensionMismatch {
            expected: d_x,
            got: kspec.dim(),
        });
    }
    if lspec.dim() != d_y {
        return Err(Error::DimensionMismatch {
            expected: d_y,
            got: lspec.dim(),
        });
    }
    let half = n / 2;
    PairedData::from_fn(Problem::Independence, half, move |i, j| {
        let (x1, y1) = z.split_row(i, d_x);
        let (x2, y2) = z.split_row(j, d_x);
        let (x3, y3) = z.split_row(i + half, d_x);
        let (x4, y4) = z.split_row(j + half, d_x);
        0.25 * h_mmd_unchecked(kspec, x1, x2, x3, x4) * h_mmd_unchecked(lspec, y1, y2, y3, y4)
    })
}

/// Goodness-of-fit pairing: item `i` is `Z_i` and the pair kernel is the
/// Stein kernel. Scores are evaluated once per sample up front.
pub fn pair_gof<'a>(
    z: &'a SampleMatrix,
    spec: &'a KernelSpec,
    model: &'a ScoreModel,
) -> Result<PairedData<'a>> {
    if model.dim() != z.dim() || spec.dim() != z.dim() {
        return Err(Error::DimensionMismatch {
            expected: z.dim(),
            got: if model.dim() != z.dim() {
                model.dim()
            } else {
                spec.dim()
            },
        });
    }
    let n = z.n_rows();
    if n < 2 {
        return Err(Error::InsufficientSamples {
            context: "goodness-of-fit pairing",
            needed: 2,
            got: n,
        });
    }
    let mut scores = SampleMatrix::zeros(n, z.dim());
    for i in 0..n {
        model.score_into(z.row(i), scores.row_mut(i));
    }
    PairedData::from_fn(Problem::GoodnessOfFit, n, move |i, j| {
        stein_kernel_precomputed(spec, z.row(i), z.row(j), scores.row(i), scores.row(j))
    })
}

/// Kernel values evaluated once per design pair, aligned index-wise with
/// the design's pair list. Bootstrap replicates reuse these values.
#[derive(Debug)]
pub struct HValueCache<'d> {
    pub design: &'d Design,
    pub values: Vec<f64>,
}

/// Evaluates `h` once for every pair of the design: Θ(L) kernel
/// evaluations.
pub fn cache_h_values<'d>(data: &PairedData<'_>, design: &'d Design) -> Result<HValueCache<'d>> {
    if design.n_items != data.n_items() {
        return Err(Error::DimensionMismatch {
            expected: data.n_items(),
            got: design.n_items,
        });
    }
    let values = design
        .pairs
        .iter()
        .map(|&(i, j)| data.h(i as usize, j as usize))
        .collect();
    Ok(HValueCache { design, values })
}

/// The incomplete U-statistic: the mean of the cached h values.
pub fn incomplete_statistic(cache: &HValueCache<'_>) -> Result<f64> {
    if cache.values.is_empty() {
        return Err(Error::InvalidDesign("empty design".into()));
    }
    Ok(design_sum(&cache.values) / cache.values.len() as f64)
}

/// One wild-bootstrap replicate with an explicit sign vector:
/// `(1/L) Σ_{(i,j)∈D} ε_i ε_j h(i, j)`.
///
/// An all-(+1) or all-(-1) sign vector reproduces the incomplete statistic
/// bit for bit.
pub fn wild_bootstrap_statistic(cache: &HValueCache<'_>, signs: &[f64]) -> Result<f64> {
    if cache.values.is_empty() {
        return Err(Error::InvalidDesign("empty design".into()));
    }
    if signs.len() != cache.design.n_items {
        return Err(Error::DimensionMismatch {
            expected: cache.design.n_items,
            got: signs.len(),
        });
    }
    Ok(signed_design_sum(&cache.values, &cache.design.pairs, signs) / cache.values.len() as f64)
}

/// `b` wild-bootstrap replicates. Replicate `b` draws its Rademacher
/// vector from the stream `(seed, STREAM_WILD_QUANTILE + b)`, so values are
/// reproducible and independent of evaluation order.
pub fn wild_bootstrap_statistics(
    cache: &HValueCache<'_>,
    b: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    (0..b)
        .map(|idx| {
            let mut rng = stream_rng(seed, STREAM_WILD_QUANTILE + idx as u64);
            let signs = rademacher_signs(cache.design.n_items, &mut rng);
            wild_bootstrap_statistic(cache, &signs)
        })
        .collect()
}

/// Complete quadratic-time MMD U-statistic (Gram-sum form):
/// `Σ'k(x,x')/(m(m-1)) + Σ'k(y,y')/(n(n-1)) - 2Σk(x,y)/(mn)`.
pub fn complete_mmd(x: &SampleMatrix, y: &SampleMatrix, spec: &KernelSpec) -> Result<f64> {
    if x.dim() != y.dim() || spec.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: if x.dim() != y.dim() { y.dim() } else { spec.dim() },
        });
    }
    let m = x.n_rows();
    let n = y.n_rows();
    if m < 2 || n < 2 {
        return Err(Error::InsufficientSamples {
            context: "complete MMD",
            needed: 2,
            got: m.min(n),
        });
    }
    let mut kxx = PairwiseSum::new();
    for i in 0..m {
        for j in (i + 1)..m {
            kxx.push(spec.eval_unchecked(x.row(i), x.row(j)));
        }
    }
    let mut kyy = PairwiseSum::new();
    for i in 0..n {
        for j in (i + 1)..n {
            kyy.push(spec.eval_unchecked(y.row(i), y.row(j)));
        }
    }
    let mut kxy = PairwiseSum::new();
    for i in 0..m {
        for j in 0..n {
            kxy.push(spec.eval_unchecked(x.row(i), y.row(j)));
        }
    }
    Ok(2.0 * kxx.sum() / (m * (m - 1)) as f64 + 2.0 * kyy.sum() / (n * (n - 1)) as f64
        - 2.0 * kxy.sum() / (m * n) as f64)
}

/// Complete quadratic-time HSIC U-statistic via the zero-diagonal Gram
/// matrix closed form.
pub fn complete_hsic(
    z: &SampleMatrix,
    d_x: usize,
    kspec: &KernelSpec,
    lspec: &KernelSpec,
) -> Result<f64> {
    let n = z.n_rows();
    if n < 4 {
        return Err(Error::InsufficientSamples {
            context: "complete HSIC",
            needed: 4,
            got: n,
        });
    }
    if d_x == 0 || d_x >= z.dim() {
        return Err(Error::InvalidConfig(format!(
            "d_x = {d_x} must split {}-dimensional samples into two nonempty parts",
            z.dim()
        )));
    }
    if kspec.dim() != d_x || lspec.dim() != z.dim() - d_x {
        return Err(Error::DimensionMismatch {
            expected: d_x,
            got: kspec.dim(),
        });
    }
    // zero-diagonal Gram matrices
    let mut kmat = vec![0.0; n * n];
    let mut lmat = vec![0.0; n * n];
    for i in 0..n {
        let (xi, yi) = z.split_row(i, d_x);
        for j in (i + 1)..n {
            let (xj, yj) = z.split_row(j, d_x);
            let kv = kspec.eval_unchecked(xi, xj);
            let lv = lspec.eval_unchecked(yi, yj);
            kmat[i * n + j] = kv;
            kmat[j * n + i] = kv;
            lmat[i * n + j] = lv;
            lmat[j * n + i] = lv;
        }
    }
    let row_sum = |mat: &[f64], i: usize| -> f64 { mat[i * n..(i + 1) * n].iter().sum() };
    let mut trace = PairwiseSum::new();
    for i in 0..n * n {
        trace.push(kmat[i] * lmat[i]);
    }
    let mut sum_k = PairwiseSum::new();
    let mut sum_l = PairwiseSum::new();
    let mut row_dot = PairwiseSum::new();
    for i in 0..n {
        let rk = row_sum(&kmat, i);
        let rl = row_sum(&lmat, i);
        sum_k.push(rk);
        sum_l.push(rl);
        row_dot.push(rk * rl);
    }
    let nf = n as f64;
    Ok((trace.sum() + sum_k.sum() * sum_l.sum() / ((nf - 1.0) * (nf - 2.0))
        - 2.0 * row_dot.sum() / (nf - 2.0))
        / (nf * (nf - 3.0)))
}

/// Complete quadratic-time KSD U-statistic: the mean of the Stein kernel
/// over all `N(N-1)` ordered off-diagonal pairs (Gram-sum form).
pub fn complete_ksd(z: &SampleMatrix, spec: &KernelSpec, model: &ScoreModel) -> Result<f64> {
    let n = z.n_rows();
    if n < 2 {
        return Err(Error::InsufficientSamples {
            context: "complete KSD",
            needed: 2,
            got: n,
        });
    }
    if model.dim() != z.dim() || spec.dim() != z.dim() {
        return Err(Error::DimensionMismatch {
            expected: z.dim(),
            got: if model.dim() != z.dim() {
                model.dim()
            } else {
                spec.dim()
            },
        });
    }
    let mut scores = SampleMatrix::zeros(n, z.dim());
    for i in 0..n {
        model.score_into(z.row(i), scores.row_mut(i));
    }
    let mut acc = PairwiseSum::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc.push(stein_kernel_precomputed(
                    spec,
                    z.row(i),
                    z.row(j),
                    scores.row(i),
                    scores.row(j),
                ));
            }
        }
    }
    Ok(acc.sum() / (n * (n - 1)) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{full_design, random_design, subdiagonal_design};
    use crate::kernel::{h_hsic, h_ksd, KernelFamily};
    use crate::models::sample_uniform_cube;
    use crate::rng::{stream_rng, STREAM_DATA};
    use rand::Rng;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> SampleMatrix {
        let mut rng = stream_rng(seed, STREAM_DATA);
        let data: Vec<f64> = (0..rows * cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        SampleMatrix::new(data, rows, cols).unwrap()
    }

    #[test]
    fn two_sample_pairing_truncates() {
        let spec = KernelSpec::uniform(KernelFamily::Gaussian, 1.0, 2).unwrap();
        let x = random_matrix(10, 2, 1);
        let y = random_matrix(7, 2, 2);
        let data = pair_two_sample(&x, &y, &spec).unwrap();
        assert_eq!(data.n_items(), 7);
        let balanced = pair_two_sample(&x, &x, &spec).unwrap();
        assert_eq!(balanced.n_items(), 10);
    }

    #[test]
    fn two_sample_item_eval_is_h_mmd() {
        let spec = KernelSpec::uniform(KernelFamily::Gaussian, 0.8, 2).unwrap();
        let x = random_matrix(5, 2, 3);
        let y = random_matrix(5, 2, 4);
        let data = pair_two_sample(&x, &y, &spec).unwrap();
        let direct =
            crate::kernel::h_mmd(&spec, x.row(0), x.row(1), y.row(0), y.row(1)).unwrap();
        assert_eq!(data.h(0, 1), direct);
    }

    #[test]
    fn independence_pairing_halves() {
        let k = KernelSpec::uniform(KernelFamily::Gaussian, 1.0, 1).unwrap();
        let l = KernelSpec::uniform(KernelFamily::Gaussian, 1.0, 1).unwrap();
        let z10 = random_matrix(10, 2, 5);
        let d10 = pair_independence(&z10, 1, &k, &l).unwrap();
        assert_eq!(d10.n_items(), 5);
        let z11 = random_matrix(11, 2, 6);
        let d11 = pair_independence(&z11, 1, &k, &l).unwrap();
        assert_eq!(d11.n_items(), 5);

        let direct = h_hsic(
            &k,
            &l,
            z10.split_row(0, 1),
            z10.split_row(1, 1),
            z10.split_row(5, 1),
            z10.split_row(6, 1),
        )
        .unwrap();
        assert_eq!(d10.h(0, 1), direct);
    }

    #[test]
    fn independence_pairing_needs_four() {
        let k = KernelSpec::uniform(KernelFamily::Gaussian, 1.0, 1).unwrap();
        let l = k.clone();
        let z = random_matrix(3, 2, 7);
        assert!(pair_independence(&z, 1, &k, &l).is_err());
    }

    #[test]
    fn gof_pairing_minimal_size() {
        let spec = KernelSpec::uniform(KernelFamily::Imq, 1.0, 1).unwrap();
        let model = ScoreModel::standard_gaussian(1);
        let z = random_matrix(2, 1, 77);
        let data = pair_gof(&z, &spec, &model).unwrap();
        assert_eq!(data.n_items(), 2);
        let design = full_design(2).unwrap();
        let cache = cache_h_values(&data, &design).unwrap();
        assert_eq!(cache.values.len(), 1);
        let one = random_matrix(1, 1, 78);
        assert!(pair_gof(&one, &spec, &model).is_err());
    }

    #[test]
    fn gof_item_eval_matches_h_ksd() {
        let spec = KernelSpec::uniform(KernelFamily::Imq, 1.0, 3).unwrap();
        let model = ScoreModel::standard_gaussian(3);
        let z = random_matrix(6, 3, 8);
        let data = pair_gof(&z, &spec, &model).unwrap();
        let direct = h_ksd(&spec, &model, z.row(0), z.row(1)).unwrap();
        assert!((data.h(0, 1) - direct).abs() < 1e-15);
        assert!((data.h(0, 1) - data.h(1, 0)).abs() < 1e-15);
    }

    #[test]
    fn cache_aligns_with_design() {
        let spec = KernelSpec::uniform(KernelFamily::Gaussian, 1.0, 2).unwrap();
        let x = random_matrix(8, 2, 9);
        let y = random_matrix(8, 2, 10);
        let data = pair_two_sample(&x, &y, &spec).unwrap();
        let design = subdiagonal_design(8, 3).unwrap();
        let cache = cache_h_values(&data, &design).unwrap();
        assert_eq!(cache.values.len(), design.len());
        for (t, &(i, j)) in design.pairs.iter().enumerate() {
            assert_eq!(cache.values[t], data.h(i as usize, j as usize));
        }
        // re-caching yields identical values
        let cache2 = cache_h_values(&data, &design).unwrap();
        assert_eq!(cache.values, cache2.values);
    }

    #[test]
    fn statistic_of_constant_values_is_the_constant() {
        let data = PairedData::from_fn(Problem::TwoSample, 10, |_, _| 2.5).unwrap();
        let design = subdiagonal_design(10, 2).unwrap();
        let cache = cache_h_values(&data, &design).unwrap();
        assert_eq!(incomplete_statistic(&cache).unwrap(), 2.5);
    }

    #[test]
    fn statistic_matches_direct_summation() {
        // brute-force oracle: direct sum over design pairs divided by L
        let mut rng = stream_rng(99, 0);
        for trial in 0..25 {
            let n = rng.random_range(4..=20usize);
            let spec = KernelSpec::uniform(KernelFamily::Gaussian, 0.7, 1).unwrap();
            let x = random_matrix(n, 1, 1000 + trial);
            let y = random_matrix(n, 1, 2000 + trial);
            let data = pair_two_sample(&x, &y, &spec).unwrap();
            let design = random_design(
                n,
                rng.random_range(1..=n * (n - 1) / 2),
                3000 + trial,
            )
            .unwrap();
            let cache = cache_h_values(&data, &design).unwrap();
            let got = incomplete_statistic(&cache).unwrap();
            let mut s = 0.0;
            for &(i, j) in &design.pairs {
                s += data.h(i as usize, j as usize);
            }
            let want = s / design.len() as f64;
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn wild_bootstrap_sign_identities() {
        let spec = KernelSpec::uniform(KernelFamily::Gaussian, 1.0, 1).unwrap();
        let x = random_matrix(30, 1, 11);
        let y = random_matrix(30, 1, 12);
        let data = pair_two_sample(&x, &y, &spec).unwrap();
        let design = subdiagonal_design(30, 5).unwrap();
        let cache = cache_h_values(&data, &design).unwrap();
        let stat = incomplete_statistic(&cache).unwrap();
        let plus = wild_bootstrap_statistic(&cache, &vec![1.0; 30]).unwrap();
        let minus = wild_bootstrap_statistic(&cache, &vec![-1.0; 30]).unwrap();
        assert_eq!(stat, plus);
        assert_eq!(stat, minus);
    }

    #[test]
    fn wild_bootstrap_global_negation_invariance() {
        let data = PairedData::from_fn(Problem::GoodnessOfFit, 12, |i, j| {
            ((i * 31 + j * 17) % 13) as f64 - 6.0
        })
        .unwrap();
        let design = full_design(12).unwrap();
        let cache = cache_h_values(&data, &design).unwrap();
        let mut rng = stream_rng(13, 0);
        for _ in 0..20 {
            let signs = rademacher_signs(12, &mut rng);
            let flipped: Vec<f64> = signs.iter().map(|s| -s).collect();
            let a = wild_bootstrap_statistic(&cache, &signs).unwrap();
            let b = wild_bootstrap_statistic(&cache, &flipped).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn wild_bootstrap_matches_hsic_swap_construction() {
        // flipping ε_i corresponds to exchanging the y-parts of samples i
        // and i + N/2 in the raw data
        let k = KernelSpec::uniform(KernelFamily::Gaussian, 0.9, 1).unwrap();
        let l = KernelSpec::uniform(KernelFamily::Gaussian, 1.1, 1).unwrap();
        let z = random_matrix(6, 2, 21);
        let data = pair_independence(&z, 1, &k, &l).unwrap();
        let design = full_design(3).unwrap();
        let cache = cache_h_values(&data, &design).unwrap();
        let signs = [-1.0, 1.0, -1.0];
        let wild = wild_bootstrap_statistic(&cache, &signs).unwrap();

        let mut swapped_rows: Vec<Vec<f64>> = (0..6).map(|i| z.row(i).to_vec()).collect();
        for i in 0..3 {
            if signs[i] < 0.0 {
                let yi = swapped_rows[i][1];
                swapped_rows[i][1] = swapped_rows[i + 3][1];
                swapped_rows[i + 3][1] = yi;
            }
        }
        let swapped = SampleMatrix::from_rows(&swapped_rows).unwrap();
        let swapped_data = pair_independence(&swapped, 1, &k, &l).unwrap();
        let swapped_cache = cache_h_values(&swapped_data, &design).unwrap();
        let replay = incomplete_statistic(&swapped_cache).unwrap();
        assert!((wild - replay).abs() < 1e-12, "{wild} vs {replay}");
    }

    #[test]
    fn wild_bootstrap_replicates_deterministic() {
        let data = PairedData::from_fn(Problem::TwoSample, 15, |i, j| (i + 2 * j) as f64).unwrap();
        let design = subdiagonal_design(15, 4).unwrap();
        let cache = cache_h_values(&data, &design).unwrap();
        let a = wild_bootstrap_statistics(&cache, 16, 77).unwrap();
        let b = wild_bootstrap_statistics(&cache, 16, 77).unwrap();
        let c = wild_bootstrap_statistics(&cache, 16, 78).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn cost_contract_h_evaluations() {
        // exactly L kernel evaluations to build the cache, none for the
        // bootstrap
        let count = AtomicUsize::new(0);
        let data = PairedData::from_fn(Problem::TwoSample, 20, |i, j| {
            count.fetch_add(1, Ordering::Relaxed);
            (i as f64 - j as f64).sin()
        })
        .unwrap();
        let design = subdiagonal_design(20, 6).unwrap();
        let cache = cache_h_values(&data, &design).unwrap();
        assert_eq!(count.load(Ordering::Relaxed), design.len());
        let _ = wild_bootstrap_statistics(&cache, 50, 5).unwrap();
        let _ = incomplete_statistic(&cache).unwrap();
        assert_eq!(count.load(Ordering::Relaxed), design.len());
    }

    #[test]
    fn full_design_incomplete_ksd_equals_complete() {
        let spec = KernelSpec::uniform(KernelFamily::Imq, 1.3, 2).unwrap();
        let model = ScoreModel::standard_gaussian(2);
        let z = random_matrix(8, 2, 31);
        let data = pair_gof(&z, &spec, &model).unwrap();
        let design = full_design(8).unwrap();
        let cache = cache_h_values(&data, &design).unwrap();
        let inc = incomplete_statistic(&cache).unwrap();
        let com = complete_ksd(&z, &spec, &model).unwrap();
        assert!((inc - com).abs() < 1e-12, "{inc} vs {com}");
    }

    #[test]
    fn complete_hsic_matches_quartic_brute_force() {
        // O(N⁴) direct summation of the fourth-order U-statistic at N = 6
        let n = 6;
        let k = KernelSpec::uniform(KernelFamily::Gaussian, 0.8, 1).unwrap();
        let l = KernelSpec::uniform(KernelFamily::Gaussian, 1.2, 1).unwrap();
        let z = random_matrix(n, 2, 41);
        let mut acc = 0.0;
        let mut count = 0usize;
        for i in 0..n {
            for j in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        if i == j || i == r || i == s || j == r || j == s || r == s {
                            continue;
                        }
                        acc += h_hsic(
                            &k,
                            &l,
                            z.split_row(i, 1),
                            z.split_row(j, 1),
                            z.split_row(r, 1),
                            z.split_row(s, 1),
                        )
                        .unwrap();
                        count += 1;
                    }
                }
            }
        }
        let brute = acc / count as f64;
        let closed = complete_hsic(&z, 1, &k, &l).unwrap();
        assert!((brute - closed).abs() < 1e-9, "{brute} vs {closed}");
    }

    #[test]
    fn complete_mmd_on_identical_arrays_matches_brute_force() {
        // brute-force oracle: Eq-style four-index double sum over i₂^m × i₂^n
        let spec = KernelSpec::uniform(KernelFamily::Gaussian, 1.0, 1).unwrap();
        let x = random_matrix(7, 1, 51);
        let m = 7;
        let mut acc = 0.0;
        for i in 0..m {
            for i2 in 0..m {
                if i == i2 {
                    continue;
                }
                for j in 0..m {
                    for j2 in 0..m {
                        if j == j2 {
                            continue;
                        }
                        acc += h_mmd_unchecked(&spec, x.row(i), x.row(i2), x.row(j), x.row(j2));
                    }
                }
            }
        }
        let brute = acc / ((m * (m - 1)) * (m * (m - 1))) as f64;
        let closed = complete_mmd(&x, &x, &spec).unwrap();
        assert!((brute - closed).abs() < 1e-12, "{brute} vs {closed}");
        // identical arrays give a strictly negative U-statistic unless all
        // points coincide
        assert!(closed < 0.0);
    }

    #[test]
    fn incomplete_statistic_unbiased_under_null() {
        // p = q uniform, N = 100, R = 32: mean over 500 datasets within
        // 4 standard errors of 0
        let spec = KernelSpec::uniform(KernelFamily::Gaussian, 0.5, 1).unwrap();
        let design = subdiagonal_design(100, 32).unwrap();
        let reps = 500;
        let mut stats = Vec::with_capacity(reps);
        for rep in 0..reps {
            let mut rng = stream_rng(rep as u64, STREAM_DATA);
            let x = sample_uniform_cube(100, 1, &mut rng);
            let y = sample_uniform_cube(100, 1, &mut rng);
            let data = pair_two_sample(&x, &y, &spec).unwrap();
            let cache = cache_h_values(&data, &design).unwrap();
            stats.push(incomplete_statistic(&cache).unwrap());
        }
        let mean = stats.iter().sum::<f64>() / reps as f64;
        let var = stats.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        assert!(mean.abs() < 4.0 * se, "mean {mean}, se {se}");
    }
}
