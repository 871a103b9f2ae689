//! Wild-bootstrap tests: single bandwidth and aggregated over a bandwidth
//! collection.
//!
//! The single test rejects when the incomplete statistic exceeds the
//! empirical `(1-α)`-quantile of the statistic together with `B1` wild
//! bootstrap replicates. The aggregated test runs one single test per
//! bandwidth at the weighted level `u_α·w_λ` and rejects when any of them
//! rejects; the correction `u_α` is the largest level multiplier keeping
//! the simulated joint null rejection rate at most `α`, found by `B3`
//! bisection steps over a second, independent family of `B2` replicates.
//!
//! Within one replicate index the same Rademacher vector is applied across
//! every bandwidth, for both replicate families: the correction couples
//! bandwidths through a max over the collection, which is only meaningful
//! if the bandwidths share the replicate's randomness.

use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::estimators::{
    cache_h_values, incomplete_statistic, pair_gof, pair_independence, pair_two_sample,
    wild_bootstrap_statistic, wild_bootstrap_statistics, HValueCache, PairedData,
};
use crate::kernel::{median_bandwidth, KernelFamily, KernelSpec, ScoreModel};
use crate::rng::{
    rademacher_signs, stream_rng, STREAM_WILD_CORRECTION, STREAM_WILD_QUANTILE,
};
use crate::{Error, Result, SampleMatrix};

/// Test parameters: level, replicate counts, bisection steps, and one
/// weight per bandwidth in the collection (positive, summing to at most 1).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestConfig {
    pub alpha: f64,
    pub b1: usize,
    pub b2: usize,
    pub b3: usize,
    pub weights: Vec<f64>,
}

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_B1: usize = 500;
pub const DEFAULT_B2: usize = 500;
pub const DEFAULT_B3: usize = 50;

fn in_open_unit_interval(level: f64) -> bool {
    !level.is_nan() && level > 0.0 && level < 1.0
}

impl TestConfig {
    pub fn new(alpha: f64, b1: usize, b2: usize, b3: usize, weights: Vec<f64>) -> Result<Self> {
        if !in_open_unit_interval(alpha) {
            return Err(Error::InvalidLevel(alpha));
        }
        if b1 == 0 || b2 == 0 || b3 == 0 {
            return Err(Error::InvalidConfig(
                "replicate counts and bisection steps must be positive".into(),
            ));
        }
        if weights.is_empty() {
            return Err(Error::InvalidWeights("no weights given".into()));
        }
        if weights.iter().any(|&w| w.is_nan() || w <= 0.0) {
            return Err(Error::InvalidWeights("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::InvalidWeights(format!(
                "weights sum to {total}, must be at most 1"
            )));
        }
        Ok(Self {
            alpha,
            b1,
            b2,
            b3,
            weights,
        })
    }

    /// Default replicate counts with uniform weights `1/n` over `n`
    /// bandwidths.
    pub fn uniform(alpha: f64, n_bandwidths: usize) -> Result<Self> {
        Self::new(
            alpha,
            DEFAULT_B1,
            DEFAULT_B2,
            DEFAULT_B3,
            uniform_weights(n_bandwidths),
        )
    }

    /// Diagnostic: replicate-count lower bounds under which the theoretical
    /// power guarantees are stated (evaluated at reference type II error
    /// 0.5). Returns a notice when the configured counts fall short; the
    /// tests stay valid either way, so this is advisory only.
    pub fn replicate_bound_notice(&self) -> Option<String> {
        let beta = 0.5f64;
        let alpha = self.alpha;
        let w_min = self.weights.iter().cloned().fold(f64::INFINITY, f64::min);
        let w_max_inv_sq = self.weights.iter().map(|w| 1.0 / (w * w)).fold(0.0, f64::max);
        let b1_bound = w_max_inv_sq * 12.0 / (alpha * alpha)
            * ((8.0 / beta).ln() + alpha * (1.0 - alpha));
        let b2_bound = 8.0 / (alpha * alpha) * (2.0f64 / beta).ln();
        let b3_bound = (4.0 / (alpha * w_min)).log2();
        let mut short = Vec::new();
        if (self.b1 as f64) < b1_bound {
            short.push(format!("B1 = {} < {:.0}", self.b1, b1_bound.ceil()));
        }
        if (self.b2 as f64) < b2_bound {
            short.push(format!("B2 = {} < {:.0}", self.b2, b2_bound.ceil()));
        }
        if (self.b3 as f64) < b3_bound {
            short.push(format!("B3 = {} < {:.0}", self.b3, b3_bound.ceil()));
        }
        if short.is_empty() {
            None
        } else {
            Some(format!(
                "replicate counts below the theoretical power bounds ({})",
                short.join(", ")
            ))
        }
    }
}

/// Uniform weights `1/n`.
pub fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// One kernel per bandwidth entry: a single kernel for the two-sample and
/// goodness-of-fit problems, a pair of kernels (x-part, y-part) for
/// independence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSelection {
    Single(KernelSpec),
    Product(KernelSpec, KernelSpec),
}

/// A testing problem bound to its raw data.
#[derive(Debug)]
pub enum TestProblem<'a> {
    TwoSample {
        x: &'a SampleMatrix,
        y: &'a SampleMatrix,
    },
    Independence {
        z: &'a SampleMatrix,
        d_x: usize,
    },
    GoodnessOfFit {
        z: &'a SampleMatrix,
        model: &'a ScoreModel,
    },
}

impl TestProblem<'_> {
    /// Item count of the second-order pairing for this problem.
    pub fn n_items(&self) -> usize {
        match self {
            TestProblem::TwoSample { x, y } => x.n_rows().min(y.n_rows()),
            TestProblem::Independence { z, .. } => z.n_rows() / 2,
            TestProblem::GoodnessOfFit { z, .. } => z.n_rows(),
        }
    }

    /// Pairs the raw samples under one bandwidth selection.
    pub fn paired<'s>(&'s self, selection: &'s KernelSelection) -> Result<PairedData<'s>> {
        match (self, selection) {
            (TestProblem::TwoSample { x, y }, KernelSelection::Single(spec)) => {
                pair_two_sample(x, y, spec)
            }
            (TestProblem::Independence { z, d_x }, KernelSelection::Product(k, l)) => {
                pair_independence(z, *d_x, k, l)
            }
            (TestProblem::GoodnessOfFit { z, model }, KernelSelection::Single(spec)) => {
                pair_gof(z, spec, model)
            }
            (TestProblem::Independence { .. }, KernelSelection::Single(_)) => Err(
                Error::InvalidConfig("independence testing needs a kernel pair".into()),
            ),
            (_, KernelSelection::Product(..)) => Err(Error::InvalidConfig(
                "kernel pairs only apply to independence testing".into(),
            )),
        }
    }
}

/// 1-based rank `⌈B1·(1-level)⌉` into the sorted `B1+1` values, clamped to
/// the valid range.
fn quantile_rank(b1: usize, level: f64) -> usize {
    let raw = (b1 as f64 * (1.0 - level)).ceil() as usize;
    raw.clamp(1, b1)
}

/// Empirical quantile from the `B1` bootstrap statistics together with the
/// original statistic as the final element: the `⌈B1·(1-level)⌉`-th
/// smallest of the `B1+1` values.
pub fn bootstrap_quantile(statistics_with_original: &[f64], level: f64) -> Result<f64> {
    if !in_open_unit_interval(level) {
        return Err(Error::InvalidLevel(level));
    }
    if statistics_with_original.len() < 2 {
        return Err(Error::InvalidConfig(
            "need the original statistic plus at least one replicate".into(),
        ));
    }
    let b1 = statistics_with_original.len() - 1;
    let mut sorted = statistics_with_original.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[quantile_rank(b1, level) - 1])
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SingleTestResult {
    pub reject: bool,
    pub statistic: f64,
    pub quantile: f64,
}

/// Single-bandwidth test: rejects when the incomplete statistic strictly
/// exceeds the bootstrap quantile at level `alpha`.
pub fn single_test(
    data: &PairedData<'_>,
    design: &Design,
    alpha: f64,
    b1: usize,
    seed: u64,
) -> Result<SingleTestResult> {
    if !in_open_unit_interval(alpha) {
        return Err(Error::InvalidLevel(alpha));
    }
    if b1 == 0 {
        return Err(Error::InvalidConfig("B1 must be positive".into()));
    }
    let cache = cache_h_values(data, design)?;
    let statistic = incomplete_statistic(&cache)?;
    let mut values = wild_bootstrap_statistics(&cache, b1, seed)?;
    values.push(statistic);
    let quantile = bootstrap_quantile(&values, alpha)?;
    Ok(SingleTestResult {
        reject: statistic > quantile,
        statistic,
        quantile,
    })
}

/// The level-correction multiplier `u_α`: the largest `u` in
/// `(0, min_λ 1/w_λ)` — up to `B3` bisection steps of resolution — such
/// that the fraction of correction replicates beating their per-bandwidth
/// threshold at levels `u·w_λ` stays at most `alpha`.
///
/// The `b`-th correction replicate must use the same Rademacher vector for
/// every `λ`; this function only sees the resulting values, so that
/// contract is the caller's.
///
/// Returns the lower bracket 0.0 when even the smallest probed `u` fails,
/// in which case the aggregated test never rejects.
pub fn compute_u_alpha(
    originals: &[f64],
    quantile_replicates: &[Vec<f64>],
    correction_replicates: &[Vec<f64>],
    config: &TestConfig,
) -> Result<f64> {
    let n_lambda = originals.len();
    if n_lambda == 0 {
        return Err(Error::EmptyCollection("no statistics given".into()));
    }
    if quantile_replicates.len() != n_lambda
        || correction_replicates.len() != n_lambda
        || config.weights.len() != n_lambda
    {
        return Err(Error::InvalidConfig(
            "per-bandwidth inputs have inconsistent lengths".into(),
        ));
    }
    for reps in quantile_replicates {
        if reps.len() != config.b1 {
            return Err(Error::InvalidConfig(format!(
                "expected {} quantile replicates, got {}",
                config.b1,
                reps.len()
            )));
        }
    }
    for reps in correction_replicates {
        if reps.len() != config.b2 {
            return Err(Error::InvalidConfig(format!(
                "expected {} correction replicates, got {}",
                config.b2,
                reps.len()
            )));
        }
    }

    let sorted: Vec<Vec<f64>> = quantile_replicates
        .iter()
        .zip(originals)
        .map(|(reps, &orig)| {
            let mut v = reps.clone();
            v.push(orig);
            v.sort_by(f64::total_cmp);
            v
        })
        .collect();

    let exceeds_alpha = |u: f64| -> bool {
        let thresholds: Vec<f64> = (0..n_lambda)
            .map(|l| sorted[l][quantile_rank(config.b1, u * config.weights[l]) - 1])
            .collect();
        let count = (0..config.b2)
            .filter(|&b| (0..n_lambda).any(|l| correction_replicates[l][b] > thresholds[l]))
            .count();
        count as f64 > config.alpha * config.b2 as f64
    };

    let mut lo = 0.0f64;
    let mut hi = config
        .weights
        .iter()
        .map(|w| 1.0 / w)
        .fold(f64::INFINITY, f64::min);
    for _ in 0..config.b3 {
        let mid = 0.5 * (lo + hi);
        if exceeds_alpha(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lo)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerBandwidthResult {
    pub kernel: KernelSelection,
    pub weight: f64,
    /// Adjusted single-test level `u_α · w_λ`.
    pub level: f64,
    pub statistic: f64,
    pub quantile: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggTestResult {
    pub reject: bool,
    pub u_alpha: f64,
    /// True when no probed `u` satisfied the correction constraint; the
    /// test then never rejects.
    pub degenerate_correction: bool,
    pub per_bandwidth: Vec<PerBandwidthResult>,
    /// Design size actually used.
    pub l_used: usize,
    pub n_items: usize,
    pub seed: u64,
}

impl AggTestResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }

    /// Stable-order CSV header for a result with `n` bandwidths.
    pub fn csv_header(n_bandwidths: usize) -> String {
        let mut cols = vec![
            "seed".to_string(),
            "reject".to_string(),
            "u_alpha".to_string(),
            "l_used".to_string(),
            "n_items".to_string(),
        ];
        for i in 0..n_bandwidths {
            cols.push(format!("statistic_{i}"));
            cols.push(format!("quantile_{i}"));
            cols.push(format!("reject_{i}"));
        }
        cols.join(",")
    }

    /// One CSV row matching [`AggTestResult::csv_header`].
    pub fn csv_row(&self) -> String {
        let mut cols = vec![
            self.seed.to_string(),
            (self.reject as u8).to_string(),
            format!("{}", self.u_alpha),
            self.l_used.to_string(),
            self.n_items.to_string(),
        ];
        for pb in &self.per_bandwidth {
            cols.push(format!("{}", pb.statistic));
            cols.push(format!("{}", pb.quantile));
            cols.push((pb.reject as u8).to_string());
        }
        cols.join(",")
    }
}

/// The aggregated test: rejects when the statistic exceeds its adjusted
/// quantile for at least one bandwidth in the collection.
pub fn aggregated_test(
    problem: &TestProblem<'_>,
    design: &Design,
    collection: &[KernelSelection],
    config: &TestConfig,
    seed: u64,
) -> Result<AggTestResult> {
    if collection.is_empty() {
        return Err(Error::EmptyCollection("no bandwidths in collection".into()));
    }
    if config.weights.len() != collection.len() {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} bandwidths",
            config.weights.len(),
            collection.len()
        )));
    }

    let paired: Vec<PairedData<'_>> = collection
        .iter()
        .map(|sel| problem.paired(sel))
        .collect::<Result<_>>()?;
    let caches: Vec<HValueCache<'_>> = paired
        .iter()
        .map(|data| cache_h_values(data, design))
        .collect::<Result<_>>()?;
    let originals: Vec<f64> = caches
        .iter()
        .map(incomplete_statistic)
        .collect::<Result<_>>()?;

    let n_items = design.n_items;
    let n_lambda = collection.len();
    // one Rademacher vector per replicate index, shared across bandwidths
    let mut quantile_replicates = vec![Vec::with_capacity(config.b1); n_lambda];
    for b in 0..config.b1 {
        let mut rng = stream_rng(seed, STREAM_WILD_QUANTILE + b as u64);
        let signs = rademacher_signs(n_items, &mut rng);
        for (l, cache) in caches.iter().enumerate() {
            quantile_replicates[l].push(wild_bootstrap_statistic(cache, &signs)?);
        }
    }
    let mut correction_replicates = vec![Vec::with_capacity(config.b2); n_lambda];
    for b in 0..config.b2 {
        let mut rng = stream_rng(seed, STREAM_WILD_CORRECTION + b as u64);
        let signs = rademacher_signs(n_items, &mut rng);
        for (l, cache) in caches.iter().enumerate() {
            correction_replicates[l].push(wild_bootstrap_statistic(cache, &signs)?);
        }
    }

    let u_alpha = compute_u_alpha(
        &originals,
        &quantile_replicates,
        &correction_replicates,
        config,
    )?;
    let degenerate = u_alpha == 0.0;

    let mut per_bandwidth = Vec::with_capacity(n_lambda);
    for l in 0..n_lambda {
        let level = u_alpha * config.weights[l];
        let mut values = quantile_replicates[l].clone();
        values.push(originals[l]);
        // at u_α = 0 the level degenerates; report the most conservative
        // quantile and never reject
        let quantile_level = if degenerate { f64::MIN_POSITIVE } else { level };
        let quantile = bootstrap_quantile(&values, quantile_level)?;
        let reject = !degenerate && originals[l] > quantile;
        per_bandwidth.push(PerBandwidthResult {
            kernel: collection[l].clone(),
            weight: config.weights[l],
            level,
            statistic: originals[l],
            quantile,
            reject,
        });
    }

    Ok(AggTestResult {
        reject: per_bandwidth.iter().any(|pb| pb.reject),
        u_alpha,
        degenerate_correction: degenerate,
        per_bandwidth,
        l_used: design.len(),
        n_items,
        seed,
    })
}

/// Median-heuristic bandwidth collection for single-kernel problems:
/// `{2^i · λ_med : i = 1-count .. 0}` replicated over all `d` coordinates.
/// The default `count` is 4, giving powers `2^-3 .. 2^0`.
pub fn median_collection(
    points: &SampleMatrix,
    family: KernelFamily,
    count: usize,
) -> Result<Vec<KernelSelection>> {
    if count == 0 {
        return Err(Error::EmptyCollection("count must be positive".into()));
    }
    let lambda_med = median_bandwidth(points)?;
    let d = points.dim();
    (0..count)
        .map(|idx| {
            let power = idx as i32 - (count as i32 - 1);
            let spec = KernelSpec::uniform(family, 2f64.powi(power) * lambda_med, d)?;
            Ok(KernelSelection::Single(spec))
        })
        .collect()
}

/// Median-heuristic collection for independence testing: all nine pairs
/// `(2^i·λ_med, 2^j·μ_med)` with `i, j ∈ {-2, -1, 0}`, medians computed
/// separately on the x- and y-parts. Gaussian kernels on both parts.
pub fn hsic_collection(
    x_part: &SampleMatrix,
    y_part: &SampleMatrix,
) -> Result<Vec<KernelSelection>> {
    let lambda_med = median_bandwidth(x_part)?;
    let mu_med = median_bandwidth(y_part)?;
    let mut out = Vec::with_capacity(9);
    for i in -2i32..=0 {
        for j in -2i32..=0 {
            let k = KernelSpec::uniform(
                KernelFamily::Gaussian,
                2f64.powi(i) * lambda_med,
                x_part.dim(),
            )?;
            let l = KernelSpec::uniform(
                KernelFamily::Gaussian,
                2f64.powi(j) * mu_med,
                y_part.dim(),
            )?;
            out.push(KernelSelection::Product(k, l));
        }
    }
    Ok(out)
}

/// Dyadic bandwidth ladder with summable weights: bandwidths `2^-ℓ` for
/// `ℓ = 1 ..= ⌈(2/d)·log2((L/N)/ln(ln(L/N)))⌉` and weights `6/(π²ℓ²)`.
/// Requires `L/N > e` so the iterated logarithm is positive.
pub fn theoretical_scalars(l_design: usize, n_items: usize, d: usize) -> Result<Vec<(f64, f64)>> {
    if n_items == 0 || d == 0 {
        return Err(Error::InvalidConfig(
            "sample size and dimension must be positive".into(),
        ));
    }
    let ratio = l_design as f64 / n_items as f64;
    let loglog = ratio.ln().ln();
    if loglog.is_nan() || loglog <= 0.0 {
        return Err(Error::EmptyCollection(format!(
            "L/N = {ratio:.3} must exceed e for the theoretical collection"
        )));
    }
    let l_max = (2.0 / d as f64 * (ratio / loglog).log2()).ceil();
    if l_max < 1.0 {
        return Err(Error::EmptyCollection(format!(
            "L/N = {ratio:.3} yields an empty theoretical collection"
        )));
    }
    let pi_sq = std::f64::consts::PI * std::f64::consts::PI;
    Ok((1..=l_max as usize)
        .map(|ell| (2f64.powi(-(ell as i32)), 6.0 / (pi_sq * (ell * ell) as f64)))
        .collect())
}

/// [`theoretical_scalars`] materialized as single-kernel selections with
/// all `d` bandwidth entries equal, plus the matching weights.
pub fn theoretical_collection(
    l_design: usize,
    n_items: usize,
    d: usize,
    family: KernelFamily,
) -> Result<(Vec<KernelSelection>, Vec<f64>)> {
    let scalars = theoretical_scalars(l_design, n_items, d)?;
    let mut collection = Vec::with_capacity(scalars.len());
    let mut weights = Vec::with_capacity(scalars.len());
    for (bandwidth, weight) in scalars {
        collection.push(KernelSelection::Single(KernelSpec::uniform(
            family, bandwidth, d,
        )?));
        weights.push(weight);
    }
    Ok((collection, weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{full_design, subdiagonal_design};
    use crate::estimators::Problem;
    use crate::models::sample_uniform_cube;
    use crate::rng::{stream_rng, STREAM_DATA};
    use rand::Rng;

    #[test]
    fn quantile_rank_examples() {
        assert_eq!(quantile_rank(500, 0.05), 475);
        assert_eq!(quantile_rank(4, 0.5), 2);
        // extremes stay in range
        assert_eq!(quantile_rank(10, 1.0 - 1e-16), 1);
        assert_eq!(quantile_rank(10, 1e-300), 10);
    }

    #[test]
    fn bootstrap_quantile_examples() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(bootstrap_quantile(&v, 0.5).unwrap(), 2.0);
        let constant = [3.5; 12];
        assert_eq!(bootstrap_quantile(&constant, 0.05).unwrap(), 3.5);
        assert!(matches!(
            bootstrap_quantile(&v, 0.0),
            Err(Error::InvalidLevel(_))
        ));
        assert!(matches!(
            bootstrap_quantile(&v, 1.0),
            Err(Error::InvalidLevel(_))
        ));
    }

    #[test]
    fn config_validation() {
        assert!(TestConfig::new(0.05, 10, 10, 10, vec![0.5, 0.5]).is_ok());
        assert!(TestConfig::new(0.0, 10, 10, 10, vec![1.0]).is_err());
        assert!(TestConfig::new(0.05, 0, 10, 10, vec![1.0]).is_err());
        assert!(TestConfig::new(0.05, 10, 10, 10, vec![0.7, 0.7]).is_err());
        assert!(TestConfig::new(0.05, 10, 10, 10, vec![0.5, -0.5]).is_err());
    }

    #[test]
    fn default_config_triggers_bound_notice() {
        // the benchmark defaults sit below the theoretical replicate
        // bounds, which is expected and only advisory
        let config = TestConfig::uniform(0.05, 4).unwrap();
        assert!(config.replicate_bound_notice().is_some());
    }

    #[test]
    fn single_test_accepts_when_statistic_is_minimal() {
        // constant negative h values: every replicate is at least the
        // statistic, so the test can never reject
        let data = PairedData::from_fn(Problem::TwoSample, 12, |_, _| -1.0).unwrap();
        let design = subdiagonal_design(12, 3).unwrap();
        for seed in 0..20 {
            let r = single_test(&data, &design, 0.05, 50, seed).unwrap();
            assert!(!r.reject);
            assert_eq!(r.statistic, -1.0);
        }
    }

    #[test]
    fn single_test_matches_hand_traced_sort_and_compare() {
        // N = 6, B1 = 3, fixed seed: re-derive the decision from the
        // pieces
        let mut rng = stream_rng(123, STREAM_DATA);
        let x = sample_uniform_cube(6, 1, &mut rng);
        let y = sample_uniform_cube(6, 1, &mut rng);
        let spec = KernelSpec::uniform(KernelFamily::Gaussian, 0.5, 1).unwrap();
        let data = pair_two_sample(&x, &y, &spec).unwrap();
        let design = subdiagonal_design(6, 2).unwrap();
        let seed = 7;
        let result = single_test(&data, &design, 0.25, 3, seed).unwrap();

        let cache = cache_h_values(&data, &design).unwrap();
        let stat = incomplete_statistic(&cache).unwrap();
        let mut values = wild_bootstrap_statistics(&cache, 3, seed).unwrap();
        values.push(stat);
        values.sort_by(f64::total_cmp);
        // rank ⌈3 · 0.75⌉ = 3 of the four sorted values
        let quantile = values[2];
        assert_eq!(result.statistic, stat);
        assert_eq!(result.quantile, quantile);
        assert_eq!(result.reject, stat > quantile);
    }

    #[test]
    fn single_test_monotone_in_alpha() {
        let spec = KernelSpec::uniform(KernelFamily::Gaussian, 0.3, 1).unwrap();
        let design = subdiagonal_design(40, 8).unwrap();
        for seed in 0..30u64 {
            let mut rng = stream_rng(seed, STREAM_DATA);
            let x = sample_uniform_cube(40, 1, &mut rng);
            let y = sample_uniform_cube(40, 1, &mut rng);
            let data = pair_two_sample(&x, &y, &spec).unwrap();
            let mut rejected = false;
            for alpha in [0.01, 0.05, 0.1, 0.2, 0.4] {
                let r = single_test(&data, &design, alpha, 60, seed).unwrap();
                if rejected {
                    assert!(r.reject, "rejection must persist as alpha grows");
                }
                rejected = r.reject;
            }
        }
    }

    #[test]
    fn single_test_null_level_in_band() {
        // 200 independent null runs at alpha = 0.05: empirical rejection
        // fraction within [0.01, 0.10]
        let spec = KernelSpec::uniform(KernelFamily::Gaussian, 0.4, 1).unwrap();
        let design = subdiagonal_design(100, 20).unwrap();
        let mut rejections = 0;
        for seed in 0..200u64 {
            let mut rng = stream_rng(seed, STREAM_DATA);
            let x = sample_uniform_cube(100, 1, &mut rng);
            let y = sample_uniform_cube(100, 1, &mut rng);
            let data = pair_two_sample(&x, &y, &spec).unwrap();
            if single_test(&data, &design, 0.05, 200, seed).unwrap().reject {
                rejections += 1;
            }
        }
        let rate = rejections as f64 / 200.0;
        assert!((0.01..=0.10).contains(&rate), "null rejection rate {rate}");
    }

    #[test]
    fn u_alpha_constraint_is_monotone_in_u() {
        // the empirical rejection proportion is non-decreasing in u, which
        // bisection relies on
        let mut rng = stream_rng(31, 0);
        for _ in 0..20 {
            let n_lambda = rng.random_range(1..=3usize);
            let b1 = 16;
            let b2 = 24;
            let originals: Vec<f64> = (0..n_lambda).map(|_| rng.random_range(-1.0..1.0)).collect();
            let q: Vec<Vec<f64>> = (0..n_lambda)
                .map(|_| (0..b1).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let c: Vec<Vec<f64>> = (0..n_lambda)
                .map(|_| (0..b2).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let weights = uniform_weights(n_lambda);
            let sorted: Vec<Vec<f64>> = q
                .iter()
                .zip(&originals)
                .map(|(reps, &o)| {
                    let mut v = reps.clone();
                    v.push(o);
                    v.sort_by(f64::total_cmp);
                    v
                })
                .collect();
            let proportion = |u: f64| -> f64 {
                let count = (0..b2)
                    .filter(|&b| {
                        (0..n_lambda).any(|l| {
                            c[l][b] > sorted[l][quantile_rank(b1, u * weights[l]) - 1]
                        })
                    })
                    .count();
                count as f64 / b2 as f64
            };
            let u_max = n_lambda as f64;
            let mut prev = 0.0;
            for step in 1..50 {
                let u = u_max * step as f64 / 50.0;
                let p = proportion(u);
                assert!(p >= prev - 1e-12, "proportion decreased at u = {u}");
                prev = p;
            }
        }
    }

    #[test]
    fn u_alpha_matches_grid_search_oracle() {
        // |Λ| = 2, B1 = B2 = 8, B3 = 10, fixed seed: bisection equals an
        // exhaustive dyadic grid search at the bisection resolution
        let mut rng = stream_rng(47, 0);
        let config = TestConfig::new(0.25, 8, 8, 10, vec![0.5, 0.5]).unwrap();
        for _ in 0..25 {
            let originals: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let q: Vec<Vec<f64>> = (0..2)
                .map(|_| (0..8).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let c: Vec<Vec<f64>> = (0..2)
                .map(|_| (0..8).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let got = compute_u_alpha(&originals, &q, &c, &config).unwrap();

            let sorted: Vec<Vec<f64>> = q
                .iter()
                .zip(&originals)
                .map(|(reps, &o)| {
                    let mut v = reps.clone();
                    v.push(o);
                    v.sort_by(f64::total_cmp);
                    v
                })
                .collect();
            let satisfies = |u: f64| -> bool {
                let count = (0..8)
                    .filter(|&b| {
                        (0..2).any(|l| {
                            c[l][b] > sorted[l][quantile_rank(8, u * config.weights[l]) - 1]
                        })
                    })
                    .count();
                count as f64 <= config.alpha * 8.0
            };
            let u_max = 2.0;
            let step = u_max / 2f64.powi(10);
            let mut best = 0.0;
            let mut k = 1;
            while (k as f64) * step < u_max {
                let u = k as f64 * step;
                if satisfies(u) {
                    best = u;
                }
                k += 1;
            }
            assert!(
                (got - best).abs() <= step + 1e-12,
                "bisection {got} vs grid {best}"
            );
        }
    }

    #[test]
    fn singleton_collection_equals_adjusted_single_test() {
        let spec = KernelSpec::uniform(KernelFamily::Gaussian, 0.5, 1).unwrap();
        let design = subdiagonal_design(30, 6).unwrap();
        let config = TestConfig::new(0.1, 40, 40, 30, vec![1.0]).unwrap();
        for seed in 0..30u64 {
            let mut rng = stream_rng(seed, STREAM_DATA);
            let x = sample_uniform_cube(30, 1, &mut rng);
            let y = sample_uniform_cube(30, 1, &mut rng);
            let problem = TestProblem::TwoSample { x: &x, y: &y };
            let collection = vec![KernelSelection::Single(spec.clone())];
            let agg = aggregated_test(&problem, &design, &collection, &config, seed).unwrap();
            if agg.degenerate_correction {
                assert!(!agg.reject);
                continue;
            }
            let data = pair_two_sample(&x, &y, &spec).unwrap();
            let single = single_test(&data, &design, agg.u_alpha, 40, seed).unwrap();
            assert_eq!(agg.reject, single.reject, "seed {seed}");
            assert_eq!(agg.per_bandwidth[0].quantile, single.quantile);
        }
    }

    #[test]
    fn aggregated_result_is_or_of_per_bandwidth() {
        let mut rng = stream_rng(3, STREAM_DATA);
        let z = sample_uniform_cube(60, 1, &mut rng);
        let model = ScoreModel::new(1, |x, out| out[0] = -x[0]);
        let problem = TestProblem::GoodnessOfFit { z: &z, model: &model };
        let collection = median_collection(&z, KernelFamily::Imq, 4).unwrap();
        let config = TestConfig::new(0.05, 60, 60, 20, uniform_weights(4)).unwrap();
        let design = subdiagonal_design(60, 10).unwrap();
        let result = aggregated_test(&problem, &design, &collection, &config, 5).unwrap();
        assert_eq!(
            result.reject,
            result.per_bandwidth.iter().any(|pb| pb.reject)
        );
        assert_eq!(result.l_used, design.len());
    }

    #[test]
    fn aggregated_test_deterministic() {
        let mut rng = stream_rng(17, STREAM_DATA);
        let x = sample_uniform_cube(40, 2, &mut rng);
        let y = sample_uniform_cube(40, 2, &mut rng);
        let problem = TestProblem::TwoSample { x: &x, y: &y };
        let pooled = {
            let mut rows: Vec<Vec<f64>> = (0..40).map(|i| x.row(i).to_vec()).collect();
            rows.extend((0..40).map(|i| y.row(i).to_vec()));
            SampleMatrix::from_rows(&rows).unwrap()
        };
        let collection = median_collection(&pooled, KernelFamily::Gaussian, 4).unwrap();
        let config = TestConfig::new(0.05, 30, 30, 20, uniform_weights(4)).unwrap();
        let design = subdiagonal_design(40, 8).unwrap();
        let a = aggregated_test(&problem, &design, &collection, &config, 99).unwrap();
        let b = aggregated_test(&problem, &design, &collection, &config, 99).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn scale_invariance_of_decisions() {
        // multiplying every h value by a positive constant rescales
        // statistics and quantiles together, leaving decisions unchanged
        let design = subdiagonal_design(25, 5).unwrap();
        let config = TestConfig::new(0.1, 40, 40, 20, vec![1.0]).unwrap();
        for seed in 0..10u64 {
            let mut rng = stream_rng(seed, STREAM_DATA);
            let base_values: Vec<f64> = (0..25 * 25)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let eval = move |scale: f64| {
                let values = base_values.clone();
                move |i: usize, j: usize| scale * (values[i * 25 + j] + values[j * 25 + i])
            };
            let data1 = PairedData::from_fn(Problem::TwoSample, 25, eval(1.0)).unwrap();
            let data2 = PairedData::from_fn(Problem::TwoSample, 25, eval(137.5)).unwrap();
            let r1 = single_test(&data1, &design, 0.1, config.b1, seed).unwrap();
            let r2 = single_test(&data2, &design, 0.1, config.b1, seed).unwrap();
            assert_eq!(r1.reject, r2.reject);
            assert!((r2.quantile - 137.5 * r1.quantile).abs() < 1e-9 * r1.quantile.abs().max(1.0));
        }
    }

    #[test]
    fn u_alpha_scale_invariant() {
        // rescaling all statistics and replicates by a positive constant
        // changes no comparison inside the correction
        let mut rng = stream_rng(53, 0);
        let config = TestConfig::new(0.2, 16, 16, 20, vec![0.5, 0.5]).unwrap();
        for _ in 0..10 {
            let originals: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let q: Vec<Vec<f64>> = (0..2)
                .map(|_| (0..16).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let c: Vec<Vec<f64>> = (0..2)
                .map(|_| (0..16).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let base = compute_u_alpha(&originals, &q, &c, &config).unwrap();
            let scale = 41.7;
            let originals2: Vec<f64> = originals.iter().map(|v| v * scale).collect();
            let q2: Vec<Vec<f64>> = q
                .iter()
                .map(|reps| reps.iter().map(|v| v * scale).collect())
                .collect();
            let c2: Vec<Vec<f64>> = c
                .iter()
                .map(|reps| reps.iter().map(|v| v * scale).collect())
                .collect();
            let scaled = compute_u_alpha(&originals2, &q2, &c2, &config).unwrap();
            assert_eq!(base, scaled);
        }
    }

    #[test]
    fn aggregated_null_level_small_case() {
        let design = subdiagonal_design(40, 16).unwrap();
        let config = TestConfig::new(0.05, 100, 100, 30, uniform_weights(2)).unwrap();
        let mut rejections = 0;
        let reps = 200;
        for seed in 0..reps {
            let mut rng = stream_rng(seed, STREAM_DATA);
            let x = sample_uniform_cube(40, 1, &mut rng);
            let y = sample_uniform_cube(40, 1, &mut rng);
            let problem = TestProblem::TwoSample { x: &x, y: &y };
            let collection = vec![
                KernelSelection::Single(KernelSpec::uniform(KernelFamily::Gaussian, 0.25, 1).unwrap()),
                KernelSelection::Single(KernelSpec::uniform(KernelFamily::Gaussian, 1.0, 1).unwrap()),
            ];
            if aggregated_test(&problem, &design, &collection, &config, seed)
                .unwrap()
                .reject
            {
                rejections += 1;
            }
        }
        let rate = rejections as f64 / reps as f64;
        assert!((0.01..=0.10).contains(&rate), "null rejection rate {rate}");
    }

    #[test]
    fn median_collection_powers_of_two() {
        // two points at distance 8: λ_med = 8, collection {1, 2, 4, 8}
        let points = SampleMatrix::from_rows(&[vec![0.0], vec![8.0]]).unwrap();
        let collection = median_collection(&points, KernelFamily::Gaussian, 4).unwrap();
        let bandwidths: Vec<f64> = collection
            .iter()
            .map(|sel| match sel {
                KernelSelection::Single(spec) => spec.bandwidths[0],
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(bandwidths, vec![1.0, 2.0, 4.0, 8.0]);
        assert_eq!(uniform_weights(collection.len()), vec![0.25; 4]);
    }

    #[test]
    fn hsic_collection_has_nine_pairs() {
        let mut rng = stream_rng(3, STREAM_DATA);
        let x = sample_uniform_cube(20, 1, &mut rng);
        let y = sample_uniform_cube(20, 2, &mut rng);
        let collection = hsic_collection(&x, &y).unwrap();
        assert_eq!(collection.len(), 9);
        for sel in &collection {
            match sel {
                KernelSelection::Product(k, l) => {
                    assert_eq!(k.dim(), 1);
                    assert_eq!(l.dim(), 2);
                }
                _ => panic!("expected kernel pairs"),
            }
        }
    }

    #[test]
    fn theoretical_collection_arithmetic() {
        // d = 1, L/N = 64: ℓ_max = ⌈2·log2(64 / ln ln 64)⌉ = 11
        let scalars = theoretical_scalars(6400, 100, 1).unwrap();
        assert_eq!(scalars.len(), 11);
        let weight_sum: f64 = scalars.iter().map(|(_, w)| w).sum();
        assert!(weight_sum <= 1.0);
        assert!((scalars[0].0 - 0.5).abs() < 1e-15);
        assert!((scalars[10].0 - 2f64.powi(-11)).abs() < 1e-20);

        let (collection, weights) = theoretical_collection(6400, 100, 3, KernelFamily::Gaussian)
            .unwrap();
        assert_eq!(collection.len(), weights.len());
        for sel in &collection {
            match sel {
                KernelSelection::Single(spec) => {
                    assert_eq!(spec.bandwidths.len(), 3);
                    assert!(spec.bandwidths.windows(2).all(|w| w[0] == w[1]));
                }
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn theoretical_collection_needs_large_ratio() {
        assert!(matches!(
            theoretical_scalars(200, 100, 1),
            Err(Error::EmptyCollection(_))
        ));
    }

    #[test]
    fn csv_row_matches_header_arity() {
        let mut rng = stream_rng(8, STREAM_DATA);
        let x = sample_uniform_cube(20, 1, &mut rng);
        let y = sample_uniform_cube(20, 1, &mut rng);
        let problem = TestProblem::TwoSample { x: &x, y: &y };
        let collection = vec![KernelSelection::Single(
            KernelSpec::uniform(KernelFamily::Gaussian, 0.5, 1).unwrap(),
        )];
        let config = TestConfig::new(0.05, 20, 20, 10, vec![1.0]).unwrap();
        let design = subdiagonal_design(20, 4).unwrap();
        let result = aggregated_test(&problem, &design, &collection, &config, 1).unwrap();
        let header = AggTestResult::csv_header(1);
        assert_eq!(
            header.split(',').count(),
            result.csv_row().split(',').count()
        );
        // JSON round-trips
        let back: AggTestResult = serde_json::from_str(&result.to_json()).unwrap();
        assert_eq!(back.reject, result.reject);
        assert_eq!(back.per_bandwidth.len(), result.per_bandwidth.len());
    }

    #[test]
    fn full_design_aggregated_runs() {
        let mut rng = stream_rng(12, STREAM_DATA);
        let z = sample_uniform_cube(24, 2, &mut rng);
        let problem = TestProblem::Independence { z: &z, d_x: 1 };
        let x_part = SampleMatrix::from_rows(
            &(0..24).map(|i| vec![z.row(i)[0]]).collect::<Vec<_>>(),
        )
        .unwrap();
        let y_part = SampleMatrix::from_rows(
            &(0..24).map(|i| vec![z.row(i)[1]]).collect::<Vec<_>>(),
        )
        .unwrap();
        let collection = hsic_collection(&x_part, &y_part).unwrap();
        let config = TestConfig::new(0.05, 25, 25, 15, uniform_weights(9)).unwrap();
        let design = full_design(12).unwrap();
        let result = aggregated_test(&problem, &design, &collection, &config, 3).unwrap();
        assert_eq!(result.n_items, 12);
        assert_eq!(result.l_used, 66);
    }
}
