//! Experiment orchestration: run aggregated tests on user data or on the
//! synthetic benchmark problems, sweep a variable over repetitions, and
//! emit CSV/JSON tables and SVG charts.
//!
//! Reported runtimes cover everything a test does once the data exists —
//! design construction, bandwidth collection (median heuristic included),
//! kernel caching, and both bootstrap families — and exclude data
//! generation. Repetition `rep` of a plan always uses seed
//! `master_seed ^ rep`, so reruns and parallel runs reproduce the same
//! decisions.

use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{full_design, random_design, subdiagonal_design, Design};
use crate::kernel::{KernelFamily, KernelSpec, ScoreModel};
use crate::models::{sample_independence_pair, GbrbmSpec, PerturbedUniformSpec};
use crate::rng::{stream_rng, STREAM_DATA, STREAM_GIBBS, STREAM_MODEL};
use crate::testing::{
    aggregated_test, hsic_collection, median_collection, theoretical_scalars, uniform_weights,
    AggTestResult, KernelSelection, TestConfig, TestProblem,
};
use crate::{Error, Result, SampleMatrix};

/// How the index-pair design is chosen for each test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignChoice {
    SubDiagonal { r: usize },
    Full,
    /// Random without replacement, redrawn per repetition from its seed.
    Random { l: usize },
}

impl DesignChoice {
    pub fn build(&self, n_items: usize, seed: u64) -> Result<Design> {
        match *self {
            DesignChoice::SubDiagonal { r } => subdiagonal_design(n_items, r),
            DesignChoice::Full => full_design(n_items),
            DesignChoice::Random { l } => random_design(n_items, l, seed),
        }
    }
}

/// Bandwidth collection strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollectionKind {
    /// Powers of two times the median pairwise distance.
    Median,
    /// Dyadic ladder `2^-ℓ` with weights `6/(π²ℓ²)`.
    Theoretical,
}

/// Synthetic benchmark problem with its generator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ProblemSpec {
    /// Uniform X against perturbed-uniform Y on `[0,1]^d`;
    /// `scale_s = inf` makes both uniform (the null).
    TwoSample {
        n: usize,
        d: usize,
        perturbations: usize,
        scale_s: f64,
    },
    /// Jointly perturbed-uniform pairs on `[0,1]^(d_x+d_y)`; the marginals
    /// are uniform, so `scale_s = inf` gives independent components.
    Independence {
        n: usize,
        d_x: usize,
        d_y: usize,
        perturbations: usize,
        scale_s: f64,
    },
    /// GBRBM model scored against samples from a noisy copy;
    /// `sigma = 0` is the null.
    GoodnessOfFit {
        n: usize,
        d_x: usize,
        d_h: usize,
        sigma: f64,
        burn_in: usize,
        thinning: usize,
    },
}

impl ProblemSpec {
    pub fn sample_size(&self) -> usize {
        match *self {
            ProblemSpec::TwoSample { n, .. }
            | ProblemSpec::Independence { n, .. }
            | ProblemSpec::GoodnessOfFit { n, .. } => n,
        }
    }

    /// Item count of the second-order pairing.
    pub fn n_items(&self) -> usize {
        match *self {
            ProblemSpec::TwoSample { n, .. } => n,
            ProblemSpec::Independence { n, .. } => n / 2,
            ProblemSpec::GoodnessOfFit { n, .. } => n,
        }
    }
}

/// Which plan field a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Sample size `n`.
    SampleSize,
    /// `d` (two-sample), `d_y` (independence), or `d_h` (goodness-of-fit).
    Dimension,
    /// `S` (perturbed uniforms) or `sigma` (GBRBM noise).
    Difficulty,
    /// Sub-diagonal count `R` of the design.
    SubDiagonals,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub problem: ProblemSpec,
    pub sweep: SweepVariable,
    pub sweep_values: Vec<f64>,
    pub repetitions: usize,
    pub master_seed: u64,
    pub design: DesignChoice,
    pub collection: CollectionKind,
    pub alpha: f64,
    pub b1: usize,
    pub b2: usize,
    pub b3: usize,
    /// Worker threads for repetitions; 1 runs serially.
    pub jobs: usize,
}

impl ExperimentPlan {
    fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be positive".into()));
        }
        if self.sweep_values.is_empty() {
            return Err(Error::InvalidConfig("sweep values are empty".into()));
        }
        if self.jobs == 0 {
            return Err(Error::InvalidConfig("jobs must be positive".into()));
        }
        Ok(())
    }

    /// The problem with the sweep value substituted in.
    fn problem_at(&self, value: f64) -> Result<ProblemSpec> {
        let mut problem = self.problem.clone();
        let as_count = |v: f64| -> Result<usize> {
            if v.fract() != 0.0 || v < 1.0 {
                return Err(Error::InvalidConfig(format!(
                    "sweep value {v} must be a positive integer"
                )));
            }
            Ok(v as usize)
        };
        match (self.sweep, &mut problem) {
            (SweepVariable::SampleSize, ProblemSpec::TwoSample { n, .. })
            | (SweepVariable::SampleSize, ProblemSpec::Independence { n, .. })
            | (SweepVariable::SampleSize, ProblemSpec::GoodnessOfFit { n, .. }) => {
                *n = as_count(value)?;
            }
            (SweepVariable::Dimension, ProblemSpec::TwoSample { d, .. }) => {
                *d = as_count(value)?;
            }
            (SweepVariable::Dimension, ProblemSpec::Independence { d_y, .. }) => {
                *d_y = as_count(value)?;
            }
            (SweepVariable::Dimension, ProblemSpec::GoodnessOfFit { d_h, .. }) => {
                *d_h = as_count(value)?;
            }
            (SweepVariable::Difficulty, ProblemSpec::TwoSample { scale_s, .. })
            | (SweepVariable::Difficulty, ProblemSpec::Independence { scale_s, .. }) => {
                *scale_s = value;
            }
            (SweepVariable::Difficulty, ProblemSpec::GoodnessOfFit { sigma, .. }) => {
                *sigma = value;
            }
            (SweepVariable::SubDiagonals, _) => {}
        }
        Ok(problem)
    }

    fn design_at(&self, value: f64) -> Result<DesignChoice> {
        if self.sweep == SweepVariable::SubDiagonals {
            if value.fract() != 0.0 || value < 1.0 {
                return Err(Error::InvalidConfig(format!(
                    "sub-diagonal sweep value {value} must be a positive integer"
                )));
            }
            Ok(DesignChoice::SubDiagonal { r: value as usize })
        } else {
            Ok(self.design)
        }
    }
}

/// Per-sweep-value fixed state: the data model is drawn once from the
/// master seed and shared by every repetition.
enum SweepContext {
    Perturbed(PerturbedUniformSpec),
    Gbrbm {
        data_spec: GbrbmSpec,
        score: ScoreModel,
    },
}

impl SweepContext {
    fn build(problem: &ProblemSpec, master_seed: u64) -> Result<Self> {
        let mut rng = stream_rng(master_seed, STREAM_MODEL);
        match *problem {
            ProblemSpec::TwoSample {
                d,
                perturbations,
                scale_s,
                ..
            } => Ok(SweepContext::Perturbed(
                PerturbedUniformSpec::with_random_signs(d, perturbations, scale_s, &mut rng)?,
            )),
            ProblemSpec::Independence {
                d_x,
                d_y,
                perturbations,
                scale_s,
                ..
            } => Ok(SweepContext::Perturbed(
                PerturbedUniformSpec::with_random_signs(
                    d_x + d_y,
                    perturbations,
                    scale_s,
                    &mut rng,
                )?,
            )),
            ProblemSpec::GoodnessOfFit { d_x, d_h, sigma, .. } => {
                let model = GbrbmSpec::random_model(d_x, d_h, &mut rng)?;
                let data_spec = model.noisy_copy(sigma, &mut rng)?;
                let score = model.score_model();
                Ok(SweepContext::Gbrbm { data_spec, score })
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RepetitionOutcome {
    pub reject: bool,
    pub runtime_secs: f64,
    pub l_used: usize,
}

/// Runs one repetition: generates the dataset from the repetition seed,
/// then times design construction, bandwidth collection, and the
/// aggregated test.
fn run_repetition(
    plan: &ExperimentPlan,
    problem: &ProblemSpec,
    design_choice: DesignChoice,
    context: &SweepContext,
    rep_seed: u64,
) -> Result<RepetitionOutcome> {
    let mut data_rng = stream_rng(rep_seed, STREAM_DATA);
    match (problem, context) {
        (ProblemSpec::TwoSample { n, d, .. }, SweepContext::Perturbed(spec)) => {
            let x = crate::models::sample_uniform_cube(*n, *d, &mut data_rng);
            let y = spec.sample(*n, &mut data_rng);
            let start = Instant::now();
            let design = design_choice.build(*n, rep_seed)?;
            let pooled = x.vstack(&y)?;
            let (collection, weights) = two_sample_collection(
                &pooled,
                plan.collection,
                design.len(),
                design.n_items,
            )?;
            let config = TestConfig::new(plan.alpha, plan.b1, plan.b2, plan.b3, weights)?;
            let problem = TestProblem::TwoSample { x: &x, y: &y };
            let result = aggregated_test(&problem, &design, &collection, &config, rep_seed)?;
            Ok(RepetitionOutcome {
                reject: result.reject,
                runtime_secs: start.elapsed().as_secs_f64(),
                l_used: result.l_used,
            })
        }
        (ProblemSpec::Independence { n, d_x, d_y, .. }, SweepContext::Perturbed(spec)) => {
            let z = sample_independence_pair(spec, *d_x, *d_y, *n, &mut data_rng)?;
            let start = Instant::now();
            let design = design_choice.build(*n / 2, rep_seed)?;
            let (collection, weights) =
                independence_collection(&z, *d_x, plan.collection, design.len(), design.n_items)?;
            let config = TestConfig::new(plan.alpha, plan.b1, plan.b2, plan.b3, weights)?;
            let problem = TestProblem::Independence { z: &z, d_x: *d_x };
            let result = aggregated_test(&problem, &design, &collection, &config, rep_seed)?;
            Ok(RepetitionOutcome {
                reject: result.reject,
                runtime_secs: start.elapsed().as_secs_f64(),
                l_used: result.l_used,
            })
        }
        (
            ProblemSpec::GoodnessOfFit {
                n,
                burn_in,
                thinning,
                ..
            },
            SweepContext::Gbrbm { data_spec, score },
        ) => {
            let mut gibbs_rng = stream_rng(rep_seed, STREAM_GIBBS);
            let z = data_spec.sample(*n, *burn_in, *thinning, &mut gibbs_rng)?;
            let start = Instant::now();
            let design = design_choice.build(*n, rep_seed)?;
            let (collection, weights) =
                gof_collection(&z, plan.collection, design.len(), design.n_items)?;
            let config = TestConfig::new(plan.alpha, plan.b1, plan.b2, plan.b3, weights)?;
            let problem = TestProblem::GoodnessOfFit { z: &z, model: score };
            let result = aggregated_test(&problem, &design, &collection, &config, rep_seed)?;
            Ok(RepetitionOutcome {
                reject: result.reject,
                runtime_secs: start.elapsed().as_secs_f64(),
                l_used: result.l_used,
            })
        }
        _ => unreachable!("context always matches the problem"),
    }
}

/// Bandwidth collection for the two-sample problem: Gaussian kernels, the
/// median computed on the pooled samples.
pub fn two_sample_collection(
    pooled: &SampleMatrix,
    kind: CollectionKind,
    l_design: usize,
    n_items: usize,
) -> Result<(Vec<KernelSelection>, Vec<f64>)> {
    match kind {
        CollectionKind::Median => {
            let collection = median_collection(pooled, KernelFamily::Gaussian, 4)?;
            let weights = uniform_weights(collection.len());
            Ok((collection, weights))
        }
        CollectionKind::Theoretical => crate::testing::theoretical_collection(
            l_design,
            n_items,
            pooled.dim(),
            KernelFamily::Gaussian,
        ),
    }
}

/// Bandwidth collection for the independence problem: Gaussian kernel
/// pairs over the x- and y-parts.
pub fn independence_collection(
    z: &SampleMatrix,
    d_x: usize,
    kind: CollectionKind,
    l_design: usize,
    n_items: usize,
) -> Result<(Vec<KernelSelection>, Vec<f64>)> {
    if d_x == 0 || d_x >= z.dim() {
        return Err(Error::InvalidConfig(format!(
            "d_x = {d_x} must split {}-dimensional samples",
            z.dim()
        )));
    }
    let d_y = z.dim() - d_x;
    match kind {
        CollectionKind::Median => {
            let x_rows: Vec<Vec<f64>> = (0..z.n_rows()).map(|i| z.row(i)[..d_x].to_vec()).collect();
            let y_rows: Vec<Vec<f64>> = (0..z.n_rows()).map(|i| z.row(i)[d_x..].to_vec()).collect();
            let x_part = SampleMatrix::from_rows(&x_rows)?;
            let y_part = SampleMatrix::from_rows(&y_rows)?;
            let collection = hsic_collection(&x_part, &y_part)?;
            let weights = uniform_weights(collection.len());
            Ok((collection, weights))
        }
        CollectionKind::Theoretical => {
            let scalars = theoretical_scalars(l_design, n_items, d_x + d_y)?;
            let mut collection = Vec::with_capacity(scalars.len());
            let mut weights = Vec::with_capacity(scalars.len());
            for (bandwidth, weight) in scalars {
                collection.push(KernelSelection::Product(
                    KernelSpec::uniform(KernelFamily::Gaussian, bandwidth, d_x)?,
                    KernelSpec::uniform(KernelFamily::Gaussian, bandwidth, d_y)?,
                ));
                weights.push(weight);
            }
            Ok((collection, weights))
        }
    }
}

/// Bandwidth collection for goodness-of-fit: IMQ kernels on the sample.
pub fn gof_collection(
    z: &SampleMatrix,
    kind: CollectionKind,
    l_design: usize,
    n_items: usize,
) -> Result<(Vec<KernelSelection>, Vec<f64>)> {
    match kind {
        CollectionKind::Median => {
            let collection = median_collection(z, KernelFamily::Imq, 4)?;
            let weights = uniform_weights(collection.len());
            Ok((collection, weights))
        }
        CollectionKind::Theoretical => {
            crate::testing::theoretical_collection(l_design, n_items, z.dim(), KernelFamily::Imq)
        }
    }
}

/// One row of a sweep: rejection rate and mean runtime over the
/// repetitions at one sweep value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_value: f64,
    pub rejection_rate: f64,
    pub mean_runtime_secs: f64,
    pub l_used: usize,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    /// Stable column order: sweep_value, rejection_rate,
    /// mean_runtime_secs, l_used, seeds (semicolon-joined).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record([
            "sweep_value",
            "rejection_rate",
            "mean_runtime_secs",
            "l_used",
            "seeds",
        ])?;
        for row in &self.rows {
            let seeds = row
                .seeds
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(";");
            wtr.write_record([
                format!("{}", row.sweep_value),
                format!("{}", row.rejection_rate),
                format!("{}", row.mean_runtime_secs),
                row.l_used.to_string(),
                seeds,
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (idx, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != 5 {
                return Err(Error::RaggedRows {
                    row: idx,
                    got: record.len(),
                    expected: 5,
                });
            }
            let field = |i: usize| -> Result<f64> {
                record[i].parse().map_err(|_| Error::MalformedNumber {
                    row: idx,
                    field: record[i].to_string(),
                })
            };
            let seeds = if record[4].is_empty() {
                Vec::new()
            } else {
                record[4]
                    .split(';')
                    .map(|s| {
                        s.parse::<u64>().map_err(|_| Error::MalformedNumber {
                            row: idx,
                            field: s.to_string(),
                        })
                    })
                    .collect::<Result<Vec<u64>>>()?
            };
            rows.push(ResultRow {
                sweep_value: field(0)?,
                rejection_rate: field(1)?,
                mean_runtime_secs: field(2)?,
                l_used: field(3)? as usize,
                seeds,
            });
        }
        Ok(Self { rows })
    }
}

/// Runs every sweep value of the plan. Repetition `rep` uses seed
/// `master_seed ^ rep`; with `jobs > 1` repetitions run on a thread pool,
/// which cannot change any decision because every repetition's randomness
/// is derived from its own seed.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ResultTable> {
    plan.validate()?;
    let mut rows = Vec::with_capacity(plan.sweep_values.len());
    for &value in &plan.sweep_values {
        let problem = plan.problem_at(value)?;
        let design_choice = plan.design_at(value)?;
        let context = SweepContext::build(&problem, plan.master_seed)?;
        let seeds: Vec<u64> = (0..plan.repetitions)
            .map(|rep| plan.master_seed ^ rep as u64)
            .collect();

        let run_one = |(rep, &seed): (usize, &u64)| -> Result<RepetitionOutcome> {
            run_repetition(plan, &problem, design_choice, &context, seed).map_err(|e| {
                Error::Repetition {
                    repetition: rep,
                    seed,
                    source: Box::new(e),
                }
            })
        };
        let outcomes: Vec<RepetitionOutcome> = if plan.jobs > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(plan.jobs)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            pool.install(|| {
                seeds
                    .par_iter()
                    .enumerate()
                    .map(run_one)
                    .collect::<Result<Vec<_>>>()
            })?
        } else {
            seeds
                .iter()
                .enumerate()
                .map(run_one)
                .collect::<Result<Vec<_>>>()?
        };

        let rejections = outcomes.iter().filter(|o| o.reject).count();
        let mean_runtime =
            outcomes.iter().map(|o| o.runtime_secs).sum::<f64>() / outcomes.len() as f64;
        rows.push(ResultRow {
            sweep_value: value,
            rejection_rate: rejections as f64 / outcomes.len() as f64,
            mean_runtime_secs: mean_runtime,
            l_used: outcomes[0].l_used,
            seeds,
        });
    }
    Ok(ResultTable { rows })
}

/// Full-provenance JSON report: plan, rows, package version.
#[derive(Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub package_version: String,
    pub master_seed: u64,
    pub plan: ExperimentPlan,
    pub rows: Vec<ResultRow>,
}

pub fn write_json_report<W: Write>(
    plan: &ExperimentPlan,
    table: &ResultTable,
    mut writer: W,
) -> Result<()> {
    let report = ExperimentReport {
        package_version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: plan.master_seed,
        plan: plan.clone(),
        rows: table.rows.clone(),
    };
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::InvalidConfig(format!("serialize report: {e}")))?;
    writer.write_all(text.as_bytes())?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// Minimal SVG line chart: rejection rate against the sweep variable, one
/// polyline per labelled series.
pub fn write_svg_chart<W: Write>(series: &[(String, Vec<(f64, f64)>)], mut writer: W) -> Result<()> {
    const WIDTH: f64 = 640.0;
    const HEIGHT: f64 = 440.0;
    const MARGIN: f64 = 56.0;
    const PALETTE: [&str; 6] = [
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f",
    ];

    let xs: Vec<f64> = series
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|p| p.0))
        .collect();
    let (x_min, x_max) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let x_span = if (x_max - x_min).abs() < 1e-12 {
        1.0
    } else {
        x_max - x_min
    };
    let to_x = |v: f64| MARGIN + (v - x_min) / x_span * (WIDTH - 2.0 * MARGIN);
    let to_y = |rate: f64| HEIGHT - MARGIN - rate.clamp(0.0, 1.0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str(&format!(
        "  <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    // axes
    svg.push_str(&format!(
        "  <line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    ));
    svg.push_str(&format!(
        "  <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN
    ));
    for tick in 0..=5 {
        let rate = tick as f64 / 5.0;
        let y = to_y(rate);
        svg.push_str(&format!(
            "  <text x=\"{x}\" y=\"{y}\" font-size=\"11\" text-anchor=\"end\">{rate:.1}</text>\n",
            x = MARGIN - 6.0,
            y = y + 4.0
        ));
        svg.push_str(&format!(
            "  <line x1=\"{x1}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"#cccccc\"/>\n",
            x1 = MARGIN,
            x2 = WIDTH - MARGIN,
        ));
    }
    for (idx, (label, points)) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let coords = points
            .iter()
            .map(|&(x, rate)| format!("{:.2},{:.2}", to_x(x), to_y(rate)))
            .collect::<Vec<_>>()
            .join(" ");
        svg.push_str(&format!(
            "  <polyline points=\"{coords}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n"
        ));
        svg.push_str(&format!(
            "  <text x=\"{x}\" y=\"{y}\" font-size=\"12\" fill=\"{color}\">{label}</text>\n",
            x = WIDTH - MARGIN + 4.0,
            y = MARGIN + 16.0 * idx as f64
        ));
    }
    for &(x, label_every) in &[(x_min, true), (x_max, true)] {
        if label_every {
            svg.push_str(&format!(
                "  <text x=\"{px}\" y=\"{py}\" font-size=\"11\" text-anchor=\"middle\">{x}</text>\n",
                px = to_x(x),
                py = HEIGHT - MARGIN + 16.0
            ));
        }
    }
    svg.push_str("</svg>\n");
    writer.write_all(svg.as_bytes())?;
    Ok(())
}

/// Writes whichever outputs have paths: CSV table, JSON report, SVG chart
/// (the table as a single series).
pub fn emit_outputs(
    plan: &ExperimentPlan,
    table: &ResultTable,
    csv_path: Option<&Path>,
    json_path: Option<&Path>,
    svg_path: Option<&Path>,
) -> Result<()> {
    if let Some(path) = csv_path {
        table.write_csv(std::fs::File::create(path)?)?;
    }
    if let Some(path) = json_path {
        write_json_report(plan, table, std::fs::File::create(path)?)?;
    }
    if let Some(path) = svg_path {
        let series = vec![(
            "rejection rate".to_string(),
            table
                .rows
                .iter()
                .map(|r| (r.sweep_value, r.rejection_rate))
                .collect(),
        )];
        write_svg_chart(&series, std::fs::File::create(path)?)?;
    }
    Ok(())
}

/// Two-sample test on user data, assembling design, collection, and
/// config. Returns the result and whether the samples were truncated.
pub fn mmd_test(
    x: &SampleMatrix,
    y: &SampleMatrix,
    design_choice: DesignChoice,
    collection_kind: CollectionKind,
    config_base: (f64, usize, usize, usize),
    seed: u64,
) -> Result<(AggTestResult, bool)> {
    let n_items = x.n_rows().min(y.n_rows());
    let truncated = x.n_rows() != y.n_rows();
    let design = design_choice.build(n_items, seed)?;
    let pooled = x.vstack(y)?;
    let (collection, weights) =
        two_sample_collection(&pooled, collection_kind, design.len(), n_items)?;
    let (alpha, b1, b2, b3) = config_base;
    let config = TestConfig::new(alpha, b1, b2, b3, weights)?;
    let problem = TestProblem::TwoSample { x, y };
    Ok((
        aggregated_test(&problem, &design, &collection, &config, seed)?,
        truncated,
    ))
}

/// Independence test on user data given as paired x/y matrices with equal
/// row counts.
pub fn hsic_test(
    x: &SampleMatrix,
    y: &SampleMatrix,
    design_choice: DesignChoice,
    collection_kind: CollectionKind,
    config_base: (f64, usize, usize, usize),
    seed: u64,
) -> Result<AggTestResult> {
    let z = x.hstack(y)?;
    let n_items = z.n_rows() / 2;
    let design = design_choice.build(n_items, seed)?;
    let (collection, weights) =
        independence_collection(&z, x.dim(), collection_kind, design.len(), n_items)?;
    let (alpha, b1, b2, b3) = config_base;
    let config = TestConfig::new(alpha, b1, b2, b3, weights)?;
    let problem = TestProblem::Independence { z: &z, d_x: x.dim() };
    aggregated_test(&problem, &design, &collection, &config, seed)
}

/// Goodness-of-fit test of a score model against user data.
pub fn ksd_test(
    z: &SampleMatrix,
    model: &ScoreModel,
    design_choice: DesignChoice,
    collection_kind: CollectionKind,
    config_base: (f64, usize, usize, usize),
    seed: u64,
) -> Result<AggTestResult> {
    let n_items = z.n_rows();
    let design = design_choice.build(n_items, seed)?;
    let (collection, weights) = gof_collection(z, collection_kind, design.len(), n_items)?;
    let (alpha, b1, b2, b3) = config_base;
    let config = TestConfig::new(alpha, b1, b2, b3, weights)?;
    let problem = TestProblem::GoodnessOfFit { z, model };
    aggregated_test(&problem, &design, &collection, &config, seed)
}
