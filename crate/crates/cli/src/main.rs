//! `agginc` — aggregated kernel hypothesis tests on incomplete designs.
//!
//! Subcommands `mmdagginc`, `hsicagginc` and `ksdagginc` run one test on
//! CSV data and print the result as JSON on standard output (the decision
//! is echoed human-readably on standard error). `experiment` reproduces
//! the synthetic benchmark sweeps and writes CSV/JSON/SVG outputs.
//!
//! Exit codes: 0 success, 2 malformed input (missing or unparsable data),
//! 3 invalid configuration (test, kernel, or design parameters).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use agginc::harness::{
    emit_outputs, hsic_test, ksd_test, mmd_test, run_experiment, CollectionKind, DesignChoice,
    ExperimentPlan, ProblemSpec, SweepVariable,
};
use agginc::kernel::ScoreModel;
use agginc::models::GbrbmSpec;
use agginc::testing::{AggTestResult, TestConfig};
use agginc::{Error, SampleMatrix};

const SEED_ENV: &str = "AGGINC_SEED";

#[derive(Parser)]
#[command(name = "agginc", version, about = "Aggregated kernel tests on incomplete U-statistic designs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two-sample test: are X and Y drawn from the same distribution?
    Mmdagginc {
        /// CSV of samples from the first distribution (header row, one
        /// sample per row)
        x: PathBuf,
        /// CSV of samples from the second distribution
        y: PathBuf,
        #[command(flatten)]
        opts: TestOpts,
    },
    /// Independence test: are the rows of X and Y dependent?
    Hsicagginc {
        /// CSV of x-parts, row-paired with Y
        x: PathBuf,
        /// CSV of y-parts
        y: PathBuf,
        #[command(flatten)]
        opts: TestOpts,
    },
    /// Goodness-of-fit test of a score model against samples.
    Ksdagginc {
        /// CSV of samples
        z: PathBuf,
        /// Builtin score model: `gaussian` or `gbrbm`
        #[arg(long)]
        model: String,
        /// JSON parameters for the model, inline or `@file.json`.
        /// gaussian: {"dim": d} or {"mean": [..]}; gbrbm: a spec object
        #[arg(long)]
        model_params: String,
        #[command(flatten)]
        opts: TestOpts,
    },
    /// Run a benchmark sweep and tabulate rejection rates and runtimes.
    Experiment {
        /// Problem family
        #[arg(long, value_parser = ["two-sample", "independence", "goodness-of-fit"])]
        problem: String,
        /// Swept variable
        #[arg(long, value_parser = ["sample-size", "dimension", "difficulty", "sub-diagonals"])]
        sweep: String,
        /// Comma-separated sweep values
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Repetitions per sweep value
        #[arg(long, default_value_t = 100)]
        reps: usize,
        /// Worker threads for repetitions
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Base sample size (overridden by a sample-size sweep)
        #[arg(long, default_value_t = 500)]
        n: usize,
        /// Dimension d (two-sample) or d_x (independence, goodness-of-fit)
        #[arg(long, default_value_t = 1)]
        d: usize,
        /// d_y (independence) or d_h (goodness-of-fit)
        #[arg(long, default_value_t = 1)]
        d2: usize,
        /// Perturbations per axis
        #[arg(long, default_value_t = 2)]
        perturbations: usize,
        /// Inverse perturbation scale S (`inf` for the null)
        #[arg(long, default_value_t = 2.0)]
        scale: f64,
        /// GBRBM coupling noise (0 for the null)
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        /// Gibbs burn-in sweeps
        #[arg(long, default_value_t = 200)]
        burn_in: usize,
        /// Gibbs thinning
        #[arg(long, default_value_t = 10)]
        thinning: usize,
        #[command(flatten)]
        opts: TestOpts,
        #[arg(long)]
        out_csv: Option<PathBuf>,
        #[arg(long)]
        out_json: Option<PathBuf>,
        #[arg(long)]
        out_svg: Option<PathBuf>,
    },
}

#[derive(Args)]
struct TestOpts {
    /// Test level
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Quantile bootstrap replicates
    #[arg(long = "B1", default_value_t = 500)]
    b1: usize,
    /// Correction bootstrap replicates
    #[arg(long = "B2", default_value_t = 500)]
    b2: usize,
    /// Bisection steps for the level correction
    #[arg(long = "B3", default_value_t = 50)]
    b3: usize,
    /// Design: first R sub-diagonals (the default design, with R = 100)
    #[arg(long = "R", conflicts_with_all = ["full", "random_l"])]
    r: Option<usize>,
    /// Design: all pairs (quadratic time)
    #[arg(long, conflicts_with = "random_l")]
    full: bool,
    /// Design: L random pairs without replacement
    #[arg(long = "random-L")]
    random_l: Option<usize>,
    /// Bandwidth collection
    #[arg(long, default_value = "median", value_parser = ["median", "theoretical"])]
    collection: String,
    /// Master seed (default: AGGINC_SEED environment variable, then 0)
    #[arg(long)]
    seed: Option<u64>,
}

impl TestOpts {
    fn design_choice(&self) -> DesignChoice {
        if self.full {
            DesignChoice::Full
        } else if let Some(l) = self.random_l {
            DesignChoice::Random { l }
        } else {
            DesignChoice::SubDiagonal {
                r: self.r.unwrap_or(100),
            }
        }
    }

    fn collection_kind(&self) -> CollectionKind {
        match self.collection.as_str() {
            "theoretical" => CollectionKind::Theoretical,
            _ => CollectionKind::Median,
        }
    }

    fn seed(&self) -> u64 {
        self.seed
            .or_else(|| std::env::var(SEED_ENV).ok().and_then(|s| s.parse().ok()))
            .unwrap_or(0)
    }

    fn config_base(&self) -> (f64, usize, usize, usize) {
        (self.alpha, self.b1, self.b2, self.b3)
    }
}

fn load_matrix(path: &PathBuf) -> Result<SampleMatrix, Error> {
    SampleMatrix::read_csv_path(path)
}

fn score_model_from_args(
    name: &str,
    params: &str,
    data_dim: usize,
) -> Result<(ScoreModel, Option<GbrbmSpec>), Error> {
    let text = if let Some(path) = params.strip_prefix('@') {
        std::fs::read_to_string(path)?
    } else {
        params.to_string()
    };
    match name {
        "gaussian" => {
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| Error::InvalidConfig(format!("gaussian params: {e}")))?;
            if let Some(mean) = value.get("mean") {
                let mean: Vec<f64> = serde_json::from_value(mean.clone())
                    .map_err(|e| Error::InvalidConfig(format!("gaussian mean: {e}")))?;
                if mean.len() != data_dim {
                    return Err(Error::DimensionMismatch {
                        expected: data_dim,
                        got: mean.len(),
                    });
                }
                Ok((ScoreModel::gaussian_mean(mean), None))
            } else {
                let dim = value
                    .get("dim")
                    .and_then(|d| d.as_u64())
                    .map(|d| d as usize)
                    .unwrap_or(data_dim);
                if dim != data_dim {
                    return Err(Error::DimensionMismatch {
                        expected: data_dim,
                        got: dim,
                    });
                }
                Ok((ScoreModel::standard_gaussian(dim), None))
            }
        }
        "gbrbm" => {
            let spec: GbrbmSpec = serde_json::from_str(&text)
                .map_err(|e| Error::InvalidConfig(format!("gbrbm params: {e}")))?;
            if spec.d_x != data_dim {
                return Err(Error::DimensionMismatch {
                    expected: data_dim,
                    got: spec.d_x,
                });
            }
            let model = spec.score_model();
            Ok((model, Some(spec)))
        }
        other => Err(Error::InvalidConfig(format!(
            "unknown score model {other:?}; builtins are gaussian, gbrbm"
        ))),
    }
}

fn print_result(result: &AggTestResult, label: &str) {
    use std::io::Write;
    // tolerate a closed stdout (e.g. piped into `head`)
    let _ = writeln!(std::io::stdout(), "{}", result.to_json());
    let decision = if result.reject { "REJECT" } else { "accept" };
    eprintln!(
        "{label}: {decision} (u_alpha = {:.5}, L = {}, seed = {})",
        result.u_alpha, result.l_used, result.seed
    );
}

fn warn_on_replicate_bounds(alpha: f64, b1: usize, b2: usize, b3: usize, n_bandwidths: usize) {
    if let Ok(config) = TestConfig::new(
        alpha,
        b1,
        b2,
        b3,
        agginc::testing::uniform_weights(n_bandwidths.max(1)),
    ) {
        if let Some(notice) = config.replicate_bound_notice() {
            eprintln!("note: {notice}");
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Mmdagginc { x, y, opts } => {
            let x = load_matrix(&x)?;
            let y = load_matrix(&y)?;
            warn_on_replicate_bounds(opts.alpha, opts.b1, opts.b2, opts.b3, 4);
            let (result, truncated) = mmd_test(
                &x,
                &y,
                opts.design_choice(),
                opts.collection_kind(),
                opts.config_base(),
                opts.seed(),
            )?;
            if truncated {
                eprintln!(
                    "warning: unbalanced samples ({} vs {}); larger sample truncated to {}",
                    x.n_rows(),
                    y.n_rows(),
                    x.n_rows().min(y.n_rows())
                );
            }
            print_result(&result, "MMDAggInc");
        }
        Command::Hsicagginc { x, y, opts } => {
            let x = load_matrix(&x)?;
            let y = load_matrix(&y)?;
            warn_on_replicate_bounds(opts.alpha, opts.b1, opts.b2, opts.b3, 9);
            let result = hsic_test(
                &x,
                &y,
                opts.design_choice(),
                opts.collection_kind(),
                opts.config_base(),
                opts.seed(),
            )?;
            print_result(&result, "HSICAggInc");
        }
        Command::Ksdagginc {
            z,
            model,
            model_params,
            opts,
        } => {
            let z = load_matrix(&z)?;
            let (score, _) = score_model_from_args(&model, &model_params, z.dim())?;
            warn_on_replicate_bounds(opts.alpha, opts.b1, opts.b2, opts.b3, 4);
            let result = ksd_test(
                &z,
                &score,
                opts.design_choice(),
                opts.collection_kind(),
                opts.config_base(),
                opts.seed(),
            )?;
            print_result(&result, "KSDAggInc");
        }
        Command::Experiment {
            problem,
            sweep,
            values,
            reps,
            jobs,
            n,
            d,
            d2,
            perturbations,
            scale,
            sigma,
            burn_in,
            thinning,
            opts,
            out_csv,
            out_json,
            out_svg,
        } => {
            let problem = match problem.as_str() {
                "two-sample" => ProblemSpec::TwoSample {
                    n,
                    d,
                    perturbations,
                    scale_s: scale,
                },
                "independence" => ProblemSpec::Independence {
                    n,
                    d_x: d,
                    d_y: d2,
                    perturbations,
                    scale_s: scale,
                },
                _ => ProblemSpec::GoodnessOfFit {
                    n,
                    d_x: d,
                    d_h: d2,
                    sigma,
                    burn_in,
                    thinning,
                },
            };
            let sweep = match sweep.as_str() {
                "sample-size" => SweepVariable::SampleSize,
                "dimension" => SweepVariable::Dimension,
                "difficulty" => SweepVariable::Difficulty,
                _ => SweepVariable::SubDiagonals,
            };
            let plan = ExperimentPlan {
                problem,
                sweep,
                sweep_values: values,
                repetitions: reps,
                master_seed: opts.seed(),
                design: opts.design_choice(),
                collection: opts.collection_kind(),
                alpha: opts.alpha,
                b1: opts.b1,
                b2: opts.b2,
                b3: opts.b3,
                jobs,
            };
            warn_on_replicate_bounds(opts.alpha, opts.b1, opts.b2, opts.b3, 4);
            let table = run_experiment(&plan)?;
            let mut csv_text = Vec::new();
            table.write_csv(&mut csv_text)?;
            use std::io::Write;
            let _ = std::io::stdout().write_all(&csv_text);
            emit_outputs(
                &plan,
                &table,
                out_csv.as_deref(),
                out_json.as_deref(),
                out_svg.as_deref(),
            )?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(if err.is_config() { 3 } else { 2 })
        }
    }
}
