//! Aggregated kernel hypothesis tests on incomplete U-statistic designs.
//!
//! This crate implements three nonparametric tests — MMDAggInc (two-sample),
//! HSICAggInc (independence) and KSDAggInc (goodness-of-fit) — whose statistics
//! are incomplete U-statistics summed over a configurable set of index pairs
//! (the *design*). The design size interpolates the cost of each test between
//! linear and quadratic in the sample size. Test thresholds are calibrated with
//! a wild bootstrap, and each test aggregates several kernel bandwidths with a
//! level correction computed by bisection.
//!
//! Module map:
//! - [`kernel`]: base kernels (Gaussian, IMQ), the second-order kernels
//!   `h_mmd` / `h_hsic` / `h_ksd`, score models, median bandwidth.
//! - [`design`]: index-pair designs (sub-diagonal, random, full).
//! - [`estimators`]: pairing of raw samples, incomplete/complete U-statistics,
//!   wild-bootstrap replicates over cached kernel evaluations.
//! - [`testing`]: single-bandwidth and aggregated tests, bandwidth collections,
//!   the bisection-computed level correction.
//! - [`models`]: synthetic data generators (perturbed uniforms, a
//!   Gaussian-Bernoulli RBM) used by the benchmark experiments.
//! - [`harness`]: experiment plans, repetition sweeps, CSV/JSON/SVG output.

pub mod design;
mod error;
pub mod estimators;
pub mod harness;
pub mod kernel;
pub mod matrix;
pub mod models;
pub mod rng;
pub mod testing;

pub(crate) mod sum;

pub use error::{Error, Result};
pub use matrix::SampleMatrix;
