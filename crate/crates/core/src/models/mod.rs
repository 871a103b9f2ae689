//! Synthetic data models for the benchmark experiments: perturbed uniform
//! densities for the two-sample and independence problems, and a
//! Gaussian-Bernoulli Restricted Boltzmann Machine for goodness-of-fit.

mod gbrbm;
mod perturbed;

pub use gbrbm::GbrbmSpec;
pub use perturbed::{sample_independence_pair, PerturbedUniformSpec};

use rand::Rng;

use crate::SampleMatrix;

/// `n` i.i.d. draws from the uniform density on `[0, 1]^d`.
pub fn sample_uniform_cube<R: Rng>(n: usize, d: usize, rng: &mut R) -> SampleMatrix {
    let data: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
    SampleMatrix::new(data, n, d).expect("nonempty dimensions")
}
