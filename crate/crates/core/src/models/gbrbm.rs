//! Gaussian-Bernoulli Restricted Boltzmann Machine.
//!
//! A latent-variable model with continuous visible units `x ∈ R^{d_x}` and
//! binary hidden units `h ∈ {-1, +1}^{d_h}`. The joint density is
//! intractable, but marginalizing the hidden units gives a closed-form
//! unnormalized log density and score:
//!
//! ```text
//! log p̃(x) = bᵀx - ‖x‖²/2 + Σ_j log(2 cosh((Wᵀx + c)_j))
//! score(x) = b - x + W tanh(Wᵀx + c)
//! ```
//!
//! which is all a Stein goodness-of-fit test needs. Sampling runs a block
//! Gibbs chain alternating `h | x` (independent signs) and `x | h`
//! (Gaussian with identity covariance).

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::kernel::ScoreModel;
use crate::{Error, Result, SampleMatrix};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GbrbmSpec {
    pub d_x: usize,
    pub d_h: usize,
    /// Visible bias, length `d_x`.
    pub visible_bias: Vec<f64>,
    /// Hidden bias, length `d_h`.
    pub hidden_bias: Vec<f64>,
    /// Coupling matrix, row-major `d_x × d_h`.
    pub coupling: Vec<f64>,
    /// Standard deviation of the noise injected into the coupling entries
    /// (zero for a model spec, positive for a perturbed sampling spec).
    pub sigma: f64,
}

impl GbrbmSpec {
    pub fn new(
        d_x: usize,
        d_h: usize,
        visible_bias: Vec<f64>,
        hidden_bias: Vec<f64>,
        coupling: Vec<f64>,
    ) -> Result<Self> {
        if d_x == 0 || d_h == 0 {
            return Err(Error::InvalidConfig(
                "GBRBM dimensions must be positive".into(),
            ));
        }
        if visible_bias.len() != d_x || hidden_bias.len() != d_h || coupling.len() != d_x * d_h {
            return Err(Error::InvalidConfig(format!(
                "GBRBM parameter sizes do not match d_x = {d_x}, d_h = {d_h}"
            )));
        }
        Ok(Self {
            d_x,
            d_h,
            visible_bias,
            hidden_bias,
            coupling,
            sigma: 0.0,
        })
    }

    /// Draws a model: biases standard Gaussian, coupling entries i.i.d.
    /// uniform on {-1, +1}.
    pub fn random_model<R: Rng>(d_x: usize, d_h: usize, rng: &mut R) -> Result<Self> {
        let visible_bias = (0..d_x).map(|_| rng.sample(StandardNormal)).collect();
        let hidden_bias = (0..d_h).map(|_| rng.sample(StandardNormal)).collect();
        let coupling = (0..d_x * d_h)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        Self::new(d_x, d_h, visible_bias, hidden_bias, coupling)
    }

    /// Copy with `N(0, sigma)` noise added to every coupling entry — the
    /// data distribution the goodness-of-fit experiments sample from.
    pub fn noisy_copy<R: Rng>(&self, sigma: f64, rng: &mut R) -> Result<Self> {
        if sigma < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "noise standard deviation must be >= 0, got {sigma}"
            )));
        }
        let mut copy = self.clone();
        copy.sigma = sigma;
        if sigma > 0.0 {
            for w in &mut copy.coupling {
                *w += sigma * rng.sample::<f64, _>(StandardNormal);
            }
        }
        Ok(copy)
    }

    /// `Wᵀx + c`.
    fn hidden_activation(&self, x: &[f64]) -> Vec<f64> {
        let mut a = self.hidden_bias.clone();
        for (i, &xi) in x.iter().enumerate() {
            let row = &self.coupling[i * self.d_h..(i + 1) * self.d_h];
            for (aj, wij) in a.iter_mut().zip(row) {
                *aj += wij * xi;
            }
        }
        a
    }

    /// Unnormalized log density of the visible units.
    pub fn log_density_unnormalized(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.d_x {
            return Err(Error::DimensionMismatch {
                expected: self.d_x,
                got: x.len(),
            });
        }
        let mut value = 0.0;
        for (xi, bi) in x.iter().zip(&self.visible_bias) {
            value += bi * xi - 0.5 * xi * xi;
        }
        for &a in &self.hidden_activation(x) {
            value += log_2cosh(a);
        }
        Ok(value)
    }

    /// Closed-form score `∇ log p̃(x) = b - x + W tanh(Wᵀx + c)`.
    pub fn score(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d_x {
            return Err(Error::DimensionMismatch {
                expected: self.d_x,
                got: x.len(),
            });
        }
        let activation = self.hidden_activation(x);
        let tanh: Vec<f64> = activation.iter().map(|a| a.tanh()).collect();
        let out = (0..self.d_x)
            .map(|i| {
                let row = &self.coupling[i * self.d_h..(i + 1) * self.d_h];
                let coupled: f64 = row.iter().zip(&tanh).map(|(w, t)| w * t).sum();
                self.visible_bias[i] - x[i] + coupled
            })
            .collect();
        Ok(out)
    }

    /// Wraps the closed-form score as a [`ScoreModel`] for testing.
    pub fn score_model(&self) -> ScoreModel {
        let spec = self.clone();
        ScoreModel::new(self.d_x, move |x, out| {
            let s = spec.score(x).expect("dimension checked by ScoreModel");
            out.copy_from_slice(&s);
        })
    }

    /// Block Gibbs sampler: `h | x` has independent signs with
    /// `P(h_j = 1) = logistic(2 (Wᵀx + c)_j)`; `x | h` is Gaussian with
    /// mean `W h + b` and identity covariance. Records every
    /// `thinning`-th state after `burn_in` sweeps.
    pub fn sample<R: Rng>(
        &self,
        n: usize,
        burn_in: usize,
        thinning: usize,
        rng: &mut R,
    ) -> Result<SampleMatrix> {
        if burn_in == 0 || thinning == 0 {
            return Err(Error::InvalidConfig(
                "burn-in and thinning must be positive".into(),
            ));
        }
        let mut x: Vec<f64> = self
            .visible_bias
            .iter()
            .map(|b| b + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mut hidden = vec![0.0f64; self.d_h];
        let mut sweep = |x: &mut Vec<f64>, rng: &mut R| {
            let activation = self.hidden_activation(x);
            for (hj, aj) in hidden.iter_mut().zip(&activation) {
                let p_plus = 1.0 / (1.0 + (-2.0 * aj).exp());
                *hj = if rng.random::<f64>() < p_plus { 1.0 } else { -1.0 };
            }
            for (i, xi) in x.iter_mut().enumerate() {
                let row = &self.coupling[i * self.d_h..(i + 1) * self.d_h];
                let mean: f64 =
                    self.visible_bias[i] + row.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>();
                *xi = mean + rng.sample::<f64, _>(StandardNormal);
            }
        };
        for _ in 0..burn_in {
            sweep(&mut x, rng);
        }
        let mut data = Vec::with_capacity(n * self.d_x);
        for _ in 0..n {
            for _ in 0..thinning {
                sweep(&mut x, rng);
            }
            data.extend_from_slice(&x);
        }
        SampleMatrix::new(data, n, self.d_x)
    }
}

/// `log(2 cosh(a))`, overflow-safe for large |a|.
fn log_2cosh(a: f64) -> f64 {
    a.abs() + (-2.0 * a.abs()).exp().ln_1p()
}
