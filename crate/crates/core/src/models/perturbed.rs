//! Perturbed uniform densities on the unit cube.
//!
//! The density is the uniform density plus `P^d` disjointly supported
//! smooth bumps, one per cell of the regular `P × ... × P` grid:
//!
//! ```text
//! f(u) = 1 + (θ_a / S) · Π_i g(P·u_i - a_i)      on cell a,
//! ```
//!
//! where `g` is a C^∞ one-dimensional bump, supported on `(0, 1)`, with
//! zero mean and extremes exactly ±1, and `θ_a ∈ {-1, +1}` is the cell's
//! sign. The product of mean-zero one-dimensional factors makes every bump
//! integrate to zero along each axis, so the density integrates to one and
//! all marginals stay uniform — which the independence experiments rely
//! on. The extremes ±1 make the density range exactly `[1 - 1/S, 1 + 1/S]`.

use rand::Rng;

use crate::{Error, Result, SampleMatrix};

/// `exp(-1/(t(1-t)))` on `(0, 1)`, zero elsewhere; peaks at `exp(-4)`.
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        (-1.0 / (t * (1.0 - t))).exp()
    }
}

/// Mean-zero bump on `(0, 1)`: a positive lobe on the first half mirrored
/// by a negative lobe on the second, normalized to extremes ±1.
fn base_bump(t: f64) -> f64 {
    (smooth_step(2.0 * t) - smooth_step(2.0 * t - 1.0)) * 4.0f64.exp()
}

#[derive(Debug, Clone)]
pub struct PerturbedUniformSpec {
    d: usize,
    p: usize,
    s: f64,
    signs: Vec<f64>,
}

impl PerturbedUniformSpec {
    /// Builds a spec with explicit per-cell signs (`p^d` entries of ±1).
    /// `s = f64::INFINITY` is allowed and gives the plain uniform density.
    pub fn new(d: usize, p: usize, s: f64, signs: Vec<f64>) -> Result<Self> {
        if d == 0 || p == 0 {
            return Err(Error::InvalidConfig(
                "dimension and perturbation count must be positive".into(),
            ));
        }
        if s.is_nan() || s < 1.0 {
            return Err(Error::InvalidConfig(format!(
                "inverse scaling parameter must be >= 1, got {s}"
            )));
        }
        let cells = p.checked_pow(d as u32).ok_or_else(|| {
            Error::InvalidConfig(format!("p^d overflows for p = {p}, d = {d}"))
        })?;
        if signs.len() != cells {
            return Err(Error::InvalidConfig(format!(
                "need {cells} signs (= p^d), got {}",
                signs.len()
            )));
        }
        if signs.iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(Error::InvalidConfig("signs must be ±1".into()));
        }
        Ok(Self { d, p, s, signs })
    }

    /// Signs drawn i.i.d. Rademacher from the given generator.
    pub fn with_random_signs<R: Rng>(d: usize, p: usize, s: f64, rng: &mut R) -> Result<Self> {
        let cells = p.checked_pow(d as u32).ok_or_else(|| {
            Error::InvalidConfig(format!("p^d overflows for p = {p}, d = {d}"))
        })?;
        let signs = crate::rng::rademacher_signs(cells, rng);
        Self::new(d, p, s, signs)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Density upper bound, `1 + 1/S`.
    pub fn max_density(&self) -> f64 {
        1.0 + self.perturbation_scale()
    }

    fn perturbation_scale(&self) -> f64 {
        if self.s.is_infinite() {
            0.0
        } else {
            1.0 / self.s
        }
    }

    /// Evaluates the density at a point of the unit cube.
    pub fn density(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: u.len(),
            });
        }
        let mut cell = 0usize;
        let mut bump = 1.0f64;
        for (coordinate, &ui) in u.iter().enumerate() {
            if !(0.0..=1.0).contains(&ui) {
                return Err(Error::OutOfDomain {
                    coordinate,
                    value: ui,
                });
            }
            let scaled = ui * self.p as f64;
            let a = (scaled.floor() as usize).min(self.p - 1);
            cell = cell * self.p + a;
            bump *= base_bump(scaled - a as f64);
        }
        Ok(1.0 + self.perturbation_scale() * self.signs[cell] * bump)
    }

    /// `n` i.i.d. draws by rejection sampling from the uniform proposal;
    /// the acceptance ratio is `density / (1 + 1/S)`.
    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> SampleMatrix {
        let bound = self.max_density();
        let mut data = Vec::with_capacity(n * self.d);
        let mut point = vec![0.0; self.d];
        let mut accepted = 0;
        while accepted < n {
            for v in &mut point {
                *v = rng.random::<f64>();
            }
            let f = self.density(&point).expect("proposal stays in the cube");
            if rng.random::<f64>() * bound <= f {
                data.extend_from_slice(&point);
                accepted += 1;
            }
        }
        SampleMatrix::new(data, n, self.d).expect("nonempty dimensions")
    }
}

/// Joint draws on `[0,1]^(d_x+d_y)` whose x- and y-marginals are uniform.
/// The spec's dimension must equal `d_x + d_y`.
pub fn sample_independence_pair<R: Rng>(
    spec: &PerturbedUniformSpec,
    d_x: usize,
    d_y: usize,
    n: usize,
    rng: &mut R,
) -> Result<SampleMatrix> {
    if spec.dim() != d_x + d_y {
        return Err(Error::DimensionMismatch {
            expected: d_x + d_y,
            got: spec.dim(),
        });
    }
    Ok(spec.sample(n, rng))
}
