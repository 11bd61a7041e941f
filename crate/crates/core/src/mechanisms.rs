//! Noise samplers and privacy accounting.
//!
//! Two noise families are used by the optimizers:
//!
//! * [`NoiseKind::GammaLaplace`], density proportional to `exp(-|z|_2 / sigma)`
//!   on `R^d`. It is drawn in polar form: a `Gamma(d, sigma)` radius times a
//!   direction uniform on the unit sphere, so `E|z|^2 = d(d+1) sigma^2`.
//! * [`NoiseKind::Gaussian`], i.i.d. `N(0, sigma^2)` coordinates, so
//!   `E|z|^2 = d sigma^2`.
//!
//! All logarithms are natural.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{invalid, Result};

/// An `(epsilon, delta)` guarantee; `delta == 0` means pure epsilon-DP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    epsilon: f64,
    delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(invalid("epsilon", format!("must be positive and finite, got {epsilon}")));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(invalid("delta", format!("must lie in [0, 1), got {delta}")));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn pure(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 0.0)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn is_pure(&self) -> bool {
        self.delta == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    GammaLaplace,
    Gaussian,
}

impl NoiseKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            NoiseKind::GammaLaplace => "gamma-laplace",
            NoiseKind::Gaussian => "gaussian",
        }
    }
}

impl std::fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma-laplace" => Ok(NoiseKind::GammaLaplace),
            "gaussian" => Ok(NoiseKind::Gaussian),
            other => Err(invalid("noise kind", format!("unknown kind `{other}`"))),
        }
    }
}

/// A fully specified noise distribution. A zero `scale` is the degenerate
/// point mass at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub scale: f64,
    pub dimension: usize,
}

impl NoiseSpec {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        if self.scale == 0.0 {
            if self.dimension == 0 {
                return Err(invalid("d", "dimension must be at least 1"));
            }
            return Ok(vec![0.0; self.dimension]);
        }
        match self.kind {
            NoiseKind::GammaLaplace => sample_gamma_laplace(self.dimension, self.scale, rng),
            NoiseKind::Gaussian => sample_gaussian(self.dimension, self.scale, rng),
        }
    }

    /// `E|z|^2` under this distribution.
    pub fn expected_sq_norm(&self) -> f64 {
        let d = self.dimension as f64;
        let s2 = self.scale * self.scale;
        match self.kind {
            NoiseKind::GammaLaplace => d * (d + 1.0) * s2,
            NoiseKind::Gaussian => d * s2,
        }
    }
}

fn check_sampler_args(d: usize, sigma: f64) -> Result<()> {
    if d == 0 {
        return Err(invalid("d", "dimension must be at least 1"));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma", format!("must be positive and finite, got {sigma}")));
    }
    Ok(())
}

/// Draw from the density proportional to `exp(-|z|_2 / sigma)` on `R^d`.
pub fn sample_gamma_laplace<R: Rng + ?Sized>(d: usize, sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
    check_sampler_args(d, sigma)?;
    let radius = Gamma::new(d as f64, sigma)
        .map_err(|e| invalid("sigma", e.to_string()))?
        .sample(rng);
    let mut z = unit_direction(d, rng);
    for zi in &mut z {
        *zi *= radius;
    }
    Ok(z)
}

/// Draw `d` independent `N(0, sigma^2)` coordinates.
pub fn sample_gaussian<R: Rng + ?Sized>(d: usize, sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
    check_sampler_args(d, sigma)?;
    let mut z = vec![0.0; d];
    fill_gaussian(sigma, rng, &mut z);
    Ok(z)
}

/// Overwrite `out` with `N(0, sigma^2)` draws. No validation; hot loops only.
#[inline]
pub fn fill_gaussian<R: Rng + ?Sized>(sigma: f64, rng: &mut R, out: &mut [f64]) {
    for o in out {
        let g: f64 = StandardNormal.sample(rng);
        *o = sigma * g;
    }
}

/// Uniform point on the unit sphere in `R^d`, by normalizing a Gaussian vector.
pub fn unit_direction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let mut v = vec![0.0; d];
    loop {
        fill_gaussian(1.0, rng, &mut v);
        let n = crate::linalg::norm(&v);
        if n > 0.0 {
            for x in &mut v {
                *x /= n;
            }
            return v;
        }
    }
}

/// Noise for releasing a vector with L2 sensitivity `sensitivity` once.
///
/// Pure budgets get `GammaLaplace` with `sigma = sensitivity / epsilon`.
/// Otherwise the density `exp(-eps^2 |z|^2 / (4 ln(2/delta) sensitivity^2))`
/// is used, i.e. Gaussian with `sigma = sensitivity * sqrt(2 ln(2/delta)) / epsilon`.
/// Zero sensitivity yields a zero-scale spec.
pub fn output_noise_spec(budget: PrivacyBudget, sensitivity: f64, d: usize) -> Result<NoiseSpec> {
    if !(sensitivity >= 0.0 && sensitivity.is_finite()) {
        return Err(invalid("sensitivity", format!("must be non-negative and finite, got {sensitivity}")));
    }
    if d == 0 {
        return Err(invalid("d", "dimension must be at least 1"));
    }
    let eps = budget.epsilon();
    Ok(if budget.is_pure() {
        NoiseSpec {
            kind: NoiseKind::GammaLaplace,
            scale: sensitivity / eps,
            dimension: d,
        }
    } else {
        NoiseSpec {
            kind: NoiseKind::Gaussian,
            scale: sensitivity * (2.0 * (2.0 / budget.delta()).ln()).sqrt() / eps,
            dimension: d,
        }
    })
}

/// Classical Gaussian mechanism scale `sqrt(2 ln(1.25/delta)) * l2 / epsilon`.
pub fn gaussian_mechanism_sigma(budget: PrivacyBudget, l2_sensitivity: f64) -> Result<f64> {
    if budget.is_pure() {
        return Err(invalid("delta", "the Gaussian mechanism needs delta > 0"));
    }
    if !(l2_sensitivity > 0.0) {
        return Err(invalid("l2_sensitivity", "must be positive"));
    }
    Ok((2.0 * (1.25 / budget.delta()).ln()).sqrt() * l2_sensitivity / budget.epsilon())
}

/// Per-coordinate standard deviation of the per-step noise in random-round
/// private SGD: `sigma^2 = 4 L^2 ln(3n/delta) ln(2/delta) / epsilon^2`.
pub fn random_round_noise_sigma(lipschitz: f64, n: usize, budget: PrivacyBudget) -> Result<f64> {
    if budget.is_pure() {
        return Err(invalid("delta", "random-round private SGD requires delta > 0"));
    }
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(invalid("lipschitz", format!("must be positive, got {lipschitz}")));
    }
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let delta = budget.delta();
    let var = 4.0 * lipschitz * lipschitz * (3.0 * n as f64 / delta).ln() * (2.0 / delta).ln()
        / (budget.epsilon() * budget.epsilon());
    Ok(var.sqrt())
}

/// Budget of a mechanism run on a uniformly random `alpha` fraction of the
/// data: `(2 alpha epsilon, alpha delta)`.
pub fn amplified_budget(budget: PrivacyBudget, alpha: f64) -> Result<PrivacyBudget> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid("alpha", format!("must lie in (0, 1], got {alpha}")));
    }
    PrivacyBudget::new(2.0 * alpha * budget.epsilon(), alpha * budget.delta())
}

/// Strong composition of `t` adaptive `epsilon`-DP steps:
/// `sqrt(2 t ln(1/delta')) epsilon + t epsilon (e^epsilon - 1)`.
pub fn composed_epsilon(per_step_epsilon: f64, t: u64, delta_prime: f64) -> Result<f64> {
    if !(per_step_epsilon > 0.0 && per_step_epsilon.is_finite()) {
        return Err(invalid("per_step_epsilon", "must be positive and finite"));
    }
    if t == 0 {
        return Err(invalid("T", "must be at least 1"));
    }
    if !(delta_prime > 0.0 && delta_prime < 1.0) {
        return Err(invalid("delta_prime", format!("must lie in (0, 1), got {delta_prime}")));
    }
    let t = t as f64;
    let eps = per_step_epsilon;
    Ok((2.0 * t * (1.0 / delta_prime).ln()).sqrt() * eps + t * eps * eps.exp_m1())
}

/// Strong composition of `t` copies of `per_step`; delta becomes `t delta + delta'`.
pub fn compose(per_step: PrivacyBudget, t: u64, delta_prime: f64) -> Result<(f64, f64)> {
    let eps = composed_epsilon(per_step.epsilon(), t, delta_prime)?;
    Ok((eps, t as f64 * per_step.delta() + delta_prime))
}
