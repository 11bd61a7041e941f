//! Gradient descent, its output-perturbed private variant, random-round
//! private SGD, and a mini-batch private SGD baseline.

mod gd;
mod minibatch;
mod output_perturbation;
mod random_round;

pub use gd::{descend, gd, solve_oracle, Erm, GdConfig, Objective, OracleSolution};
pub use minibatch::{baseline_accounted_epsilon, baseline_iterations, baseline_private_sgd, BaselineOptions};
pub use output_perturbation::{opgd, OpgdOptions};
pub use random_round::{round_distribution, rrpsgd, RoundDistribution, RrpsgdOptions};

use crate::losses::{Constants, Curvature};
use crate::mechanisms::{NoiseSpec, PrivacyBudget};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Non-private full gradient descent.
    Gd,
    /// Output-perturbed full gradient descent.
    Opgd,
    /// Random-round private SGD.
    Rrpsgd,
    /// Mini-batch private SGD.
    Baseline,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Gd => "gd",
            Algorithm::Opgd => "opgd",
            Algorithm::Rrpsgd => "rrpsgd",
            Algorithm::Baseline => "baseline",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "gd" => Ok(Algorithm::Gd),
            "opgd" => Ok(Algorithm::Opgd),
            "rrpsgd" => Ok(Algorithm::Rrpsgd),
            "baseline" => Ok(Algorithm::Baseline),
            other => Err(crate::error::invalid(
                "method",
                format!("expected opgd|rrpsgd|baseline|gd, got `{other}`"),
            )),
        }
    }
}

/// How noise entered a private solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseRecord {
    None,
    /// One draw added to the final iterate.
    Output(NoiseSpec),
    /// Fresh Gaussian noise of this per-coordinate scale at every step.
    PerStep { sigma: f64 },
}

impl NoiseRecord {
    pub fn scale(&self) -> f64 {
        match self {
            NoiseRecord::None => 0.0,
            NoiseRecord::Output(spec) => spec.scale,
            NoiseRecord::PerStep { sigma } => *sigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrivateSolution {
    pub w_priv: Vec<f64>,
    /// The iterate before output noise. Equal to `w_priv` for the SGD methods.
    pub w_pre_noise: Vec<f64>,
    pub algorithm: Algorithm,
    pub budget: Option<PrivacyBudget>,
    pub noise: NoiseRecord,
    /// `T` for the full-gradient methods, `R` for random-round SGD.
    pub iterations_run: u64,
    pub step_size: f64,
    pub sensitivity: Option<f64>,
    pub seed: RngStream,
    /// Per-example gradient evaluations performed.
    pub grad_evals: u64,
    /// Number of noise vectors drawn.
    pub noise_draws: u64,
    pub wall_time: f64,
    pub cpu_time: f64,
}

/// Iteration count with every order constant set to one.
///
/// Strongly convex: `ceil((mu^2 + beta^2)/(mu beta) * ln(mu^2 n^2 eps^2 D^2 / (L^2 q)))`;
/// convex: `ceil((beta^2 n^2 eps^2 D^2 / (L^2 q))^(1/3))`, where `q = d^2` under
/// pure DP and `q = d ln(1/delta)` otherwise. Arguments below one are clamped to
/// one and the result is at least 1. Non-convex losses use the convex formula.
pub fn theoretical_t(constants: &Constants, n: usize, d: usize, budget: PrivacyBudget, d_bound: f64) -> u64 {
    let (mu, beta, l) = (constants.mu, constants.smoothness, constants.lipschitz);
    let n = n as f64;
    let dim = d as f64;
    let eps = budget.epsilon();
    let q = if budget.is_pure() {
        dim * dim
    } else {
        dim * (1.0 / budget.delta()).ln()
    };
    let t = match constants.curvature {
        Curvature::StronglyConvex { .. } => {
            let arg = (mu * mu * n * n * eps * eps * d_bound * d_bound / (l * l * q)).max(1.0);
            (mu * mu + beta * beta) / (mu * beta) * arg.ln()
        }
        Curvature::Convex | Curvature::NonConvex => {
            let arg = (beta * beta * n * n * eps * eps * d_bound * d_bound / (l * l * q)).max(1.0);
            arg.cbrt()
        }
    };
    (t.ceil() as u64).max(1)
}

/// L2 sensitivity of `T` steps of full gradient descent over neighbouring
/// datasets: `3 L T eta / n` when `mu = 0`, else `5 L (1 + beta/mu) / (n beta)`.
pub fn sensitivity_bound(constants: &Constants, n: usize, eta: f64, t: u64) -> f64 {
    let (mu, beta, l) = (constants.mu, constants.smoothness, constants.lipschitz);
    let n = n as f64;
    if mu > 0.0 {
        5.0 * l * (1.0 + beta / mu) / (n * beta)
    } else {
        3.0 * l * t as f64 * eta / n
    }
}

/// The constant step used by the full-gradient methods: `1/(mu + beta)` when
/// strongly convex, `1/beta` otherwise.
pub fn default_step(constants: &Constants) -> f64 {
    match constants.curvature {
        Curvature::StronglyConvex { mu } => 1.0 / (mu + constants.smoothness),
        _ => 1.0 / constants.smoothness,
    }
}
