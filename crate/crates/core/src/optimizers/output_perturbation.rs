use super::gd::{descend, Erm};
use super::{default_step, sensitivity_bound, theoretical_t, Algorithm, NoiseRecord, PrivateSolution};
use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::losses::{Curvature, LossModel};
use crate::mechanisms::{output_noise_spec, PrivacyBudget};
use crate::rng::RngStream;
use crate::timing::Stopwatch;

/// Overrides for [`opgd`]. The defaults reproduce the calibrated algorithm.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OpgdOptions {
    /// Replace the theoretical iteration count.
    pub iterations: Option<u64>,
    /// Replace the sensitivity bound. Test harness only; a value below the
    /// bound voids the privacy guarantee.
    pub sensitivity: Option<f64>,
}

/// Output-perturbed full gradient descent.
///
/// Runs `T` full-gradient steps from the origin with `eta = 1/(mu+beta)`
/// (strongly convex) or `1/beta` (convex), then adds one noise vector
/// calibrated to the gradient-descent sensitivity bound: Gamma-Laplace for
/// pure budgets, Gaussian otherwise. `d_bound` is an upper bound on the norm
/// of the empirical minimizer.
pub fn opgd(
    model: &LossModel,
    data: &Dataset,
    budget: PrivacyBudget,
    d_bound: f64,
    opts: OpgdOptions,
    seed: RngStream,
) -> Result<PrivateSolution> {
    model.check_dataset(data)?;
    if model.curvature() == Curvature::NonConvex {
        return Err(invalid("loss", "output perturbation needs a convex loss"));
    }
    if !(d_bound > 0.0 && d_bound.is_finite()) {
        return Err(invalid("D", format!("must be positive, got {d_bound}")));
    }
    let clock = Stopwatch::start();
    let constants = model.certify_constants();
    let (n, d) = (data.len(), data.dim());
    let eta = default_step(&constants);
    let t = opts
        .iterations
        .unwrap_or_else(|| theoretical_t(&constants, n, d, budget, d_bound));
    let sensitivity = opts
        .sensitivity
        .unwrap_or_else(|| sensitivity_bound(&constants, n, eta, t));

    let w_t = descend(&Erm { model, data }, eta, t, &vec![0.0; d], |_, _| {});

    let spec = output_noise_spec(budget, sensitivity, d)?;
    let z = spec.sample(&mut seed.rng())?;
    let w_priv: Vec<f64> = w_t.iter().zip(&z).map(|(w, z)| w + z).collect();
    let (wall_time, cpu_time) = clock.elapsed();

    Ok(PrivateSolution {
        w_priv,
        w_pre_noise: w_t,
        algorithm: Algorithm::Opgd,
        budget: Some(budget),
        noise: NoiseRecord::Output(spec),
        iterations_run: t,
        step_size: eta,
        sensitivity: Some(sensitivity),
        seed,
        grad_evals: t * n as u64,
        noise_draws: 1,
        wall_time,
        cpu_time,
    })
}
