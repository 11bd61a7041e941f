use rand::seq::index;

use super::{Algorithm, NoiseRecord, PrivateSolution};
use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::losses::LossModel;
use crate::mechanisms::{amplified_budget, composed_epsilon, fill_gaussian, gaussian_mechanism_sigma, random_round_noise_sigma, PrivacyBudget};
use crate::rng::RngStream;
use crate::timing::Stopwatch;

/// Overrides for [`baseline_private_sgd`]; test harness only.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BaselineOptions {
    /// Per-coordinate noise scale; `Some(0.0)` disables noise.
    pub noise_sigma: Option<f64>,
    /// Replace `T = ceil(n^2 / m)`.
    pub iterations: Option<u64>,
    /// Replace the constant step size.
    pub step_size: Option<f64>,
}

const INDEX_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

fn check_batch(n: usize, m: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(invalid("batch_size", format!("must lie in 1..={n}, got {m}")));
    }
    Ok(())
}

/// Number of steps the baseline takes: `ceil(n^2 / m)`.
pub fn baseline_iterations(n: usize, m: usize) -> u64 {
    let n = n as u64;
    (n * n).div_ceil(m as u64)
}

/// Mini-batch private SGD.
///
/// Takes `T = ceil(n^2/m)` steps `w <- w - eta (g_B + z)`, where `g_B` is the
/// gradient averaged over `m` distinct examples drawn uniformly and `z` is
/// Gaussian with the random-round per-coordinate scale `sigma_z`. The step is
/// `eta = D / (sigma sqrt(T))` with `sigma^2 = 4L^2 + d sigma_z^2`.
pub fn baseline_private_sgd(
    model: &LossModel,
    data: &Dataset,
    budget: PrivacyBudget,
    m: usize,
    d_bound: f64,
    opts: BaselineOptions,
    seed: RngStream,
) -> Result<PrivateSolution> {
    if budget.is_pure() {
        return Err(invalid("delta", "the mini-batch baseline requires delta > 0"));
    }
    model.check_dataset(data)?;
    let (n, d) = (data.len(), data.dim());
    check_batch(n, m)?;
    if !(d_bound > 0.0 && d_bound.is_finite()) {
        return Err(invalid("D", format!("must be positive, got {d_bound}")));
    }
    let clock = Stopwatch::start();
    let l = model.certify_constants().lipschitz;
    let sigma_z = match opts.noise_sigma {
        Some(s) if s >= 0.0 => s,
        Some(s) => return Err(invalid("noise_sigma", format!("must be non-negative, got {s}"))),
        None => random_round_noise_sigma(l, n, budget)?,
    };
    let t = opts.iterations.unwrap_or_else(|| baseline_iterations(n, m));
    let eta = match opts.step_size {
        Some(e) if e > 0.0 => e,
        Some(e) => return Err(invalid("step_size", format!("must be positive, got {e}"))),
        None => {
            let sigma = (4.0 * l * l + d as f64 * sigma_z * sigma_z).sqrt();
            d_bound / (sigma * (t as f64).sqrt())
        }
    };

    let mut index_rng = seed.child(INDEX_STREAM).rng();
    let mut noise_rng = seed.child(NOISE_STREAM).rng();
    let mut w = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut z = vec![0.0; d];
    let noisy = sigma_z > 0.0;
    let scale = 1.0 / m as f64;
    for _ in 0..t {
        g.fill(0.0);
        if m == n {
            model.full_gradient_into(&w, data, &mut g);
        } else {
            for i in index::sample(&mut index_rng, n, m) {
                model.add_gradient(&w, data.row(i), data.label(i), scale, &mut g);
            }
        }
        if noisy {
            fill_gaussian(sigma_z, &mut noise_rng, &mut z);
            for ((wi, gi), zi) in w.iter_mut().zip(&g).zip(&z) {
                *wi -= eta * (gi + zi);
            }
        } else {
            for (wi, gi) in w.iter_mut().zip(&g) {
                *wi -= eta * gi;
            }
        }
    }
    let (wall_time, cpu_time) = clock.elapsed();

    Ok(PrivateSolution {
        w_pre_noise: w.clone(),
        w_priv: w,
        algorithm: Algorithm::Baseline,
        budget: Some(budget),
        noise: NoiseRecord::PerStep { sigma: sigma_z },
        iterations_run: t,
        step_size: eta,
        sensitivity: None,
        seed,
        grad_evals: t * m as u64,
        noise_draws: if noisy { t } else { 0 },
        wall_time,
        cpu_time,
    })
}

/// Epsilon actually guaranteed by the baseline's noise.
///
/// Each step is a Gaussian mechanism on the averaged batch gradient with L2
/// sensitivity `2L/m` and failure probability `delta0 = delta / (2 T alpha)`,
/// amplified by sampling at `alpha = m/n`, then composed over `T` steps with
/// `delta' = delta/2`. The overall failure probability is `delta`.
pub fn baseline_accounted_epsilon(
    lipschitz: f64,
    n: usize,
    m: usize,
    sigma_z: f64,
    budget: PrivacyBudget,
) -> Result<f64> {
    check_batch(n, m)?;
    if budget.is_pure() {
        return Err(invalid("delta", "accounting needs delta > 0"));
    }
    if !(sigma_z > 0.0) {
        return Err(invalid("sigma_z", "must be positive"));
    }
    let t = baseline_iterations(n, m);
    let alpha = m as f64 / n as f64;
    let delta0 = budget.delta() / (2.0 * t as f64 * alpha);
    // Invert the Gaussian-mechanism calibration for the per-step epsilon.
    let unit = PrivacyBudget::new(1.0, delta0.min(0.5))?;
    let eps0 = gaussian_mechanism_sigma(unit, 2.0 * lipschitz / m as f64)? / sigma_z;
    let step = amplified_budget(PrivacyBudget::new(eps0, delta0.min(0.5))?, alpha)?;
    composed_epsilon(step.epsilon(), t, budget.delta() / 2.0)
}
