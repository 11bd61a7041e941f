use rand::Rng;

use super::{Algorithm, NoiseRecord, PrivateSolution};
use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::mechanisms::{fill_gaussian, random_round_noise_sigma, PrivacyBudget};
use crate::losses::LossModel;
use crate::rng::RngStream;
use crate::timing::Stopwatch;

/// Distribution of the stopping round `R` over rounds `1..=len`.
#[derive(Debug, Clone, PartialEq)]
pub enum RoundDistribution {
    /// Every round equally likely (constant step schedule).
    Uniform { rounds: u64 },
    /// Explicit probabilities; entry `k` is `P(R = k + 1)`.
    Weighted { probabilities: Vec<f64>, cumulative: Vec<f64> },
}

impl RoundDistribution {
    pub fn uniform(rounds: u64) -> Self {
        RoundDistribution::Uniform { rounds }
    }

    pub fn len(&self) -> u64 {
        match self {
            RoundDistribution::Uniform { rounds } => *rounds,
            RoundDistribution::Weighted { probabilities, .. } => probabilities.len() as u64,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `P(R = round)` for `round` in `1..=len`.
    pub fn probability(&self, round: u64) -> f64 {
        if round == 0 || round > self.len() {
            return 0.0;
        }
        match self {
            RoundDistribution::Uniform { rounds } => 1.0 / *rounds as f64,
            RoundDistribution::Weighted { probabilities, .. } => probabilities[(round - 1) as usize],
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        (1..=self.len()).map(|r| self.probability(r)).collect()
    }

    /// Draw a round in `1..=len`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            RoundDistribution::Uniform { rounds } => rng.random_range(1..=*rounds),
            RoundDistribution::Weighted { cumulative, .. } => {
                let u: f64 = rng.random();
                let k = cumulative.partition_point(|&c| c <= u);
                (k.min(cumulative.len() - 1) + 1) as u64
            }
        }
    }
}

/// `P(R = k + 1) = (2 eta_k - beta eta_k^2) / sum_r (2 eta_r - beta eta_r^2)`.
/// Every step must satisfy `0 < eta_k < 2 / beta`.
pub fn round_distribution(schedule: &[f64], beta: f64) -> Result<RoundDistribution> {
    if schedule.is_empty() {
        return Err(invalid("schedule", "needs at least one step"));
    }
    if !(beta > 0.0) {
        return Err(invalid("beta", "must be positive"));
    }
    let limit = 2.0 / beta;
    if let Some(&eta) = schedule.iter().find(|&&e| !(e > 0.0 && e < limit)) {
        return Err(Error::StepSize { eta, limit });
    }
    let weights: Vec<f64> = schedule.iter().map(|&e| 2.0 * e - beta * e * e).collect();
    let total = crate::linalg::pairwise_sum(&weights);
    let probabilities: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let mut acc = 0.0;
    let mut cumulative: Vec<f64> = probabilities
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    *cumulative.last_mut().expect("non-empty") = 1.0;
    Ok(RoundDistribution::Weighted {
        probabilities,
        cumulative,
    })
}

/// Overrides for [`rrpsgd`]; test harness only.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RrpsgdOptions {
    /// Per-coordinate noise scale; `Some(0.0)` disables noise.
    pub noise_sigma: Option<f64>,
    /// Force the stopping round instead of drawing it.
    pub rounds: Option<u64>,
    /// Force the constant step size.
    pub step_size: Option<f64>,
}

// Sub-stream tags: the index stream is independent of the noise stream, so
// switching noise off leaves the sampled examples unchanged.
pub(crate) const ROUND_STREAM: u64 = 0;
pub(crate) const INDEX_STREAM: u64 = 1;
pub(crate) const NOISE_STREAM: u64 = 2;

/// Random-round private SGD.
///
/// Draws `R` from the round distribution over `1..=n^2`, then takes `R`
/// steps `w <- w - eta (grad f(w, xi) + z)` with `xi` uniform over the data
/// (with replacement) and `z ~ N(0, sigma_z^2 I)`. The step is constant,
/// `eta = min(1/beta, D_F/(sigma n))` with `sigma^2 = 4L^2 + d sigma_z^2` and
/// `D_F = sqrt(2 F(0)/beta)`, so the round distribution is uniform.
pub fn rrpsgd(
    model: &LossModel,
    data: &Dataset,
    budget: PrivacyBudget,
    opts: RrpsgdOptions,
    seed: RngStream,
) -> Result<PrivateSolution> {
    if budget.is_pure() {
        return Err(invalid("delta", "random-round private SGD requires delta > 0"));
    }
    model.check_dataset(data)?;
    let clock = Stopwatch::start();
    let constants = model.certify_constants();
    let (n, d) = (data.len(), data.dim());
    let (l, beta) = (constants.lipschitz, constants.smoothness);

    let sigma_z = match opts.noise_sigma {
        Some(s) if s >= 0.0 => s,
        Some(s) => return Err(invalid("noise_sigma", format!("must be non-negative, got {s}"))),
        None => random_round_noise_sigma(l, n, budget)?,
    };
    let w0 = vec![0.0; d];
    let eta = match opts.step_size {
        Some(e) => e,
        None => {
            let d_f = (2.0 * model.risk_unchecked(&w0, data) / beta).sqrt();
            let sigma = (4.0 * l * l + d as f64 * sigma_z * sigma_z).sqrt();
            (1.0 / beta).min(d_f / (sigma * n as f64))
        }
    };
    if !(eta > 0.0 && eta < 2.0 / beta) {
        return Err(Error::StepSize {
            eta,
            limit: 2.0 / beta,
        });
    }

    let max_rounds = (n as u64).saturating_mul(n as u64);
    let rounds = match opts.rounds {
        Some(r) if r <= max_rounds => r,
        Some(r) => return Err(invalid("rounds", format!("{r} exceeds n^2 = {max_rounds}"))),
        None => RoundDistribution::uniform(max_rounds).sample(&mut seed.child(ROUND_STREAM).rng()),
    };

    let mut index_rng = seed.child(INDEX_STREAM).rng();
    let mut noise_rng = seed.child(NOISE_STREAM).rng();
    let mut w = w0;
    let mut g = vec![0.0; d];
    let mut z = vec![0.0; d];
    let noisy = sigma_z > 0.0;
    for _ in 0..rounds {
        let i = index_rng.random_range(0..n);
        g.fill(0.0);
        model.add_gradient(&w, data.row(i), data.label(i), 1.0, &mut g);
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
        algorithm: Algorithm::Rrpsgd,
        budget: Some(budget),
        noise: NoiseRecord::PerStep { sigma: sigma_z },
        iterations_run: rounds,
        step_size: eta,
        sensitivity: None,
        seed,
        grad_evals: rounds,
        noise_draws: if noisy { rounds } else { 0 },
        wall_time,
        cpu_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, SyntheticKind, SyntheticSpec};
    use crate::losses::LossKind;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ridge(n: usize) -> Dataset {
        generate(&SyntheticSpec {
            kind: SyntheticKind::RidgeRegression,
            n,
            d: 3,
            noise_level: 0.1,
            seed: RngStream::new(17, 0),
        })
        .unwrap()
    }

    #[test]
    fn constant_schedule_is_uniform() {
        let dist = round_distribution(&[0.3; 16], 1.0).unwrap();
        for p in dist.probabilities() {
            assert_relative_eq!(p, 1.0 / 16.0, epsilon = 1e-15);
        }
        let u = RoundDistribution::uniform(16);
        for r in 1..=16 {
            assert_relative_eq!(dist.probability(r), u.probability(r), epsilon = 1e-15);
        }
    }

    #[test]
    fn weighted_example() {
        let dist = round_distribution(&[1.0, 0.5, 0.5, 0.5], 1.0).unwrap();
        let expect = [4.0 / 13.0, 3.0 / 13.0, 3.0 / 13.0, 3.0 / 13.0];
        for (p, e) in dist.probabilities().iter().zip(expect) {
            assert_relative_eq!(*p, e, epsilon = 1e-15);
        }
    }

    #[test]
    fn rejects_steps_at_or_beyond_two_over_beta() {
        assert!(matches!(round_distribution(&[0.5, 2.0], 1.0), Err(Error::StepSize { .. })));
        assert!(round_distribution(&[0.5, 0.0], 1.0).is_err());
        assert!(round_distribution(&[], 1.0).is_err());
    }

    #[test]
    fn weighted_sampling_follows_probabilities() {
        let dist = round_distribution(&[1.0, 0.5, 0.5, 0.5], 1.0).unwrap();
        let mut rng = RngStream::new(0, 0).rng();
        let mut counts = [0usize; 4];
        let draws = 200_000;
        for _ in 0..draws {
            counts[(dist.sample(&mut rng) - 1) as usize] += 1;
        }
        assert!((counts[0] as f64 / draws as f64 - 4.0 / 13.0).abs() < 0.005);
    }

    #[test]
    fn zero_noise_matches_plain_sgd_bit_for_bit() {
        let data = ridge(40);
        let model = LossModel::new(LossKind::huber(), 0.05).unwrap();
        let seed = RngStream::new(5, 5);
        let eta = 0.05;
        let rounds = 1600;
        let sol = rrpsgd(
            &model,
            &data,
            PrivacyBudget::new(1.0, 1e-3).unwrap(),
            RrpsgdOptions {
                noise_sigma: Some(0.0),
                rounds: Some(rounds),
                step_size: Some(eta),
            },
            seed,
        )
        .unwrap();

        let mut rng = seed.child(INDEX_STREAM).rng();
        let mut w = vec![0.0; 3];
        for _ in 0..rounds {
            let i = rng.random_range(0..data.len());
            let g = model.loss_grad(&w, &data.example(i)).unwrap();
            for (wi, gi) in w.iter_mut().zip(&g) {
                *wi -= eta * gi;
            }
        }
        assert_eq!(sol.w_priv, w);
        assert_eq!(sol.noise_draws, 0);
    }

    #[test]
    fn draws_fresh_noise_every_round() {
        let data = ridge(30);
        let model = LossModel::new(LossKind::huber(), 0.0).unwrap();
        let sol = rrpsgd(&model, &data, PrivacyBudget::new(1.0, 1e-3).unwrap(), Default::default(), RngStream::new(1, 2))
            .unwrap();
        assert!(sol.iterations_run >= 1 && sol.iterations_run <= 900);
        assert_eq!(sol.noise_draws, sol.iterations_run);
        assert_eq!(sol.grad_evals, sol.iterations_run);
        let NoiseRecord::PerStep { sigma } = sol.noise else { panic!() };
        assert_relative_eq!(
            sigma,
            random_round_noise_sigma(1.0, 30, PrivacyBudget::new(1.0, 1e-3).unwrap()).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn rejects_pure_budget_and_excess_rounds() {
        let data = ridge(10);
        let model = LossModel::new(LossKind::huber(), 0.0).unwrap();
        assert!(rrpsgd(&model, &data, PrivacyBudget::pure(1.0).unwrap(), Default::default(), RngStream::new(0, 0)).is_err());
        let opts = RrpsgdOptions {
            rounds: Some(101),
            ..Default::default()
        };
        assert!(rrpsgd(&model, &data, PrivacyBudget::new(1.0, 0.01).unwrap(), opts, RngStream::new(0, 0)).is_err());
    }

    proptest! {
        #[test]
        fn probabilities_sum_to_one(schedule in prop::collection::vec(1e-4f64..1.99, 1..300), beta in 0.1f64..1.0) {
            let schedule: Vec<f64> = schedule.iter().map(|e| e / beta).collect();
            let dist = round_distribution(&schedule, beta).unwrap();
            let total: f64 = dist.probabilities().iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
            prop_assert!(dist.probabilities().iter().all(|&p| p > 0.0));
        }

        #[test]
        fn round_never_exceeds_n_squared(n in 1usize..12, seed in any::<u64>()) {
            let data = ridge(n);
            let model = LossModel::new(LossKind::huber(), 0.0).unwrap();
            let sol = rrpsgd(&model, &data, PrivacyBudget::new(1.0, 1e-3).unwrap(), Default::default(), RngStream::new(seed, 0)).unwrap();
            prop_assert!(sol.iterations_run >= 1 && sol.iterations_run <= (n * n) as u64);
        }
    }
}
