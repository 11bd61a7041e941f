//! Experiment harness: sweeps of (dataset, mu, epsilon, method) cells with
//! repeated trials, summary tables, and scaling studies.
//!
//! Each cell solves the non-private reference `w_hat` once, then runs every
//! method `trials` times on independent streams derived from
//! `(seed, dataset, mu, epsilon, method, trial)`. Errors are
//! `F(w_priv) - F(w_hat)`. Runtimes are per-thread CPU seconds of the
//! optimizer call alone.

mod config;
mod scaling;
mod table;

pub use config::{DatasetSource, ExperimentConfig, CONFIG_KEYS};
pub use scaling::{scaling_study, ScalingAxis, ScalingResult, ScalingStudy};
pub use table::{emit_table, parse_records_csv, TableFormat, CSV_HEADER, PREPROCESSING_NOTE};

use rayon::prelude::*;

use crate::data::{generate, load_csv, standardize, Dataset, Task};
use crate::error::Result;
use crate::linalg::{mean, norm, norm_sq, quantile, sample_std};
use crate::losses::{Curvature, LossKind, LossModel};
use crate::mechanisms::PrivacyBudget;
use crate::optimizers::{
    baseline_private_sgd, default_step, gd, opgd, rrpsgd, solve_oracle, Algorithm, GdConfig, OracleSolution,
    PrivateSolution,
};
use crate::rng::RngStream;

/// Smallest admissible norm bound `D`, used when the reference solution is
/// (numerically) the origin.
pub const MIN_D_BOUND: f64 = 1e-6;

/// Summary of `|grad F(w_priv)|^2` over the trials of a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradNormSummary {
    pub mean: f64,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
}

impl GradNormSummary {
    pub fn from_samples(xs: &[f64]) -> Self {
        Self {
            mean: mean(xs),
            p50: quantile(xs, 0.5),
            p90: quantile(xs, 0.9),
            p99: quantile(xs, 0.99),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub dataset: String,
    pub mu: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub method: Algorithm,
    pub mean_error: f64,
    pub std_error: f64,
    /// Mean CPU seconds per trial.
    pub mean_runtime: f64,
    pub trials: usize,
    pub mean_grad_evals: f64,
    /// Per-trial errors in trial order. Not serialized.
    pub trial_errors: Vec<f64>,
    /// Present for non-convex losses.
    pub grad_norm: Option<GradNormSummary>,
}

impl ExperimentRecord {
    /// Error statistics only; runtimes are excluded.
    pub fn same_errors(&self, other: &Self) -> bool {
        self.dataset == other.dataset
            && self.mu.to_bits() == other.mu.to_bits()
            && self.epsilon.to_bits() == other.epsilon.to_bits()
            && self.method == other.method
            && self.mean_error.to_bits() == other.mean_error.to_bits()
            && self.std_error.to_bits() == other.std_error.to_bits()
            && self.trials == other.trials
    }
}

/// A cell (or a whole dataset) that could not be run.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub dataset: String,
    pub mu: Option<f64>,
    pub epsilon: Option<f64>,
    pub method: Option<Algorithm>,
    pub message: String,
}

impl std::fmt::Display for CellFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.dataset)?;
        if let Some(mu) = self.mu {
            write!(f, " mu={mu}")?;
        }
        if let Some(eps) = self.epsilon {
            write!(f, " epsilon={eps}")?;
        }
        if let Some(m) = self.method {
            write!(f, " method={m}")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Sweep {
    pub records: Vec<ExperimentRecord>,
    pub failures: Vec<CellFailure>,
}

/// Load or generate the dataset and pick its default loss: logistic for
/// classification, Huber for regression, squared sigmoid for the sigmoid family.
pub fn load_source(source: &DatasetSource) -> Result<(Dataset, LossKind)> {
    match source {
        DatasetSource::Synthetic { spec, loss, .. } => {
            let data = generate(spec)?;
            let default = match spec.kind {
                crate::data::SyntheticKind::RidgeRegression => LossKind::huber(),
                crate::data::SyntheticKind::LogisticSeparable => LossKind::logistic(),
                crate::data::SyntheticKind::SigmoidNonconvex => LossKind::SquaredSigmoid,
            };
            Ok((data, loss.unwrap_or(default)))
        }
        DatasetSource::Csv { path, options, loss } => {
            let data = standardize(&load_csv(path, options)?)?;
            let default = match data.task() {
                Task::Classification => LossKind::logistic(),
                Task::Regression => LossKind::huber(),
            };
            Ok((data, loss.unwrap_or(default)))
        }
    }
}

/// Everything fixed for one (dataset, mu) pair.
#[derive(Debug, Clone)]
pub struct Instance {
    pub data: Dataset,
    /// Loss model with `R = 2D`.
    pub model: LossModel,
    pub oracle: OracleSolution,
    /// `2 |w_hat|`, floored at [`MIN_D_BOUND`].
    pub d_bound: f64,
}

impl Instance {
    pub fn new(data: Dataset, loss: LossKind, mu: f64, oracle_tol: f64, oracle_max_iterations: u64) -> Result<Self> {
        let base = LossModel::new(loss, mu)?.with_norm_bound(data.norm_bound());
        let oracle = solve_oracle(&base, &data, &vec![0.0; data.dim()], oracle_tol, oracle_max_iterations)?;
        let d_bound = (2.0 * norm(&oracle.w)).max(MIN_D_BOUND);
        let model = base.with_domain_radius(2.0 * d_bound);
        Ok(Self {
            data,
            model,
            oracle,
            d_bound,
        })
    }

    pub fn error(&self, w: &[f64]) -> f64 {
        self.model.risk_unchecked(w, &self.data) - self.oracle.value
    }

    pub fn grad_norm_sq(&self, w: &[f64]) -> f64 {
        let mut g = vec![0.0; w.len()];
        self.model.full_gradient_into(w, &self.data, &mut g);
        norm_sq(&g)
    }
}

/// Knobs shared by every method run in a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub batch_size: usize,
    pub pure_opgd: bool,
    pub gd_iterations: u64,
}

impl From<&ExperimentConfig> for RunSettings {
    fn from(cfg: &ExperimentConfig) -> Self {
        Self {
            batch_size: cfg.batch_size,
            pure_opgd: cfg.pure_opgd,
            gd_iterations: cfg.gd_iterations,
        }
    }
}

/// One private (or control) training run.
pub fn run_method(
    inst: &Instance,
    method: Algorithm,
    epsilon: f64,
    delta: f64,
    settings: RunSettings,
    seed: RngStream,
) -> Result<PrivateSolution> {
    let budget = PrivacyBudget::new(epsilon, delta)?;
    let (model, data) = (&inst.model, &inst.data);
    match method {
        Algorithm::Opgd => {
            let budget = if settings.pure_opgd {
                PrivacyBudget::pure(epsilon)?
            } else {
                budget
            };
            opgd(model, data, budget, inst.d_bound, Default::default(), seed)
        }
        Algorithm::Rrpsgd => rrpsgd(model, data, budget, Default::default(), seed),
        Algorithm::Baseline => baseline_private_sgd(
            model,
            data,
            budget,
            settings.batch_size.min(data.len()),
            inst.d_bound,
            Default::default(),
            seed,
        ),
        Algorithm::Gd => {
            let eta = default_step(&model.certify_constants());
            let clock = crate::timing::Stopwatch::start();
            let w = gd(model, data, &GdConfig::from_origin(eta, settings.gd_iterations, data.dim()))?;
            let (wall_time, cpu_time) = clock.elapsed();
            Ok(PrivateSolution {
                w_pre_noise: w.clone(),
                w_priv: w,
                algorithm: Algorithm::Gd,
                budget: None,
                noise: crate::optimizers::NoiseRecord::None,
                iterations_run: settings.gd_iterations,
                step_size: eta,
                sensitivity: None,
                seed,
                grad_evals: settings.gd_iterations * data.len() as u64,
                noise_draws: 0,
                wall_time,
                cpu_time,
            })
        }
    }
}

fn method_tag(m: Algorithm) -> u64 {
    match m {
        Algorithm::Gd => 0,
        Algorithm::Opgd => 1,
        Algorithm::Rrpsgd => 2,
        Algorithm::Baseline => 3,
    }
}

struct TrialOutcome {
    error: f64,
    cpu_time: f64,
    grad_evals: u64,
    grad_norm_sq: Option<f64>,
}

/// Run `trials` independent trials of one cell and summarize them.
/// `stream_of(trial)` names each trial's random stream.
pub fn run_cell(
    inst: &Instance,
    method: Algorithm,
    epsilon: f64,
    delta: f64,
    settings: RunSettings,
    trials: usize,
    stream_of: impl Fn(u64) -> RngStream + Sync,
) -> Result<ExperimentRecord> {
    let nonconvex = inst.model.curvature() == Curvature::NonConvex;
    let outcomes: Vec<TrialOutcome> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let sol = run_method(inst, method, epsilon, delta, settings, stream_of(trial))?;
            Ok(TrialOutcome {
                error: inst.error(&sol.w_priv),
                cpu_time: sol.cpu_time,
                grad_evals: sol.grad_evals,
                grad_norm_sq: nonconvex.then(|| inst.grad_norm_sq(&sol.w_priv)),
            })
        })
        .collect::<Result<_>>()?;
    let errors: Vec<f64> = outcomes.iter().map(|o| o.error).collect();
    let times: Vec<f64> = outcomes.iter().map(|o| o.cpu_time).collect();
    let evals: Vec<f64> = outcomes.iter().map(|o| o.grad_evals as f64).collect();
    let grad_norm = nonconvex.then(|| {
        let g: Vec<f64> = outcomes.iter().filter_map(|o| o.grad_norm_sq).collect();
        GradNormSummary::from_samples(&g)
    });
    Ok(ExperimentRecord {
        dataset: inst.data.name().to_string(),
        mu: inst.model.mu,
        epsilon,
        delta,
        method,
        mean_error: mean(&errors),
        std_error: sample_std(&errors),
        mean_runtime: mean(&times),
        trials,
        mean_grad_evals: mean(&evals),
        trial_errors: errors,
        grad_norm,
    })
}

/// Run the full sweep. Failures are collected per cell, never fatal.
pub fn run_experiment(cfg: &ExperimentConfig) -> Sweep {
    let mut sweep = Sweep::default();
    let settings = RunSettings::from(cfg);
    let root = RngStream::new(cfg.seed, 0);
    for (di, source) in cfg.datasets.iter().enumerate() {
        let (data, loss) = match load_source(source) {
            Ok(v) => v,
            Err(e) => {
                sweep.failures.push(CellFailure {
                    dataset: source_label(source),
                    mu: None,
                    epsilon: None,
                    method: None,
                    message: e.to_string(),
                });
                continue;
            }
        };
        for (mi, &mu) in cfg.mus.iter().enumerate() {
            let inst = match Instance::new(data.clone(), loss, mu, cfg.oracle_tol, cfg.oracle_max_iterations) {
                Ok(i) => i,
                Err(e) => {
                    sweep.failures.push(CellFailure {
                        dataset: data.name().to_string(),
                        mu: Some(mu),
                        epsilon: None,
                        method: None,
                        message: e.to_string(),
                    });
                    continue;
                }
            };
            for (ei, &eps) in cfg.epsilons.iter().enumerate() {
                for &method in &cfg.methods {
                    let cell = root.derive(&[di as u64, mi as u64, ei as u64, method_tag(method)]);
                    match run_cell(&inst, method, eps, cfg.delta, settings, cfg.trials, |t| cell.child(t)) {
                        Ok(r) => sweep.records.push(r),
                        Err(e) => sweep.failures.push(CellFailure {
                            dataset: data.name().to_string(),
                            mu: Some(mu),
                            epsilon: Some(eps),
                            method: Some(method),
                            message: e.to_string(),
                        }),
                    }
                }
            }
        }
    }
    sweep
}

fn source_label(source: &DatasetSource) -> String {
    match source {
        DatasetSource::Synthetic { spec, .. } => spec.name(),
        DatasetSource::Csv { path, .. } => path.display().to_string(),
    }
}
