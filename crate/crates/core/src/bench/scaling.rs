use super::{load_source, run_cell, DatasetSource, ExperimentRecord, Instance, RunSettings};
use crate::data::SyntheticSpec;
use crate::error::{invalid, Result};
use crate::linalg::ols_slope;
use crate::losses::LossKind;
use crate::optimizers::Algorithm;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingAxis {
    N,
    Epsilon,
    Dim,
}

/// Vary one parameter of a synthetic instance and fit the log-log slope of
/// mean error against it. Trial `k` uses the same stream at every axis value
/// (common random numbers), so the fit sees little Monte Carlo jitter.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingStudy {
    pub base: SyntheticSpec,
    /// Defaults to the family's loss.
    pub loss: Option<LossKind>,
    pub mu: f64,
    pub epsilon: f64,
    /// Zero selects a pure budget.
    pub delta: f64,
    pub axis: ScalingAxis,
    pub values: Vec<f64>,
    pub method: Algorithm,
    pub trials: usize,
    pub seed: u64,
    pub oracle_tol: f64,
    pub settings: RunSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingResult {
    pub points: Vec<(f64, ExperimentRecord)>,
    /// Least-squares slope of `ln mean_error` against `ln value`.
    pub slope: f64,
}

impl ScalingResult {
    pub fn mean_errors(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|(v, r)| (*v, r.mean_error)).collect()
    }
}

pub fn scaling_study(study: &ScalingStudy) -> Result<ScalingResult> {
    if study.values.len() < 2 {
        return Err(invalid("values", "a slope needs at least two axis values"));
    }
    if study.values.iter().any(|v| !(*v > 0.0)) {
        return Err(invalid("values", "axis values must be positive"));
    }
    if study.trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    let root = RngStream::new(study.seed, 0);
    let mut points = Vec::with_capacity(study.values.len());
    for &v in &study.values {
        let mut spec = study.base;
        let mut eps = study.epsilon;
        match study.axis {
            ScalingAxis::N => spec.n = v as usize,
            ScalingAxis::Dim => spec.d = v as usize,
            ScalingAxis::Epsilon => eps = v,
        }
        let (data, default_loss) = load_source(&DatasetSource::Synthetic {
            spec,
            loss: study.loss,
            explicit_seed: true,
        })?;
        let inst = Instance::new(data, study.loss.unwrap_or(default_loss), study.mu, study.oracle_tol, 1_000_000)?;
        let rec = run_cell(&inst, study.method, eps, study.delta, study.settings, study.trials, |t| root.child(t))?;
        points.push((v, rec));
    }
    let xs: Vec<f64> = points.iter().map(|(v, _)| v.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, r)| r.mean_error.ln()).collect();
    Ok(ScalingResult {
        slope: ols_slope(&xs, &ys),
        points,
    })
}
