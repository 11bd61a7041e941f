//! Empirical stability of full gradient descent on neighbouring datasets.
//!
//! [`trace_stability`] runs gradient descent on two datasets that differ in a
//! single row, in lockstep from the same start, and records
//! `delta_t = |w_t - w'_t|`. The trace is compared against the closed-form
//! sensitivity bound and, for convex losses, against the one-step recursion
//! `delta_{t+1}^2 <= delta_t^2 + (4 eta L / n) delta_t + 8 eta^2 L^2 / n^2`.

use rand::Rng;

use crate::data::{Dataset, Example};
use crate::error::Result;
use crate::linalg::{distance, norm};
use crate::losses::LossModel;
use crate::mechanisms::unit_direction;
use crate::optimizers::{sensitivity_bound, GdConfig};

/// Absolute slack for [`recursion_check`].
pub const RECURSION_SLACK: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct NeighborPair {
    pub original: Dataset,
    pub neighbor: Dataset,
    pub index: usize,
}

/// `S` and a copy with row `index` replaced.
pub fn make_neighbor(data: &Dataset, index: usize, replacement: &Example) -> Result<NeighborPair> {
    Ok(NeighborPair {
        neighbor: data.with_replaced(index, replacement)?,
        original: data.clone(),
        index,
    })
}

/// Replace a uniformly chosen row by a point drawn uniformly from the feature
/// ball, labelled with the label of another uniformly chosen row.
pub fn random_neighbor<R: Rng + ?Sized>(data: &Dataset, rng: &mut R) -> Result<NeighborPair> {
    let n = data.len();
    let d = data.dim();
    let index = rng.random_range(0..n);
    let radius = data.norm_bound() * rng.random::<f64>().powf(1.0 / d as f64);
    let x: Vec<f64> = unit_direction(d, rng).into_iter().map(|v| v * radius).collect();
    let y = data.label(rng.random_range(0..n));
    make_neighbor(data, index, &Example { x, y })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityTrace {
    /// `delta_t` for `t = 0..=T`.
    pub deltas: Vec<f64>,
    /// Closed-form sensitivity bound for this configuration.
    pub bound: f64,
    pub eta: f64,
    pub iterations: u64,
    /// Largest iterate norm seen on either trajectory.
    pub max_norm: f64,
    /// Whether either trajectory left the ball on which `L` was certified.
    pub left_ball: bool,
}

impl StabilityTrace {
    pub fn max_delta(&self) -> f64 {
        self.deltas.iter().copied().fold(0.0, f64::max)
    }

    pub fn final_delta(&self) -> f64 {
        *self.deltas.last().expect("trace holds delta_0")
    }

    /// Every recorded delta within the bound.
    pub fn within_bound(&self) -> bool {
        self.max_delta() <= self.bound
    }
}

/// Run gradient descent on both datasets of `pair` in lockstep.
pub fn trace_stability(model: &LossModel, pair: &NeighborPair, cfg: &GdConfig) -> Result<StabilityTrace> {
    let (s, s2) = (&pair.original, &pair.neighbor);
    model.check_dataset(s)?;
    model.check_dataset(s2)?;
    cfg.validate(model, s.dim())?;
    let constants = model.certify_constants();
    let radius = model.domain_radius;

    let mut w = cfg.w0.clone();
    let mut w2 = cfg.w0.clone();
    let mut g = vec![0.0; w.len()];
    let mut g2 = vec![0.0; w.len()];
    let mut deltas = Vec::with_capacity(cfg.iterations as usize + 1);
    deltas.push(distance(&w, &w2));
    let mut max_norm = norm(&w).max(norm(&w2));
    for _ in 0..cfg.iterations {
        model.full_gradient_into(&w, s, &mut g);
        model.full_gradient_into(&w2, s2, &mut g2);
        for j in 0..w.len() {
            w[j] -= cfg.eta * g[j];
            w2[j] -= cfg.eta * g2[j];
        }
        deltas.push(distance(&w, &w2));
        max_norm = max_norm.max(norm(&w)).max(norm(&w2));
    }
    Ok(StabilityTrace {
        deltas,
        bound: sensitivity_bound(&constants, s.len(), cfg.eta, cfg.iterations),
        eta: cfg.eta,
        iterations: cfg.iterations,
        max_norm,
        left_ball: constants.mu > 0.0 && max_norm > radius,
    })
}

/// Whether every step of `trace` satisfies the convex stability recursion
/// within [`RECURSION_SLACK`].
pub fn recursion_check(trace: &StabilityTrace, lipschitz: f64, eta: f64, n: usize) -> bool {
    let n = n as f64;
    let a = 4.0 * eta * lipschitz / n;
    let c = 8.0 * eta * eta * lipschitz * lipschitz / (n * n);
    trace
        .deltas
        .windows(2)
        .all(|p| p[1] * p[1] <= p[0] * p[0] + a * p[0] + c + RECURSION_SLACK)
}
