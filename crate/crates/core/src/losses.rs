//! Per-example smooth losses with L2 regularization and certified constants.
//!
//! Every loss here is a generalized linear loss `phi(<w, x>, y)`, so the
//! gradient is `phi'(<w, x>, y) x + mu w`. The regularized per-example
//! objective is `phi(<w, x>, y) + (mu / 2) |w|^2`.

use crate::data::{Dataset, Example, Task};
use crate::error::{invalid, Error, Result};
use crate::linalg::{axpy, dot, norm_sq};

/// Which logistic formula to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum LogisticForm {
    /// `log(1 + exp(1 + y <w, x>))`
    #[default]
    Shifted,
    /// `log(1 + exp(-y <w, x>))`
    Standard,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    Logistic(LogisticForm),
    /// Huber loss on the residual `<w, x> - y`, quadratic below `threshold`.
    Huber { threshold: f64 },
    /// `(sigmoid(<w, x>) - y)^2 / 2` with targets in `[0, 1]`; smooth, non-convex.
    SquaredSigmoid,
}

impl LossKind {
    pub const DEFAULT_HUBER_THRESHOLD: f64 = 1.0;

    pub fn huber() -> Self {
        LossKind::Huber {
            threshold: Self::DEFAULT_HUBER_THRESHOLD,
        }
    }

    pub fn logistic() -> Self {
        LossKind::Logistic(LogisticForm::Shifted)
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Logistic(_) => "logistic",
            LossKind::Huber { .. } => "huber",
            LossKind::SquaredSigmoid => "sigmoid",
        }
    }
}

/// Convexity class of a regularized loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Curvature {
    StronglyConvex { mu: f64 },
    Convex,
    NonConvex,
}

/// Certified constants on the ball of radius `domain_radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub lipschitz: f64,
    pub smoothness: f64,
    /// Regularization weight; the strong convexity modulus for convex kinds.
    pub mu: f64,
    pub curvature: Curvature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossModel {
    pub kind: LossKind,
    pub mu: f64,
    /// Bound `B` on feature norms.
    pub norm_bound: f64,
    /// Radius of the ball on which the Lipschitz constant is certified.
    pub domain_radius: f64,
}

#[inline]
fn softplus(a: f64) -> f64 {
    a.max(0.0) + (-a.abs()).exp().ln_1p()
}

#[inline]
fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

/// Largest `|s''|` for the logistic sigmoid, `sqrt(3) / 18`.
const SIGMOID_CURVATURE_MAX: f64 = 0.096_225_044_864_937_63;

impl LossModel {
    pub fn new(kind: LossKind, mu: f64) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(invalid("mu", format!("must be non-negative, got {mu}")));
        }
        if let LossKind::Huber { threshold } = kind {
            if !(threshold > 0.0 && threshold.is_finite()) {
                return Err(invalid("huber threshold", format!("must be positive, got {threshold}")));
            }
        }
        Ok(Self {
            kind,
            mu,
            norm_bound: 1.0,
            domain_radius: 1.0,
        })
    }

    pub fn with_norm_bound(mut self, b: f64) -> Self {
        self.norm_bound = b;
        self
    }

    pub fn with_domain_radius(mut self, r: f64) -> Self {
        self.domain_radius = r;
        self
    }

    pub fn curvature(&self) -> Curvature {
        match self.kind {
            LossKind::SquaredSigmoid => Curvature::NonConvex,
            _ if self.mu > 0.0 => Curvature::StronglyConvex { mu: self.mu },
            _ => Curvature::Convex,
        }
    }

    /// Closed-form `(L, beta)` upper bounds for the regularized loss.
    pub fn certify_constants(&self) -> Constants {
        let b = self.norm_bound;
        let reg = self.mu * self.domain_radius;
        let (lipschitz, smoothness) = match self.kind {
            LossKind::Logistic(_) => (b + reg, b * b / 4.0 + self.mu),
            LossKind::Huber { threshold } => (threshold * b + reg, b * b + self.mu),
            LossKind::SquaredSigmoid => (
                b / 4.0 + reg,
                b * b * (1.0 / 16.0 + SIGMOID_CURVATURE_MAX) + self.mu,
            ),
        };
        Constants {
            lipschitz,
            smoothness,
            mu: self.mu,
            curvature: self.curvature(),
        }
    }

    /// Check that `data` is something this loss can be certified on.
    pub fn check_dataset(&self, data: &Dataset) -> Result<()> {
        if data.norm_bound() > self.norm_bound * (1.0 + 1e-12) {
            return Err(invalid(
                "norm_bound",
                format!(
                    "dataset bound {} exceeds the loss model's B = {}",
                    data.norm_bound(),
                    self.norm_bound
                ),
            ));
        }
        match self.kind {
            LossKind::Logistic(_) if data.task() != Task::Classification => {
                Err(invalid("loss", "logistic loss needs a classification dataset"))
            }
            LossKind::SquaredSigmoid if data.labels().iter().any(|y| !(0.0..=1.0).contains(y)) => {
                Err(invalid("loss", "squared-sigmoid loss needs targets in [0, 1]"))
            }
            _ => Ok(()),
        }
    }

    /// `(phi(t, y), d phi / d t)` for the unregularized loss at margin `t`.
    #[inline]
    pub fn link(&self, t: f64, y: f64) -> (f64, f64) {
        match self.kind {
            LossKind::Logistic(LogisticForm::Shifted) => {
                let a = 1.0 + y * t;
                (softplus(a), sigmoid(a) * y)
            }
            LossKind::Logistic(LogisticForm::Standard) => {
                let a = -y * t;
                (softplus(a), -sigmoid(a) * y)
            }
            LossKind::Huber { threshold } => {
                let u = t - y;
                if u.abs() <= threshold {
                    (0.5 * u * u, u)
                } else {
                    (threshold * (u.abs() - 0.5 * threshold), threshold * u.signum())
                }
            }
            LossKind::SquaredSigmoid => {
                let s = sigmoid(t);
                let r = s - y;
                (0.5 * r * r, r * s * (1.0 - s))
            }
        }
    }

    /// `d phi / d t` alone; skips the value on the SGD hot path.
    #[inline]
    pub fn link_derivative(&self, t: f64, y: f64) -> f64 {
        match self.kind {
            LossKind::Logistic(LogisticForm::Shifted) => sigmoid(1.0 + y * t) * y,
            LossKind::Logistic(LogisticForm::Standard) => -sigmoid(-y * t) * y,
            LossKind::Huber { threshold } => (t - y).clamp(-threshold, threshold),
            LossKind::SquaredSigmoid => {
                let s = sigmoid(t);
                (s - y) * s * (1.0 - s)
            }
        }
    }

    /// Unchecked per-example value.
    #[inline]
    pub fn value_at(&self, w: &[f64], x: &[f64], y: f64) -> f64 {
        self.link(dot(w, x), y).0 + 0.5 * self.mu * norm_sq(w)
    }

    /// Unchecked: `out += scale * grad f(w; x, y)`.
    #[inline]
    pub fn add_gradient(&self, w: &[f64], x: &[f64], y: f64, scale: f64, out: &mut [f64]) {
        let d = self.link_derivative(dot(w, x), y);
        axpy(scale * d, x, out);
        if self.mu != 0.0 {
            axpy(scale * self.mu, w, out);
        }
    }

    pub fn loss_value(&self, w: &[f64], xi: &Example) -> Result<f64> {
        check_dim(w.len(), xi.x.len())?;
        Ok(self.value_at(w, &xi.x, xi.y))
    }

    pub fn loss_grad(&self, w: &[f64], xi: &Example) -> Result<Vec<f64>> {
        check_dim(w.len(), xi.x.len())?;
        let mut g = vec![0.0; w.len()];
        self.add_gradient(w, &xi.x, xi.y, 1.0, &mut g);
        Ok(g)
    }

    /// `F(w, S) = (1/n) sum_i f(w, xi_i)`.
    pub fn empirical_risk(&self, w: &[f64], data: &Dataset) -> Result<f64> {
        check_data(w, data)?;
        Ok(self.risk_unchecked(w, data))
    }

    pub(crate) fn risk_unchecked(&self, w: &[f64], data: &Dataset) -> f64 {
        let mut acc = 0.0;
        for (x, y) in data.rows() {
            acc += self.link(dot(w, x), y).0;
        }
        acc / data.len() as f64 + 0.5 * self.mu * norm_sq(w)
    }

    /// Mean of the per-example gradients.
    pub fn full_gradient(&self, w: &[f64], data: &Dataset) -> Result<Vec<f64>> {
        check_data(w, data)?;
        let mut g = vec![0.0; w.len()];
        self.full_gradient_into(w, data, &mut g);
        Ok(g)
    }

    /// Unchecked full gradient, overwriting `out`. The reduction runs in row
    /// order, so results are deterministic.
    pub fn full_gradient_into(&self, w: &[f64], data: &Dataset, out: &mut [f64]) {
        out.fill(0.0);
        for (x, y) in data.rows() {
            let (_, d) = self.link(dot(w, x), y);
            axpy(d, x, out);
        }
        let inv_n = 1.0 / data.len() as f64;
        for (o, wi) in out.iter_mut().zip(w) {
            *o = *o * inv_n + self.mu * wi;
        }
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn check_data(w: &[f64], data: &Dataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_dim(data.dim(), w.len())
}
