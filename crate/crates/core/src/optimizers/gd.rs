use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::linalg::norm;
use crate::losses::LossModel;

/// A differentiable objective over `R^d`.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, w: &[f64]) -> f64;
    /// Overwrite `out` with the gradient at `w`.
    fn gradient_into(&self, w: &[f64], out: &mut [f64]);
}

/// Regularized empirical risk of a loss model over a dataset.
#[derive(Debug, Clone, Copy)]
pub struct Erm<'a> {
    pub model: &'a LossModel,
    pub data: &'a Dataset,
}

impl Objective for Erm<'_> {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn value(&self, w: &[f64]) -> f64 {
        self.model.risk_unchecked(w, self.data)
    }

    fn gradient_into(&self, w: &[f64], out: &mut [f64]) {
        self.model.full_gradient_into(w, self.data, out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdConfig {
    pub eta: f64,
    pub iterations: u64,
    pub w0: Vec<f64>,
}

impl GdConfig {
    /// Start from the origin.
    pub fn from_origin(eta: f64, iterations: u64, d: usize) -> Self {
        Self {
            eta,
            iterations,
            w0: vec![0.0; d],
        }
    }

    /// Largest step admitted for `model`: `1/(mu+beta)` when strongly convex,
    /// `1/beta` otherwise.
    pub fn step_limit(model: &LossModel) -> f64 {
        super::default_step(&model.certify_constants())
    }

    pub fn validate(&self, model: &LossModel, d: usize) -> Result<()> {
        if self.w0.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: self.w0.len(),
            });
        }
        let limit = Self::step_limit(model);
        if !(self.eta > 0.0) {
            return Err(invalid("eta", format!("must be positive, got {}", self.eta)));
        }
        // a relative slack of one ulp-scale lets callers pass exactly 1/(mu+beta)
        if self.eta > limit * (1.0 + 1e-12) {
            return Err(Error::StepSize {
                eta: self.eta,
                limit,
            });
        }
        Ok(())
    }
}

/// Run `iterations` steps of `w <- w - eta grad F(w)` from `w0`, calling
/// `observe(t, w_t)` for `t = 0..=iterations`.
pub fn descend<O: Objective + ?Sized>(
    objective: &O,
    eta: f64,
    iterations: u64,
    w0: &[f64],
    mut observe: impl FnMut(u64, &[f64]),
) -> Vec<f64> {
    let mut w = w0.to_vec();
    let mut g = vec![0.0; w.len()];
    observe(0, &w);
    for t in 1..=iterations {
        objective.gradient_into(&w, &mut g);
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi -= eta * gi;
        }
        observe(t, &w);
    }
    w
}

/// Full gradient descent on the regularized empirical risk. Returns `w_T`.
pub fn gd(model: &LossModel, data: &Dataset, cfg: &GdConfig) -> Result<Vec<f64>> {
    model.check_dataset(data)?;
    cfg.validate(model, data.dim())?;
    Ok(descend(&Erm { model, data }, cfg.eta, cfg.iterations, &cfg.w0, |_, _| {}))
}

/// Result of the non-private reference solve.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub w: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: u64,
    pub converged: bool,
}

/// Approximate minimizer `w_hat` of the empirical risk: gradient descent with
/// step `1/beta` until `|grad F| <= tol` or `max_iterations` is hit. Hitting the
/// cap is logged, not an error.
pub fn solve_oracle(
    model: &LossModel,
    data: &Dataset,
    w0: &[f64],
    tol: f64,
    max_iterations: u64,
) -> Result<OracleSolution> {
    if !(tol > 0.0) {
        return Err(invalid("tol", format!("must be positive, got {tol}")));
    }
    model.check_dataset(data)?;
    if w0.len() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            found: w0.len(),
        });
    }
    let eta = 1.0 / model.certify_constants().smoothness;
    let mut w = w0.to_vec();
    let mut g = vec![0.0; w.len()];
    let mut iterations = 0;
    model.full_gradient_into(&w, data, &mut g);
    let mut grad_norm = norm(&g);
    while grad_norm > tol && iterations < max_iterations {
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi -= eta * gi;
        }
        iterations += 1;
        model.full_gradient_into(&w, data, &mut g);
        grad_norm = norm(&g);
    }
    let converged = grad_norm <= tol;
    if !converged {
        log::warn!(
            "oracle on `{}` stopped at the {max_iterations}-iteration cap with |grad F| = {grad_norm:e} > {tol:e}",
            data.name()
        );
    }
    Ok(OracleSolution {
        value: model.risk_unchecked(&w, data),
        w,
        grad_norm,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, SyntheticKind, SyntheticSpec};
    use crate::linalg::{dot, norm_sq};
    use crate::losses::LossKind;
    use crate::rng::RngStream;

    /// `F(w) = |w|^2 / 2`
    struct HalfSquare(usize);

    impl Objective for HalfSquare {
        fn dim(&self) -> usize {
            self.0
        }
        fn value(&self, w: &[f64]) -> f64 {
            0.5 * norm_sq(w)
        }
        fn gradient_into(&self, w: &[f64], out: &mut [f64]) {
            out.copy_from_slice(w);
        }
    }

    fn ridge(n: usize, d: usize, noise: f64, seed: u64) -> Dataset {
        generate(&SyntheticSpec {
            kind: SyntheticKind::RidgeRegression,
            n,
            d,
            noise_level: noise,
            seed: RngStream::new(seed, 0),
        })
        .unwrap()
    }

    #[test]
    fn unit_step_on_half_square_lands_on_minimizer() {
        let w1 = descend(&HalfSquare(3), 1.0, 1, &[3.0, -2.0, 0.5], |_, _| {});
        assert_eq!(w1, vec![0.0; 3]);
    }

    #[test]
    fn zero_iterations_is_identity() {
        let data = ridge(20, 3, 0.1, 1);
        let model = LossModel::new(LossKind::huber(), 0.1).unwrap();
        let cfg = GdConfig {
            eta: 0.5,
            iterations: 0,
            w0: vec![0.3, -0.2, 0.1],
        };
        assert_eq!(gd(&model, &data, &cfg).unwrap(), cfg.w0);
    }

    #[test]
    fn step_size_violation_is_rejected() {
        let data = ridge(20, 3, 0.1, 1);
        let sc = LossModel::new(LossKind::huber(), 0.1).unwrap();
        // beta = 1.1, mu = 0.1 => limit 1/1.2
        assert!(matches!(
            gd(&sc, &data, &GdConfig::from_origin(0.9, 5, 3)),
            Err(Error::StepSize { .. })
        ));
        assert!(gd(&sc, &data, &GdConfig::from_origin(1.0 / 1.2, 5, 3)).is_ok());
        let convex = LossModel::new(LossKind::huber(), 0.0).unwrap();
        assert!(gd(&convex, &data, &GdConfig::from_origin(1.0, 5, 3)).is_ok());
        assert!(gd(&convex, &data, &GdConfig::from_origin(1.01, 5, 3)).is_err());
    }

    #[test]
    fn strongly_convex_linear_rate_against_oracle() {
        let data = ridge(300, 5, 0.2, 2);
        let model = LossModel::new(LossKind::huber(), 0.1).unwrap();
        let c = model.certify_constants();
        let oracle = solve_oracle(&model, &data, &[0.0; 5], 1e-12, 100_000).unwrap();
        assert!(oracle.converged);
        let eta = 1.0 / (c.mu + c.smoothness);
        let w0 = vec![0.5; 5];
        let d0 = crate::linalg::distance(&w0, &oracle.w).powi(2);
        let obj = Erm { model: &model, data: &data };
        descend(&obj, eta, 60, &w0, |t, w| {
            let gap = obj.value(w) - oracle.value;
            let bound = c.smoothness / 2.0
                * (-2.0 * eta * c.mu * c.smoothness * t as f64 / (c.mu + c.smoothness)).exp()
                * d0;
            assert!(gap <= bound + 1e-14, "t = {t}: {gap} > {bound}");
        });
    }

    #[test]
    fn descent_is_monotone_on_convex_instances() {
        let data = generate(&SyntheticSpec {
            kind: SyntheticKind::LogisticSeparable,
            n: 200,
            d: 4,
            noise_level: 0.1,
            seed: RngStream::new(3, 0),
        })
        .unwrap();
        let model = LossModel::new(LossKind::logistic(), 0.0).unwrap();
        let obj = Erm { model: &model, data: &data };
        let mut last = f64::INFINITY;
        descend(&obj, 1.0 / model.certify_constants().smoothness, 200, &[0.0; 4], |_, w| {
            let v = obj.value(w);
            assert!(v <= last + 1e-15);
            last = v;
        });
    }

    #[test]
    fn oracle_examples() {
        let data = ridge(200, 4, 0.3, 5);
        let model = LossModel::new(LossKind::huber(), 0.2).unwrap();
        let a = solve_oracle(&model, &data, &[0.0; 4], 1e-10, 100_000).unwrap();
        assert!(a.converged && a.grad_norm <= 1e-10);
        let b = solve_oracle(&model, &data, &[3.0, -1.0, 2.0, 0.5], 1e-10, 100_000).unwrap();
        assert!(crate::linalg::distance(&a.w, &b.w) <= 2.0 * 1e-10 / 0.2);

        // realizable ridge data reaches zero risk
        let exact = ridge(100, 4, 0.0, 6);
        let plain = LossModel::new(LossKind::huber(), 0.0).unwrap();
        let o = solve_oracle(&plain, &exact, &[0.0; 4], 1e-8, 100_000).unwrap();
        assert!(o.converged && o.grad_norm <= 1e-8 && o.value < 1e-12);
    }

    #[test]
    fn oracle_cap_is_reported_not_fatal() {
        // separable labels with mu = 0: the infimum is not attained
        let x = vec![0.6, 0.8, -0.6, -0.8];
        let data = Dataset::new("sep", crate::data::Task::Classification, 2, x, vec![1.0, -1.0], 1.0).unwrap();
        let model = LossModel::new(LossKind::logistic(), 0.0).unwrap();
        let o = solve_oracle(&model, &data, &[0.0; 2], 1e-12, 50).unwrap();
        assert!(!o.converged);
        assert_eq!(o.iterations, 50);
        assert!(dot(&o.w, &[0.6, 0.8]) < 0.0);
    }
}
