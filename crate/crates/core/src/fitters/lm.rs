//! Levenberg–Marquardt with analytic Jacobians.

use nalgebra::{DMatrix, DVector};

/// A curve `y = f(x; p)` with its parameter gradient.
pub trait CurveModel {
    fn n_params(&self) -> usize;
    fn value(&self, x: f64, p: &[f64]) -> f64;
    /// Writes `∂f/∂p` into `grad` (length `n_params`).
    fn gradient(&self, x: f64, p: &[f64], grad: &mut [f64]);
    /// Steps into an infeasible region are rejected like uphill steps.
    fn feasible(&self, _p: &[f64]) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LmSettings {
    pub max_iter: usize,
    pub step_tol: f64,
    pub cost_tol: f64,
}

impl Default for LmSettings {
    fn default() -> Self {
        LmSettings {
            max_iter: 200,
            step_tol: 1e-10,
            cost_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    /// `s²·(JᵀJ)⁻¹` with `s² = RSS/(m − n)`; `None` when singular.
    pub covariance: Option<DMatrix<f64>>,
    /// Euclidean norm of the weighted residual vector at `params`.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LmOutcome {
    pub fn stderr(&self) -> Option<Vec<f64>> {
        let cov = self.covariance.as_ref()?;
        Some((0..cov.nrows()).map(|i| cov[(i, i)].max(0.0).sqrt()).collect())
    }
}

struct Problem<'a, M: CurveModel> {
    model: &'a M,
    x: &'a [f64],
    y: &'a [f64],
    w: Option<&'a [f64]>,
}

impl<M: CurveModel> Problem<'_, M> {
    fn weight(&self, i: usize) -> f64 {
        self.w.map_or(1.0, |w| w[i])
    }

    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.x.len(),
            (0..self.x.len()).map(|i| self.weight(i) * (self.model.value(self.x[i], p) - self.y[i])),
        )
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let n = p.len();
        let mut jac = DMatrix::zeros(self.x.len(), n);
        let mut g = vec![0.0; n];
        for (i, &xi) in self.x.iter().enumerate() {
            self.model.gradient(xi, p, &mut g);
            let w = self.weight(i);
            for (j, gj) in g.iter().enumerate() {
                jac[(i, j)] = w * gj;
            }
        }
        jac
    }
}

/// Minimises `Σ wᵢ²·(f(xᵢ; p) − yᵢ)²` from `p0`.
pub fn levenberg_marquardt<M: CurveModel>(
    model: &M,
    x: &[f64],
    y: &[f64],
    weights: Option<&[f64]>,
    p0: &[f64],
    settings: LmSettings,
) -> LmOutcome {
    assert_eq!(x.len(), y.len());
    assert_eq!(p0.len(), model.n_params());
    let prob = Problem { model, x, y, w: weights };
    let n = p0.len();
    let m = x.len();

    let mut p = DVector::from_column_slice(p0);
    let mut r = prob.residuals(p.as_slice());
    let mut cost = 0.5 * r.norm_squared();
    let mut jac = prob.jacobian(p.as_slice());
    let mut jtj = jac.transpose() * &jac;
    let mut grad = jac.transpose() * &r;
    let mut mu = 1e-3 * (0..n).map(|i| jtj[(i, i)]).fold(0.0, f64::max).max(1e-300);
    let mut nu = 2.0;
    let mut converged = false;
    let mut iterations = 0;

    if grad.amax() == 0.0 {
        converged = true;
    }

    while !converged && iterations < settings.max_iter {
        iterations += 1;
        let diag: Vec<f64> = (0..n).map(|i| jtj[(i, i)].max(1e-300)).collect();
        let mut lhs = jtj.clone();
        for i in 0..n {
            lhs[(i, i)] += mu * diag[i];
        }
        let Some(h) = lhs.cholesky().map(|c| c.solve(&(-&grad))) else {
            mu *= nu;
            nu *= 2.0;
            continue;
        };

        if h.norm() <= settings.step_tol * (p.norm() + settings.step_tol) {
            converged = true;
            break;
        }

        let trial = &p + &h;
        let feasible = model.feasible(trial.as_slice()) && trial.iter().all(|v| v.is_finite());
        let (trial_r, trial_cost) = if feasible {
            let tr = prob.residuals(trial.as_slice());
            let tc = 0.5 * tr.norm_squared();
            (Some(tr), tc)
        } else {
            (None, f64::INFINITY)
        };
        let scaled: DVector<f64> = DVector::from_iterator(n, (0..n).map(|i| mu * diag[i] * h[i]));
        let predicted = 0.5 * h.dot(&(scaled - &grad));
        let rho = if predicted > 0.0 {
            (cost - trial_cost) / predicted
        } else {
            -1.0
        };

        if rho > 0.0 && trial_cost.is_finite() {
            let drop = cost - trial_cost;
            p = trial;
            r = trial_r.expect("feasible trial has residuals");
            cost = trial_cost;
            jac = prob.jacobian(p.as_slice());
            jtj = jac.transpose() * &jac;
            grad = jac.transpose() * &r;
            mu *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
            nu = 2.0;
            if drop <= settings.cost_tol * cost || cost == 0.0 || grad.amax() == 0.0 {
                converged = true;
            }
        } else {
            mu *= nu;
            nu *= 2.0;
            if !mu.is_finite() || mu > 1e300 {
                break;
            }
        }
    }

    let rss = r.norm_squared();
    let covariance = if m > n {
        let s2 = rss / (m - n) as f64;
        jtj.clone().try_inverse().and_then(|inv| {
            let ok = (0..n).all(|i| inv[(i, i)].is_finite() && inv[(i, i)] >= 0.0);
            ok.then(|| inv * s2)
        })
    } else {
        None
    };

    LmOutcome {
        params: p.as_slice().to_vec(),
        covariance,
        residual_norm: rss.sqrt(),
        iterations,
        converged,
    }
}

/// Residual norm of `model` at `p`, with the same weighting as the optimiser.
pub fn residual_norm<M: CurveModel>(model: &M, x: &[f64], y: &[f64], weights: Option<&[f64]>, p: &[f64]) -> f64 {
    Problem { model, x, y, w: weights }.residuals(p).norm()
}

/// Five-point central-difference gradient, used to check analytic
/// Jacobians.
pub fn numeric_gradient<M: CurveModel>(model: &M, x: f64, p: &[f64]) -> Vec<f64> {
    let mut q = p.to_vec();
    (0..p.len())
        .map(|j| {
            let h = 1e-4 * p[j].abs().max(1e-8);
            let mut at = |k: f64| {
                q[j] = p[j] + k * h;
                let v = model.value(x, &q);
                q[j] = p[j];
                v
            };
            (at(-2.0) - 8.0 * at(-1.0) + 8.0 * at(1.0) - at(2.0)) / (12.0 * h)
        })
        .collect()
}

/// Largest relative disagreement between the analytic gradient and
/// [`numeric_gradient`]. Each component is compared as a sensitivity
/// `p_j·∂f/∂p_j`; components under `1e-3` of the largest sensitivity are
/// measured against that floor.
pub fn gradient_discrepancy<M: CurveModel>(model: &M, x: f64, p: &[f64]) -> f64 {
    let mut g = vec![0.0; p.len()];
    model.gradient(x, p, &mut g);
    let fd = numeric_gradient(model, x, p);
    let lever: Vec<f64> = p.iter().map(|v| v.abs().max(1e-8)).collect();
    let sens: Vec<f64> = g.iter().zip(&lever).map(|(a, l)| (a * l).abs()).collect();
    let floor = 1e-3 * sens.iter().copied().fold(0.0, f64::max);
    if floor == 0.0 {
        return fd.iter().zip(&lever).map(|(v, l)| (v * l).abs()).fold(0.0, f64::max);
    }
    (0..p.len())
        .map(|j| (g[j] - fd[j]).abs() * lever[j] / sens[j].max(floor))
        .fold(0.0, f64::max)
}
