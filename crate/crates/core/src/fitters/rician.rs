//! Mirrored Rician: `f_T(t) = R(T_max − t; ν, σ)` with `R` the Rice density.

use std::f64::consts::PI;

use log::warn;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::lm::{levenberg_marquardt, CurveModel, LmSettings};
use super::quad::{integrate, integrate_pieces};
use super::simplex::nelder_mead;
use super::special::{bessel_ratio, i0e};
use super::{build_result, FitError, Result};
use crate::domain::{FitFlag, FitResult};

/// Kolmogorov–Smirnov critical value `√n·D` at the 1% level.
pub const KS_THRESHOLD: f64 = 1.63;

/// Half-width of the integration window in units of σ.
const WINDOW: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RicianParams {
    pub nu: f64,
    pub sigma: f64,
    pub t_max: f64,
}

impl RicianParams {
    pub fn new(nu: f64, sigma: f64, t_max: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(FitError::InvalidParams(format!("sigma must be > 0, got {sigma}")));
        }
        if !(nu >= 0.0 && nu.is_finite() && t_max.is_finite()) {
            return Err(FitError::InvalidParams(format!("nu = {nu}, t_max = {t_max}")));
        }
        Ok(RicianParams { nu, sigma, t_max })
    }

    fn x_window(&self) -> (f64, f64) {
        ((self.nu - WINDOW * self.sigma).max(0.0), self.nu + WINDOW * self.sigma)
    }
}

/// `ln R(x; ν, σ)`; `−∞` for `x ≤ 0`.
fn ln_rice(x: f64, nu: f64, sigma: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let s2 = sigma * sigma;
    let nu = nu.abs();
    x.ln() - 2.0 * sigma.ln() - (x - nu).powi(2) / (2.0 * s2) + i0e(x * nu / s2).ln()
}

/// `(∂/∂x, ∂/∂ν, ∂/∂σ)` of `ln R`.
fn ln_rice_gradient(x: f64, nu: f64, sigma: f64) -> (f64, f64, f64) {
    let s2 = sigma * sigma;
    let ratio = bessel_ratio(x * nu / s2);
    let dx = 1.0 / x - x / s2 + nu / s2 * ratio;
    let dnu = -nu / s2 + x / s2 * ratio;
    let dsigma = -2.0 / sigma + (x * x + nu * nu) / (s2 * sigma) - 2.0 * x * nu / (s2 * sigma) * ratio;
    (dx, dnu, dsigma)
}

fn rice(x: f64, nu: f64, sigma: f64) -> f64 {
    ln_rice(x, nu, sigma).exp()
}

/// Density of the mirrored Rician; zero for `t ≥ T_max`.
pub fn mirrored_rician_pdf(t: f64, p: &RicianParams) -> f64 {
    rice(p.t_max - t, p.nu, p.sigma)
}

/// `P(T ≤ t)`.
pub fn mirrored_rician_cdf(t: f64, p: &RicianParams) -> f64 {
    let (lo, hi) = p.x_window();
    let from = (p.t_max - t).max(lo);
    if from >= hi {
        return 0.0;
    }
    let (v, _) = integrate(|x| rice(x, p.nu, p.sigma), from, hi, 1e-10, 1e-14);
    v.clamp(0.0, 1.0)
}

/// Draws `n` samples as `T_max − |ν + σ(Z1 + iZ2)|`, rejecting negative values.
pub fn sample_mirrored_rician<R: Rng + ?Sized>(p: &RicianParams, n: usize, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let x = (p.nu + p.sigma * z1).hypot(p.sigma * z2);
        let t = p.t_max - x;
        if t >= 0.0 {
            out.push(t);
        }
    }
    out
}

/// Mean and standard deviation of the density restricted to `[0, T_max]`,
/// by adaptive quadrature.
pub fn rician_moments(p: &RicianParams) -> (f64, f64) {
    let (lo, win_hi) = p.x_window();
    let hi = if p.t_max > lo { win_hi.min(p.t_max) } else { win_hi };
    let mut breaks = vec![lo];
    for k in [-3.0, -1.0, 0.0, 1.0, 3.0] {
        let b = p.nu + k * p.sigma;
        if b > lo && b < hi {
            breaks.push(b);
        }
    }
    breaks.push(hi);
    let tol = 1e-11;
    let dens = |x: f64| rice(x, p.nu, p.sigma);
    let mass = integrate_pieces(dens, &breaks, tol);
    let m1 = integrate_pieces(|x| x * dens(x), &breaks, tol) / mass;
    let var = integrate_pieces(|x| (x - m1).powi(2) * dens(x), &breaks, tol) / mass;
    (p.t_max - m1, var.max(0.0).sqrt())
}

/// Histogram model `N·w·f_T(t)` over bin centres, parameters `[ν, σ, T_max]`.
#[derive(Debug, Clone, Copy)]
pub struct MirroredRicianHistogram {
    pub n_total: f64,
    pub bin_width: f64,
}

impl CurveModel for MirroredRicianHistogram {
    fn n_params(&self) -> usize {
        3
    }

    fn value(&self, t: f64, p: &[f64]) -> f64 {
        self.n_total * self.bin_width * rice(p[2] - t, p[0], p[1])
    }

    fn gradient(&self, t: f64, p: &[f64], g: &mut [f64]) {
        let x = p[2] - t;
        if x <= 0.0 {
            g.fill(0.0);
            return;
        }
        let f = self.value(t, p);
        let (dx, dnu, dsigma) = ln_rice_gradient(x, p[0], p[1]);
        g[0] = f * dnu;
        g[1] = f * dsigma;
        g[2] = f * dx;
    }

    fn feasible(&self, p: &[f64]) -> bool {
        p[1] > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RicianFitMode {
    #[default]
    MaximumLikelihood,
    Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicianFit {
    pub params: RicianParams,
    pub fit: FitResult,
    /// Covariance of `(ν, σ, T_max)` in data units, when available.
    pub covariance: Option<[[f64; 3]; 3]>,
    /// `√n·D` of the Kolmogorov–Smirnov statistic against the fitted law.
    pub ks_statistic: f64,
}

fn histogram(samples: &[f64], lo: f64, width: f64, bins: usize) -> (Vec<f64>, Vec<f64>) {
    let mut counts = vec![0.0; bins];
    for &s in samples {
        let k = (((s - lo) / width) as usize).min(bins - 1);
        counts[k] += 1.0;
    }
    let centres = (0..bins).map(|k| lo + (k as f64 + 0.5) * width).collect();
    (centres, counts)
}

/// `L_{1/2}(−y)`, the Laguerre factor in the Rice mean.
fn laguerre_half(y: f64) -> f64 {
    (1.0 + y) * i0e(0.5 * y) + y * super::special::i1e(0.5 * y)
}

/// Method-of-moments `(ν, σ)` for Rice-distributed `x`.
fn rice_moments_estimate(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m1 = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| v * v).sum::<f64>() / n;
    let target = m1 * m1 / m2;
    // r(θ) = (π/2)·L²(−θ²/2)/(2 + θ²) rises from π/4 to 1
    let r = |theta: f64| {
        let y = 0.5 * theta * theta;
        0.5 * PI * laguerre_half(y).powi(2) / (2.0 + theta * theta)
    };
    let theta = if target <= r(0.0) {
        0.0
    } else {
        let (mut a, mut b) = (0.0, 1.0);
        while r(b) < target && b < 1e6 {
            b *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if r(mid) < target {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    };
    let sigma = (m2 / (2.0 + theta * theta)).sqrt();
    (theta * sigma, sigma)
}

fn ks_statistic(sorted: &[f64], p: &RicianParams) -> f64 {
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let f = mirrored_rician_cdf(t, p);
            ((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    n.sqrt() * d
}

fn nll(samples: &[f64], nu: f64, sigma: f64, t_max: f64) -> f64 {
    -samples.iter().map(|&t| ln_rice(t_max - t, nu, sigma)).sum::<f64>()
}

/// Fits the mirrored Rician to coherence samples.
///
/// Fewer than 100 samples is an error; fewer than 500 fits but sets
/// `FewSamples`. A Kolmogorov–Smirnov statistic above [`KS_THRESHOLD`]
/// sets `PoorGoodnessOfFit`.
pub fn fit_rician_mirrored(samples: &[f64], mode: RicianFitMode) -> Result<RicianFit> {
    let n = samples.len();
    if n < 100 {
        return Err(FitError::TooFewPoints { need: 100, got: n });
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(FitError::InvalidParams("non-finite sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (min, max) = (sorted[0], sorted[n - 1]);
    let range = max - min;
    if range <= 0.0 {
        return Err(FitError::Degenerate("all samples identical".into()));
    }

    // work in units of the sample range so tolerances are scale free
    let scale = range;
    let u: Vec<f64> = sorted.iter().map(|v| v / scale).collect();
    let u_max = max / scale;
    let u_min = min / scale;
    let bins = ((n as f64).sqrt().round() as usize).clamp(20, 200);
    let width = (u_max - u_min) / bins as f64;

    let t_max0 = u_max + width;
    let x: Vec<f64> = u.iter().map(|v| t_max0 - v).collect();
    let (nu0, sigma0) = rice_moments_estimate(&x);

    let (mut result, params_u, covariance) = match mode {
        RicianFitMode::MaximumLikelihood => {
            let objective = |th: &[f64]| nll(&u, th[0], th[1].exp(), u_max + th[2].exp());
            let start = [nu0, sigma0.ln(), width.ln()];
            let mut out = nelder_mead(objective, &start, &[0.1 * sigma0.max(nu0), 0.2, 0.5], 1e-12, 20_000);
            // restart once from the optimum to escape a collapsed simplex
            out = nelder_mead(objective, &out.x, &[0.05 * sigma0.max(nu0), 0.1, 0.3], 1e-13, 20_000);
            let th = out.x.clone();
            let (nu, sigma, t_max) = (th[0].abs(), th[1].exp(), u_max + th[2].exp());
            let mut res = FitResult {
                model: "mirrored_rician_mle".into(),
                params: Default::default(),
                stderr: Default::default(),
                residual_norm: out.value + n as f64 * scale.ln(),
                converged: out.converged,
                flags: Vec::new(),
            };
            if !out.converged {
                res.push_flag(FitFlag::NotConverged);
            }
            // chain rule from (ν, ln σ, ln(T_max − max)) to natural units
            let jac = [th[0].signum() * scale, sigma * scale, (t_max - u_max) * scale];
            let cov = inverse_hessian(&objective, &th).map(|c| {
                let mut out = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        out[i][j] = c[(i, j)] * jac[i] * jac[j];
                    }
                }
                out
            });
            (res, [nu, sigma, t_max], cov)
        }
        RicianFitMode::Histogram => {
            let (centres, counts) = histogram(&u, u_min, width, bins);
            let model = MirroredRicianHistogram { n_total: n as f64, bin_width: width };
            let out = levenberg_marquardt(&model, &centres, &counts, None, &[nu0, sigma0, t_max0], LmSettings::default());
            let res = build_result("mirrored_rician_histogram", &["nu", "sigma", "t_max"], &out);
            let p = &out.params;
            if p[2] < u_max {
                return Err(FitError::SupportViolation { t_max: p[2] * scale, max_sample: max });
            }
            let sign = [p[0].signum(), 1.0, 1.0];
            let cov = out.covariance.as_ref().map(|c| {
                let mut m = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        m[i][j] = c[(i, j)] * sign[i] * sign[j] * scale * scale;
                    }
                }
                m
            });
            (res, [p[0].abs(), p[1], p[2]], cov)
        }
    };

    let params = RicianParams::new(params_u[0] * scale, params_u[1] * scale, params_u[2] * scale)?;
    result.params.insert("nu".into(), params.nu);
    result.params.insert("sigma".into(), params.sigma);
    result.params.insert("t_max".into(), params.t_max);
    result.stderr.clear();
    match covariance {
        Some(c) => {
            for (i, name) in ["nu", "sigma", "t_max"].iter().enumerate() {
                result.stderr.insert(name.to_string(), c[i][i].max(0.0).sqrt());
            }
        }
        None => result.push_flag(FitFlag::SingularCovariance),
    }

    if n < 500 {
        warn!("rician fit on {n} samples, below the 500-sample benchmark floor");
        result.push_flag(FitFlag::FewSamples);
    }
    let ks = ks_statistic(&sorted, &params);
    if ks > KS_THRESHOLD {
        warn!("mirrored Rician describes the samples poorly (KS √n·D = {ks:.2})");
        result.push_flag(FitFlag::PoorGoodnessOfFit);
    }
    Ok(RicianFit { params, fit: result, covariance, ks_statistic: ks })
}

/// Inverse of a central-difference Hessian of a negative log-likelihood.
fn inverse_hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Option<nalgebra::DMatrix<f64>> {
    let n = x.len();
    let h: Vec<f64> = x.iter().map(|v| 1e-4 * v.abs().max(1e-2)).collect();
    let mut hess = nalgebra::DMatrix::zeros(n, n);
    let f0 = f(x);
    let mut q = x.to_vec();
    for i in 0..n {
        for j in i..n {
            let val = if i == j {
                q[i] = x[i] + h[i];
                let up = f(&q);
                q[i] = x[i] - h[i];
                let down = f(&q);
                q[i] = x[i];
                (up - 2.0 * f0 + down) / (h[i] * h[i])
            } else {
                let mut corner = |si: f64, sj: f64| {
                    q[i] = x[i] + si * h[i];
                    q[j] = x[j] + sj * h[j];
                    let v = f(&q);
                    q[i] = x[i];
                    q[j] = x[j];
                    v
                };
                (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                    / (4.0 * h[i] * h[j])
            };
            hess[(i, j)] = val;
            hess[(j, i)] = val;
        }
    }
    let inv = hess.try_inverse()?;
    (0..n).all(|i| inv[(i, i)].is_finite() && inv[(i, i)] >= 0.0).then_some(inv)
}
