//! Least-squares and likelihood fits for decay curves, Ramsey fringes and
//! mirrored-Rician coherence distributions.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::domain::{DecayCurve, FitFlag, FitResult, RamseyCurve};

pub mod lm;
pub mod models;
pub mod quad;
mod rician;
pub mod simplex;
pub mod special;

pub use lm::{levenberg_marquardt, CurveModel, LmOutcome, LmSettings};
pub use models::{DampedCosine, Exponential};
pub use rician::{
    fit_rician_mirrored, mirrored_rician_cdf, mirrored_rician_pdf, rician_moments, sample_mirrored_rician,
    MirroredRicianHistogram, RicianFit, RicianFitMode, RicianParams, KS_THRESHOLD,
};

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("fitted support ends at {t_max} but samples reach {max_sample}")]
    SupportViolation { t_max: f64, max_sample: f64 },
}

pub type Result<T> = std::result::Result<T, FitError>;

pub(crate) fn build_result(model: &str, names: &[&str], out: &LmOutcome) -> FitResult {
    let stderr = out.stderr();
    let mut res = FitResult {
        model: model.to_string(),
        params: names
            .iter()
            .zip(&out.params)
            .map(|(n, v)| (n.to_string(), *v))
            .collect(),
        stderr: BTreeMap::new(),
        residual_norm: out.residual_norm,
        converged: out.converged,
        flags: Vec::new(),
    };
    match stderr {
        Some(se) => {
            res.stderr = names.iter().zip(se).map(|(n, v)| (n.to_string(), v)).collect();
        }
        None => res.push_flag(FitFlag::SingularCovariance),
    }
    if !out.converged {
        res.push_flag(FitFlag::NotConverged);
    }
    res
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Slope and intercept of an ordinary least-squares line.
pub(crate) fn linear_regression(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Fits `A·exp(−τ/T1) + B` to a decay curve.
pub fn fit_exponential(curve: &DecayCurve) -> Result<FitResult> {
    let tau = curve.delays();
    let p1 = curve.p1();
    if tau.len() < 4 {
        return Err(FitError::TooFewPoints { need: 4, got: tau.len() });
    }
    let (lo, hi) = p1.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi - lo <= 1e-12 * hi.abs().max(1.0) {
        return Err(FitError::Degenerate("flat decay curve, amplitude indistinguishable from 0".into()));
    }

    let n_tail = (tau.len() / 5).max(2);
    let b0 = mean(&p1[tau.len() - n_tail..]);
    let a0 = p1[0] - b0;
    let sign = if a0 >= 0.0 { 1.0 } else { -1.0 };
    let floor = 0.05 * a0.abs();
    let (lx, ly): (Vec<f64>, Vec<f64>) = tau
        .iter()
        .zip(p1)
        .filter(|(_, &p)| sign * (p - b0) > floor)
        .map(|(&t, &p)| (t, (sign * (p - b0)).ln()))
        .unzip();
    let span = tau[tau.len() - 1] - tau[0];
    let t1_0 = match linear_regression(&lx, &ly) {
        Some((slope, _)) if lx.len() >= 2 && slope < 0.0 => -1.0 / slope,
        _ => span / 3.0,
    };
    let a0 = if a0 == 0.0 { hi - lo } else { a0 };

    let out = levenberg_marquardt(&Exponential, tau, p1, None, &[a0, b0, t1_0], LmSettings::default());
    let res = build_result("exponential", &["A", "B", "t1"], &out);
    let amp = out.params[0];
    if let Some(se) = res.stderr.get("A") {
        if amp.abs() <= 2.0 * se {
            return Err(FitError::Degenerate(format!(
                "fitted amplitude {amp:.3e} within 2 standard errors of 0"
            )));
        }
    }
    Ok(res)
}

/// Frequency of the largest spectral peak of a uniformly sampled signal,
/// refined by parabolic interpolation on a zero-padded FFT. Returns the
/// peaks in descending magnitude, at most `count` of them.
pub(crate) fn spectral_peaks(signal: &[f64], fs: f64, count: usize) -> Vec<f64> {
    let n = signal.len();
    let padded = (n * 16).next_power_of_two();
    let m = mean(signal);
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|v| Complex::new(v - m, 0.0)).collect();
    buf.resize(padded, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);
    let mag: Vec<f64> = buf[..=padded / 2].iter().map(|c| c.norm()).collect();
    let bin = fs / padded as f64;

    let mut maxima: Vec<(usize, f64)> = (0..mag.len())
        .filter(|&k| {
            let left = if k == 0 { mag.get(1).copied().unwrap_or(0.0) } else { mag[k - 1] };
            let right = mag.get(k + 1).copied().unwrap_or(0.0);
            mag[k] >= left && mag[k] >= right
        })
        .map(|k| (k, mag[k]))
        .collect();
    maxima.sort_by(|a, b| b.1.total_cmp(&a.1));
    maxima
        .into_iter()
        .take(count)
        .map(|(k, _)| {
            if k == 0 || k + 1 >= mag.len() {
                return k as f64 * bin;
            }
            let (a, b, c) = (mag[k - 1], mag[k], mag[k + 1]);
            let denom = a - 2.0 * b + c;
            let shift = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
            (k as f64 + shift.clamp(-0.5, 0.5)) * bin
        })
        .collect()
}

/// Decay time of the analytic-signal envelope, from a log-linear fit.
fn envelope_decay(signal: &[f64], tau: &[f64]) -> Option<f64> {
    let n = signal.len();
    let m = mean(signal);
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|v| Complex::new(v - m, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let factor = if k == 0 || (n % 2 == 0 && k == n / 2) {
            1.0
        } else if k < n.div_ceil(2) {
            2.0
        } else {
            0.0
        };
        *c *= factor;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let env: Vec<f64> = buf.iter().map(|c| c.norm() / n as f64).collect();
    let peak = env.iter().copied().fold(0.0, f64::max);
    // skip the edges where the finite-window Hilbert transform rings
    let edge = n / 10;
    let (x, y): (Vec<f64>, Vec<f64>) = (edge..n - edge)
        .filter(|&i| env[i] > 0.1 * peak)
        .map(|i| (tau[i], env[i].ln()))
        .unzip();
    if x.len() < 3 {
        return None;
    }
    let (slope, _) = linear_regression(&x, &y)?;
    (slope < 0.0).then(|| -1.0 / slope)
}

/// Linear solve for `B, c1, c2` in `B + e^{−τ/T}(c1 cos 2πfτ + c2 sin 2πfτ)`.
fn linear_phase_amplitude(tau: &[f64], y: &[f64], f: f64, t2: f64) -> Option<(f64, f64, f64)> {
    let rows = tau.len();
    let mut a = nalgebra::DMatrix::zeros(rows, 3);
    for (i, &t) in tau.iter().enumerate() {
        let e = (-t / t2).exp();
        let (s, c) = (2.0 * PI * f * t).sin_cos();
        a[(i, 0)] = 1.0;
        a[(i, 1)] = e * c;
        a[(i, 2)] = e * s;
    }
    let b = nalgebra::DVector::from_column_slice(y);
    let sol = a.svd(true, true).solve(&b, 1e-12).ok()?;
    let (c1, c2) = (sol[1], sol[2]);
    Some((sol[0], c1.hypot(c2), (-c2).atan2(c1)))
}

fn wrap_phase(phi: f64) -> f64 {
    let mut p = phi.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    p
}

/// Maps `(A, φ0, f)` to the equivalent representation with `A ≥ 0`,
/// `f ∈ [0, f_s/2]` on the sampling grid and `φ0 ∈ (−π, π]`.
fn canonical_cosine(mut amp: f64, mut phi: f64, mut f: f64, fs: f64) -> (f64, f64, f64) {
    if f < 0.0 {
        f = -f;
        phi = -phi;
    }
    if f > 0.5 * fs {
        let k = (f / fs).round();
        let folded = f - k * fs;
        if folded < 0.0 {
            f = -folded;
            phi = -phi;
        } else {
            f = folded;
        }
    }
    if amp < 0.0 {
        amp = -amp;
        phi += PI;
    }
    (amp, wrap_phase(phi), f)
}

/// Fits `A·cos(2πfτ + φ0)·exp(−τ/T2*) + B` to a Ramsey fringe.
///
/// The reported frequency is folded into `[0, Nyquist]`. `Aliased` is set
/// when the result cannot be the set detuning plus a small offset (above
/// `2·Δ_f`) or sits within 2% of Nyquist; `Unresolvable` when it is below
/// `1/t_max`.
pub fn fit_damped_cosine(curve: &RamseyCurve) -> Result<FitResult> {
    let tau = curve.delays();
    let y = curve.p1();
    if tau.len() < 8 {
        return Err(FitError::TooFewPoints { need: 8, got: tau.len() });
    }
    let fs = curve.sampling_rate();
    let nyquist = 0.5 * fs;
    let span = tau[tau.len() - 1] - tau[0];
    let t2_0 = envelope_decay(y, tau).unwrap_or(span / 3.0).clamp(span / 50.0, span * 10.0);

    let mut best: Option<LmOutcome> = None;
    for f0 in spectral_peaks(y, fs, 3) {
        let Some((b0, a0, phi0)) = linear_phase_amplitude(tau, y, f0, t2_0) else {
            continue;
        };
        let out = levenberg_marquardt(&DampedCosine, tau, y, None, &[a0, b0, phi0, f0, t2_0], LmSettings::default());
        let better = match &best {
            None => true,
            Some(b) => out.residual_norm < b.residual_norm,
        };
        if better {
            best = Some(out);
        }
    }
    let mut out = best.ok_or_else(|| FitError::Degenerate("no spectral peak in Ramsey data".into()))?;

    let (amp, phi, f) = canonical_cosine(out.params[0], out.params[2], out.params[3], fs);
    out.params[0] = amp;
    out.params[2] = phi;
    out.params[3] = f;
    let mut res = build_result("damped_cosine", &["A", "B", "phi0", "f_ramsey", "t2star"], &out);

    let set = curve.set_detuning;
    if (set > 0.0 && f > 2.0 * set) || f >= 0.98 * nyquist {
        res.push_flag(FitFlag::Aliased);
    }
    if f < 1.0 / curve.t_max {
        res.push_flag(FitFlag::Unresolvable);
    }
    Ok(res)
}

/// Calibrated drive frequency `f_drive_i − (f_ramsey − Δ_f)`.
///
/// Assumes `Δ_f > |f_drive_i − f_q|`, so the fringe frequency is
/// `Δ_f + (f_drive_i − f_q)` without folding.
pub fn resolve_drive_calibration(f_drive_i: f64, f_ramsey: f64, set_detuning: f64) -> f64 {
    f_drive_i - (f_ramsey - set_detuning)
}
