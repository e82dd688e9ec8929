//! Single-shot discrimination by quadratic discriminant analysis, and the
//! derived separation, fidelity and effective temperature.

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{IqShotSet, CODATA};

#[derive(Debug, Error, PartialEq)]
pub enum ReadoutError {
    #[error("need at least 2 shots per prepared state, got {0} for state {1}")]
    TooFewShots(usize, u8),
}

pub type Result<T> = std::result::Result<T, ReadoutError>;

type Mat2 = [[f64; 2]; 2];

fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn inverse(m: &Mat2) -> Mat2 {
    let d = det(m);
    [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassGaussian {
    pub mean: [f64; 2],
    pub cov: Mat2,
}

impl ClassGaussian {
    fn log_density(&self, x: [f64; 2]) -> f64 {
        let inv = inverse(&self.cov);
        let d = [x[0] - self.mean[0], x[1] - self.mean[1]];
        let m = d[0] * (inv[0][0] * d[0] + inv[0][1] * d[1]) + d[1] * (inv[1][0] * d[0] + inv[1][1] * d[1]);
        -0.5 * m - 0.5 * det(&self.cov).ln() - (2.0 * std::f64::consts::PI).ln()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationModel {
    pub classes: [ClassGaussian; 2],
    pub priors: [f64; 2],
    /// Whether a ridge was added to a singular covariance.
    pub regularized: bool,
}

impl DiscriminationModel {
    /// Predicted state of one shot.
    pub fn classify(&self, i: f64, q: f64) -> u8 {
        let score = |k: usize| self.priors[k].ln() + self.classes[k].log_density([i, q]);
        u8::from(score(1) > score(0))
    }

    /// Quadratic coefficient `−½(Σ0⁻¹ − Σ1⁻¹)` of the decision function;
    /// zero when both classes share a covariance.
    pub fn quadratic_form(&self) -> Mat2 {
        let a = inverse(&self.classes[0].cov);
        let b = inverse(&self.classes[1].cov);
        let mut out = [[0.0; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                out[r][c] = -0.5 * (a[r][c] - b[r][c]);
            }
        }
        out
    }
}

fn class_stats(points: &[(f64, f64)]) -> ([f64; 2], Mat2) {
    let n = points.len() as f64;
    let mi = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mq = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut c = [[0.0; 2]; 2];
    for &(i, q) in points {
        let d = [i - mi, q - mq];
        for r in 0..2 {
            for k in 0..2 {
                c[r][k] += d[r] * d[k];
            }
        }
    }
    for row in &mut c {
        for v in row.iter_mut() {
            *v /= n - 1.0;
        }
    }
    ([mi, mq], c)
}

fn is_singular(c: &Mat2) -> bool {
    let tr = c[0][0] + c[1][1];
    !(c[0][0] > 0.0 && c[1][1] > 0.0) || det(c) <= 1e-12 * tr * tr
}

/// Class-conditional Gaussians with equal priors. A singular covariance is
/// regularised by `ε·I` with `ε = 10⁻⁶·trace/2`.
pub fn fit_discriminator(shots: &IqShotSet) -> Result<DiscriminationModel> {
    let mut classes = [ClassGaussian { mean: [0.0; 2], cov: [[0.0; 2]; 2] }; 2];
    for state in 0..2u8 {
        let pts: Vec<(f64, f64)> = shots.class(state).collect();
        if pts.len() < 2 {
            return Err(ReadoutError::TooFewShots(pts.len(), state));
        }
        let (mean, cov) = class_stats(&pts);
        classes[state as usize] = ClassGaussian { mean, cov };
    }
    let pooled_trace = classes.iter().map(|c| c.cov[0][0] + c.cov[1][1]).sum::<f64>() / 2.0;
    let dm2 = (classes[1].mean[0] - classes[0].mean[0]).powi(2) + (classes[1].mean[1] - classes[0].mean[1]).powi(2);
    let mut regularized = false;
    for (k, class) in classes.iter_mut().enumerate() {
        if is_singular(&class.cov) {
            let tr = class.cov[0][0] + class.cov[1][1];
            let base = [tr, pooled_trace, dm2].into_iter().find(|v| *v > 0.0).unwrap_or(2e-6);
            let eps = 1e-6 * base / 2.0;
            class.cov[0][0] += eps;
            class.cov[1][1] += eps;
            regularized = true;
            warn!("covariance of class {k} is singular; added ridge {eps:.3e}");
        }
    }
    Ok(DiscriminationModel { classes, priors: [0.5, 0.5], regularized })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TeffStatus {
    Ok,
    /// No prepared-|0⟩ shot was assigned to |1⟩; `t_eff` is a 0 K marker.
    NoExcitation,
    /// `P(1|0) ≥ P(0|0)`; no positive temperature fits.
    Inverted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutMetrics {
    pub delta_m: f64,
    pub fidelity: f64,
    /// `confusion[j][i] = P(i|j)`: row is the prepared state.
    pub confusion: Mat2,
    /// Kelvin.
    pub t_eff: f64,
    pub t_eff_status: TeffStatus,
    /// Training-set accuracy of the discriminator.
    pub accuracy: f64,
}

impl ReadoutMetrics {
    pub fn t_eff_mk(&self) -> f64 {
        self.t_eff * 1e3
    }
}

/// `1 − (P(0|1) + P(1|0))/2`.
pub fn readout_fidelity(p01: f64, p10: f64) -> f64 {
    1.0 - 0.5 * (p01 + p10)
}

/// `T_eff = −h·f_q / (k_B·ln(P(1|0)/P(0|0)))` in kelvin.
pub fn effective_temperature(f_q: f64, p10: f64, p00: f64) -> (f64, TeffStatus) {
    if p10 <= 0.0 {
        return (0.0, TeffStatus::NoExcitation);
    }
    if p10 >= p00 {
        return (f64::INFINITY, TeffStatus::Inverted);
    }
    (-CODATA.h * f_q / (CODATA.k_b * (p10 / p00).ln()), TeffStatus::Ok)
}

pub fn compute_metrics(shots: &IqShotSet, model: &DiscriminationModel, f_q: f64) -> ReadoutMetrics {
    let mut counts = [[0usize; 2]; 2];
    for s in shots.shots() {
        counts[s.prepared_state as usize][model.classify(s.i, s.q) as usize] += 1;
    }
    let mut confusion = [[0.0; 2]; 2];
    for j in 0..2 {
        let total = (counts[j][0] + counts[j][1]) as f64;
        for i in 0..2 {
            confusion[j][i] = counts[j][i] as f64 / total;
        }
    }
    let [m0, m1] = [model.classes[0].mean, model.classes[1].mean];
    let delta_m = (m1[0] - m0[0]).hypot(m1[1] - m0[1]);
    let (t_eff, t_eff_status) = effective_temperature(f_q, confusion[0][1], confusion[0][0]);
    let correct = counts[0][0] + counts[1][1];
    ReadoutMetrics {
        delta_m,
        fidelity: readout_fidelity(confusion[1][0], confusion[0][1]),
        confusion,
        t_eff,
        t_eff_status,
        accuracy: correct as f64 / shots.len() as f64,
    }
}

/// Jarque–Bera statistic and its χ²(2) p-value `exp(−JB/2)`.
pub fn jarque_bera(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    let m3 = x.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2) - 3.0;
    let jb = n / 6.0 * (skew * skew + kurt * kurt / 4.0);
    (jb, (-jb / 2.0).exp())
}
