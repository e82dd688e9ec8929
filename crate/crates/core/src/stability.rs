//! Time-series analytics for one cooldown: distribution summaries, dropout
//! intervals, cross-parameter coincidence and the `σ_T1 = a·⟨T1⟩^{3/2}` fit.

use std::collections::BTreeMap;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{FitFlag, FitResult, ParameterKind, TimeTrace};
use crate::fitters::{fit_rician_mirrored, linear_regression, rician_moments, FitError, RicianFitMode, RicianParams};

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("need at least {need} admitted points, got {got}")]
    InsufficientPoints { need: usize, got: usize },
    #[error("no datasets admitted")]
    NoDatasets,
}

pub type Result<T> = std::result::Result<T, StabilityError>;

/// Minimum sample count and span for a benchmark point.
pub const MIN_SAMPLES: usize = 500;
pub const MIN_SPAN_HOURS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub params: RicianParams,
    pub fit: FitResult,
    pub mean: f64,
    pub std: f64,
    /// Standard error of `std`, propagated from the fit covariance.
    pub std_err: Option<f64>,
    pub skewness: f64,
    pub n: usize,
}

/// Mirrored-Rician fit with integration-based mean and standard deviation.
pub fn distribution_summary(samples: &[f64]) -> Result<DistributionSummary> {
    let rf = fit_rician_mirrored(samples, RicianFitMode::MaximumLikelihood)?;
    let (mean, std) = rician_moments(&rf.params);
    let std_err = rf.covariance.and_then(|cov| {
        let p = [rf.params.nu, rf.params.sigma, rf.params.t_max];
        let mut grad = [0.0; 3];
        for j in 0..3 {
            let h = 1e-5 * p[j].abs().max(rf.params.sigma);
            let mut up = p;
            let mut down = p;
            up[j] += h;
            down[j] -= h;
            if down[0] < 0.0 {
                down[0] = 0.0;
            }
            let step = up[j] - down[j];
            let s = |q: [f64; 3]| RicianParams::new(q[0], q[1], q[2]).ok().map(|r| rician_moments(&r).1);
            grad[j] = (s(up)? - s(down)?) / step;
        }
        let mut var = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                var += grad[i] * cov[i][j] * grad[j];
            }
        }
        (var.is_finite() && var >= 0.0).then(|| var.sqrt())
    });
    Ok(DistributionSummary {
        params: rf.params,
        fit: rf.fit,
        mean,
        std,
        std_err,
        skewness: crate::tlssim::skewness(samples),
        n: samples.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropoutReport {
    /// `(t_start, t_end)` of each run, seconds, disjoint and ordered.
    pub intervals: Vec<(f64, f64)>,
    /// Inclusive sample-index ranges of the same runs.
    pub sample_ranges: Vec<(usize, usize)>,
    pub threshold: f64,
    pub affected_fraction: f64,
}

/// Runs strictly below `mean − std`; runs separated by at most one sample
/// are merged.
pub fn detect_dropouts(trace: &TimeTrace, moments: (f64, f64)) -> DropoutReport {
    detect_dropouts_with(trace, moments, 1.0)
}

/// [`detect_dropouts`] with threshold `mean − k·std`.
pub fn detect_dropouts_with(trace: &TimeTrace, moments: (f64, f64), k: f64) -> DropoutReport {
    if !trace.kind.is_coherence() {
        warn!("dropout detection on a {} trace", trace.kind);
    }
    let threshold = moments.0 - k * moments.1;
    let values = trace.values();
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < values.len() {
        if values[i] < threshold {
            let start = i;
            while i + 1 < values.len() && values[i + 1] < threshold {
                i += 1;
            }
            match runs.last_mut() {
                // gap of at most one sample between runs
                Some(last) if start <= last.1 + 2 => last.1 = i,
                _ => runs.push((start, i)),
            }
        }
        i += 1;
    }
    let t = trace.timestamps();
    let covered: usize = runs.iter().map(|(a, b)| b - a + 1).sum();
    DropoutReport {
        intervals: runs.iter().map(|&(a, b)| (t[a], t[b])).collect(),
        sample_ranges: runs,
        threshold,
        affected_fraction: covered as f64 / values.len() as f64,
    }
}

impl DropoutReport {
    fn contains(&self, t: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| t >= a && t <= b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOverlap {
    pub from: String,
    pub to: String,
    /// Fraction of `from` dropout samples whose nearest `to` sample is also
    /// in a dropout.
    pub overlap: f64,
    pub coincident: bool,
}

fn nearest_index(sorted: &[f64], t: f64) -> usize {
    match sorted.binary_search_by(|v| v.total_cmp(&t)) {
        Ok(i) => i,
        Err(0) => 0,
        Err(i) if i >= sorted.len() => sorted.len() - 1,
        Err(i) => {
            if t - sorted[i - 1] <= sorted[i] - t {
                i - 1
            } else {
                i
            }
        }
    }
}

/// Directed overlap fractions for every ordered pair of traces with
/// dropouts. Pairs at or above `threshold` are marked coincident.
pub fn coincidence_report(
    traces: &BTreeMap<String, TimeTrace>,
    reports: &BTreeMap<String, DropoutReport>,
    threshold: f64,
) -> Vec<PairOverlap> {
    let mut out = Vec::new();
    for (from, rep_a) in reports {
        let Some(trace_a) = traces.get(from) else { continue };
        let flagged: Vec<f64> = trace_a
            .timestamps()
            .iter()
            .copied()
            .filter(|&t| rep_a.contains(t))
            .collect();
        if flagged.is_empty() {
            continue;
        }
        for (to, rep_b) in reports {
            if to == from {
                continue;
            }
            let Some(trace_b) = traces.get(to) else { continue };
            let tb = trace_b.timestamps();
            let hits = flagged
                .iter()
                .filter(|&&t| rep_b.contains(tb[nearest_index(tb, t)]))
                .count();
            let overlap = hits as f64 / flagged.len() as f64;
            out.push(PairOverlap {
                from: from.clone(),
                to: to.clone(),
                overlap,
                coincident: overlap >= threshold,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub label: String,
    /// Seconds.
    pub mean_t1: f64,
    /// Seconds.
    pub std_t1: f64,
    #[serde(default)]
    pub std_t1_err: Option<f64>,
    pub n_samples: usize,
    pub span_hours: f64,
}

impl ScalingPoint {
    pub fn from_summary(label: String, s: &DistributionSummary, n_samples: usize, span_hours: f64) -> Self {
        ScalingPoint {
            label,
            mean_t1: s.mean,
            std_t1: s.std,
            std_t1_err: s.std_err,
            n_samples,
            span_hours,
        }
    }

    /// More than 500 samples over at least 10 hours.
    pub fn admitted(&self) -> bool {
        self.n_samples > MIN_SAMPLES && self.span_hours >= MIN_SPAN_HOURS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitSystem {
    /// Seconds, so `a` is in s^-1/2.
    #[default]
    Si,
    /// Microseconds, so `a` is in µs^-1/2.
    Lab,
}

impl UnitSystem {
    /// Factor converting `a` from s^-1/2 to this system.
    pub fn a_factor(self) -> f64 {
        match self {
            UnitSystem::Si => 1.0,
            UnitSystem::Lab => 1e-3,
        }
    }

    pub fn time_factor(self) -> f64 {
        match self {
            UnitSystem::Si => 1.0,
            UnitSystem::Lab => 1e6,
        }
    }

    pub fn a_unit(self) -> &'static str {
        match self {
            UnitSystem::Si => "s^-1/2",
            UnitSystem::Lab => "us^-1/2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    /// s^-1/2.
    pub a: f64,
    pub a_stderr: f64,
    pub exponent: f64,
    pub exponent_stderr: f64,
    /// Prefactor of the free-exponent fit, s^(1 − exponent).
    pub free_prefactor: f64,
    pub weighted: bool,
    pub n_points: usize,
    pub excluded: Vec<String>,
}

impl ScalingFit {
    pub fn a_in(&self, units: UnitSystem) -> (f64, f64) {
        (self.a * units.a_factor(), self.a_stderr * units.a_factor())
    }
}

/// Fits `σ = a·T^{3/2}` by weighted least squares and, for diagnostics,
/// `ln σ = ln c + b·ln T` by ordinary regression. Points failing the
/// admission rule are excluded unless `override_admission`.
pub fn fit_scaling_law(points: &[ScalingPoint], override_admission: bool) -> Result<ScalingFit> {
    let (used, excluded): (Vec<&ScalingPoint>, Vec<&ScalingPoint>) =
        points.iter().partition(|p| override_admission || p.admitted());
    if used.len() < 3 {
        return Err(StabilityError::InsufficientPoints { need: 3, got: used.len() });
    }
    let weighted = used.iter().all(|p| p.std_t1_err.is_some_and(|e| e > 0.0));
    let w: Vec<f64> = used
        .iter()
        .map(|p| if weighted { p.std_t1_err.unwrap().powi(-2) } else { 1.0 })
        .collect();
    let t15: Vec<f64> = used.iter().map(|p| p.mean_t1.powf(1.5)).collect();
    let swtt: f64 = w.iter().zip(&t15).map(|(w, t)| w * t * t).sum();
    let swst: f64 = used.iter().zip(&w).zip(&t15).map(|((p, w), t)| w * p.std_t1 * t).sum();
    let a = swst / swtt;
    let rss: f64 = used
        .iter()
        .zip(&w)
        .zip(&t15)
        .map(|((p, w), t)| w * (p.std_t1 - a * t).powi(2))
        .sum();
    let a_stderr = (rss / (used.len() - 1) as f64 / swtt).sqrt();

    let lx: Vec<f64> = used.iter().map(|p| p.mean_t1.ln()).collect();
    let ly: Vec<f64> = used.iter().map(|p| p.std_t1.ln()).collect();
    let (slope, icpt) = linear_regression(&lx, &ly).ok_or(StabilityError::InsufficientPoints { need: 3, got: 1 })?;
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    let resid: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    let exponent_stderr = (resid / (lx.len() - 2).max(1) as f64 / sxx).sqrt();

    Ok(ScalingFit {
        a,
        a_stderr,
        exponent: slope,
        exponent_stderr,
        free_prefactor: icpt.exp(),
        weighted,
        n_points: used.len(),
        excluded: excluded.iter().map(|p| p.label.clone()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSeries {
    /// `|f_Ramsey| − Δ_f` over time; `None` when every entry was dropped.
    pub trace: Option<TimeTrace>,
    pub max_abs_offset: f64,
    pub dropped_aliased: usize,
    pub dropped_unconverged: usize,
}

/// `|f_Ramsey| − Δ_f` for each `(timestamp, fit)`; aliased and
/// unconverged fits are dropped and counted.
pub fn frequency_drift_series(fits: &[(f64, FitResult)], set_detuning: f64) -> DriftSeries {
    let mut dropped_aliased = 0;
    let mut dropped_unconverged = 0;
    let mut t = Vec::new();
    let mut v = Vec::new();
    for (ts, fit) in fits {
        if fit.has_flag(FitFlag::Aliased) {
            dropped_aliased += 1;
            continue;
        }
        if !fit.reliable() {
            dropped_unconverged += 1;
            continue;
        }
        let Some(f) = fit.param("f_ramsey") else {
            dropped_unconverged += 1;
            continue;
        };
        t.push(*ts);
        v.push(f.abs() - set_detuning);
    }
    let max_abs_offset = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let trace = TimeTrace::new(ParameterKind::FRamseyOffset, t, v).ok();
    DriftSeries { trace, max_abs_offset, dropped_aliased, dropped_unconverged }
}
