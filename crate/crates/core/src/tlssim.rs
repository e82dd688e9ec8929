//! Monte Carlo relaxation of a transmon coupled to fluctuating TLS defects.
//!
//! Each defect contributes `Γ = 4g²γ/(γ² + 4δ²)` (s⁻¹ for g, γ, δ in Hz).
//! Couplings are log-uniform over a range, detunings uniform over `±B` and
//! evolve by a reflecting Gaussian random walk (diffusive) or symmetric
//! two-state switching (telegraphic). Strong resonant crossings can be
//! injected at fixed times to produce deterministic dropouts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{ParameterKind, TimeTrace};
use crate::stability::{distribution_summary, ScalingPoint};

/// Name of the generator recorded next to every seed.
pub const RNG_NAME: &str = "chacha8";

#[derive(Debug, Error)]
pub enum TlsError {
    #[error("invalid ensemble config: {0}")]
    Config(String),
    #[error("qubit {label}: {source}")]
    Qubit {
        label: String,
        #[source]
        source: crate::stability::StabilityError,
    },
}

pub type Result<T> = std::result::Result<T, TlsError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dynamics {
    Telegraphic,
    Diffusive,
}

/// A resonant defect switched on for `[start_s, end_s)` and far detuned
/// otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectedCrossing {
    pub start_s: f64,
    pub end_s: f64,
    pub coupling_hz: f64,
    pub linewidth_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n_tls: usize,
    /// Log-uniform coupling range `[g0, g1]`, Hz.
    pub g_range_hz: [f64; 2],
    /// Detuning half-band `B`, Hz.
    pub delta_band_hz: f64,
    pub gamma_hz: f64,
    pub dynamics: Dynamics,
    /// Switching rate (s⁻¹) or diffusion coefficient (Hz²/s).
    pub rate: f64,
    pub background_rate: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub crossings: Vec<InjectedCrossing>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            n_tls: 20,
            g_range_hz: [5e3, 50e3],
            delta_band_hz: 5e6,
            gamma_hz: 200e3,
            dynamics: Dynamics::Diffusive,
            rate: 1e7,
            background_rate: 1e4,
            seed: 0,
            crossings: Vec::new(),
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        let [g0, g1] = self.g_range_hz;
        let bad = |m: &str| Err(TlsError::Config(m.to_string()));
        if !(g0 > 0.0 && g1 >= g0 && g1.is_finite()) {
            return bad("g_range_hz must satisfy 0 < g0 <= g1");
        }
        if !(self.delta_band_hz > 0.0 && self.delta_band_hz.is_finite()) {
            return bad("delta_band_hz must be > 0");
        }
        if !(self.gamma_hz > 0.0 && self.gamma_hz.is_finite()) {
            return bad("gamma_hz must be > 0");
        }
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return bad("rate must be >= 0");
        }
        if !(self.background_rate >= 0.0 && self.background_rate.is_finite()) {
            return bad("background_rate must be >= 0");
        }
        for c in &self.crossings {
            if !(c.end_s > c.start_s && c.coupling_hz > 0.0 && c.linewidth_hz > 0.0) {
                return bad("crossing needs end_s > start_s and positive coupling and linewidth");
            }
        }
        Ok(())
    }

    /// `E[Γ]` and `E[Γ²]` of one stochastic defect, averaged over the
    /// coupling and detuning distributions.
    pub fn defect_moments(&self) -> (f64, f64) {
        let [g0, g1] = self.g_range_hz;
        let gamma = self.gamma_hz;
        let u = 2.0 * self.delta_band_hz;
        let g_moment = |k: i32| {
            if g1 == g0 {
                g0.powi(k)
            } else {
                (g1.powi(k) - g0.powi(k)) / (k as f64 * (g1 / g0).ln())
            }
        };
        // ∫_{-B}^{B} dδ/(γ²+4δ²) = atan(2B/γ)/γ
        let first = 4.0 * gamma * (u / gamma).atan() / gamma / u;
        // ∫_{-B}^{B} dδ/(γ²+4δ²)² = U/(2γ²(γ²+U²)) + atan(U/γ)/(2γ³), U = 2B
        let f_u = u / (2.0 * gamma.powi(2) * (gamma.powi(2) + u * u)) + (u / gamma).atan() / (2.0 * gamma.powi(3));
        let second = 16.0 * gamma * gamma * f_u / u;
        (first * g_moment(2), second * g_moment(4))
    }

    /// `E_g[Var_δ(Γ|g)]`: the time variance a quenched defect contributes.
    pub fn defect_time_variance(&self) -> f64 {
        let [g0, g1] = self.g_range_hz;
        let gamma = self.gamma_hz;
        let u = 2.0 * self.delta_band_hz;
        let (_, second) = self.defect_moments();
        let mean_given_g2 = 4.0 * (u / gamma).atan() / u;
        let g4 = if g1 == g0 { g0.powi(4) } else { (g1.powi(4) - g0.powi(4)) / (4.0 * (g1 / g0).ln()) };
        second - mean_given_g2.powi(2) * g4
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlsDefect {
    pub coupling: f64,
    pub linewidth: f64,
    pub detuning: f64,
    pub dynamics: Dynamics,
    pub rate: f64,
    /// Other detuning of a telegraphic defect.
    pub alt_detuning: f64,
    /// Injected crossing window; overrides the dynamics.
    pub window: Option<(f64, f64)>,
}

impl TlsDefect {
    fn detuning_at(&self, t: f64, band: f64) -> f64 {
        match self.window {
            Some((a, b)) if t >= a && t < b => 0.0,
            Some(_) => 1e3 * band,
            None => self.detuning,
        }
    }
}

/// `4g²γ/(γ² + 4δ²)`.
pub fn single_tls_rate(g: f64, gamma: f64, delta: f64) -> f64 {
    4.0 * g * g * gamma / (gamma * gamma + 4.0 * delta * delta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlsEnsemble {
    pub defects: Vec<TlsDefect>,
    pub n_tls: usize,
    pub background_rate: f64,
    pub band: f64,
}

impl TlsEnsemble {
    pub fn union(&self, other: &TlsEnsemble) -> TlsEnsemble {
        let mut defects = self.defects.clone();
        defects.extend(other.defects.iter().cloned());
        TlsEnsemble {
            n_tls: defects.len(),
            defects,
            background_rate: self.background_rate,
            band: self.band.max(other.band),
        }
    }

    /// Advances stochastic detunings by `dt` seconds.
    pub fn evolve<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) {
        let band = self.band;
        for d in self.defects.iter_mut().filter(|d| d.window.is_none() && d.rate > 0.0) {
            match d.dynamics {
                Dynamics::Diffusive => {
                    let z: f64 = rng.sample(StandardNormal);
                    d.detuning = reflect(d.detuning + (2.0 * d.rate * dt).sqrt() * z, band);
                }
                Dynamics::Telegraphic => {
                    let p_odd = 0.5 * (1.0 - (-2.0 * d.rate * dt).exp());
                    if rng.random::<f64>() < p_odd {
                        std::mem::swap(&mut d.detuning, &mut d.alt_detuning);
                    }
                }
            }
        }
    }
}

/// Folds `x` into `[-b, b]` by mirror reflection at the edges.
fn reflect(x: f64, b: f64) -> f64 {
    let period = 4.0 * b;
    let y = (x + b).rem_euclid(period);
    if y <= 2.0 * b { y - b } else { 3.0 * b - y }
}

/// RNG for `(seed, stream)`; independent qubits use distinct streams.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_defects<R: Rng + ?Sized>(config: &EnsembleConfig, rng: &mut R) -> Vec<TlsDefect> {
    let [g0, g1] = config.g_range_hz;
    let b = config.delta_band_hz;
    let mut defects: Vec<TlsDefect> = (0..config.n_tls)
        .map(|_| {
            let g = if g1 > g0 { g0 * (g1 / g0).powf(rng.random::<f64>()) } else { g0 };
            let detuning = rng.random_range(-b..=b);
            let alt_detuning = rng.random_range(-b..=b);
            TlsDefect {
                coupling: g,
                linewidth: config.gamma_hz,
                detuning,
                dynamics: config.dynamics,
                rate: config.rate,
                alt_detuning,
                window: None,
            }
        })
        .collect();
    defects.extend(config.crossings.iter().map(|c| TlsDefect {
        coupling: c.coupling_hz,
        linewidth: c.linewidth_hz,
        detuning: 1e3 * b,
        dynamics: config.dynamics,
        rate: 0.0,
        alt_detuning: 1e3 * b,
        window: Some((c.start_s, c.end_s)),
    }));
    defects
}

/// Draws an ensemble; deterministic for a given `seed`.
pub fn sample_ensemble(config: &EnsembleConfig, seed: u64) -> Result<TlsEnsemble> {
    config.validate()?;
    let mut rng = rng_stream(seed, 0);
    let defects = draw_defects(config, &mut rng);
    Ok(TlsEnsemble {
        n_tls: defects.len(),
        defects,
        background_rate: config.background_rate,
        band: config.delta_band_hz,
    })
}

/// `Γ_bg + Σ Γ_single` with detunings as currently held (injected windows
/// are evaluated at `t`).
pub fn decay_rate_at(ensemble: &TlsEnsemble, t: f64) -> f64 {
    ensemble.background_rate
        + ensemble
            .defects
            .iter()
            .map(|d| single_tls_rate(d.coupling, d.linewidth, d.detuning_at(t, ensemble.band)))
            .sum::<f64>()
}

/// Samples `T1 = 1/Γ_tot` every `cadence` seconds for `duration` seconds,
/// evolving detunings between samples.
pub fn simulate_t1_trace(ensemble: &TlsEnsemble, duration: f64, cadence: f64, seed: u64) -> Result<TimeTrace> {
    simulate_stream(ensemble, duration, cadence, seed, 1)
}

fn simulate_stream(ensemble: &TlsEnsemble, duration: f64, cadence: f64, seed: u64, stream: u64) -> Result<TimeTrace> {
    if !(cadence > 0.0 && duration > cadence) {
        return Err(TlsError::Config("need duration > cadence > 0".into()));
    }
    if ensemble.background_rate <= 0.0 && ensemble.defects.is_empty() {
        return Err(TlsError::Config("ensemble has no decay channel".into()));
    }
    let mut state = ensemble.clone();
    let mut rng = rng_stream(seed, stream);
    let n = (duration / cadence).floor() as usize + 1;
    let mut times = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * cadence;
        if k > 0 {
            state.evolve(cadence, &mut rng);
        }
        times.push(t);
        values.push(1.0 / decay_rate_at(&state, t));
    }
    TimeTrace::new(ParameterKind::T1, times, values).map_err(|e| TlsError::Config(e.to_string()))
}

/// T2* trace tied to a T1 trace through `1/T2* = 1/(2T1) + 1/T_φ` at a
/// fixed pure-dephasing time.
pub fn coupled_t2star_trace(t1: &TimeTrace, t_phi: f64) -> Result<TimeTrace> {
    if !(t_phi > 0.0) {
        return Err(TlsError::Config(format!("t_phi must be > 0, got {t_phi}")));
    }
    let values = t1.values().iter().map(|&v| 1.0 / (0.5 / v + 1.0 / t_phi)).collect();
    TimeTrace::new(ParameterKind::T2Star, t1.timestamps().to_vec(), values).map_err(|e| TlsError::Config(e.to_string()))
}

/// Settings for a family of synthetic qubits that differ in TLS count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub g_range_hz: [f64; 2],
    pub delta_band_hz: f64,
    pub gamma_hz: f64,
    pub samples_per_qubit: usize,
    pub cadence_s: f64,
}

impl ScalingConfig {
    /// Couplings scaled so the ensemble realises `σ_T1 = a·⟨T1⟩^{3/2}` with
    /// `a` given in µs^-1/2.
    pub fn calibrated(a_per_sqrt_us: f64) -> Self {
        let mut cfg = ScalingConfig {
            g_range_hz: [1e3, 10e3],
            delta_band_hz: 2e6,
            gamma_hz: 200e3,
            samples_per_qubit: 2000,
            cadence_s: 60.0,
        };
        let target = (a_per_sqrt_us * 1e3).powi(2);
        let factor = (target / cfg.a_squared()).sqrt();
        cfg.g_range_hz = [cfg.g_range_hz[0] * factor, cfg.g_range_hz[1] * factor];
        cfg
    }

    fn ensemble(&self, n_tls: usize) -> EnsembleConfig {
        EnsembleConfig {
            n_tls,
            g_range_hz: self.g_range_hz,
            delta_band_hz: self.delta_band_hz,
            gamma_hz: self.gamma_hz,
            dynamics: Dynamics::Diffusive,
            // one step spans the band, so successive samples decorrelate
            rate: self.delta_band_hz.powi(2) / self.cadence_s,
            background_rate: 0.0,
            seed: 0,
            crossings: Vec::new(),
        }
    }

    /// `a²` in s⁻¹ predicted by `Var(T1) ≈ Var(Γ)/⟨Γ⟩⁴` for this ensemble.
    pub fn a_squared(&self) -> f64 {
        let e = self.ensemble(1);
        e.defect_time_variance() / e.defect_moments().0
    }

    /// Predicted `a` in µs^-1/2.
    pub fn predicted_a(&self) -> f64 {
        self.a_squared().sqrt() * 1e-3
    }
}

/// Simulates `n_qubits` qubits with `⟨T1⟩` targets log-spaced over
/// `t1_range` (seconds) and summarises each trace through the Rician
/// distribution fit. Results are in qubit order regardless of thread
/// scheduling.
pub fn scaling_experiment(n_qubits: usize, t1_range: (f64, f64), config: &ScalingConfig, seed: u64) -> Result<Vec<ScalingPoint>> {
    if n_qubits < 3 {
        return Err(TlsError::Config("scaling experiment needs at least 3 qubits".into()));
    }
    let (lo, hi) = t1_range;
    if !(lo > 0.0 && hi > lo) {
        return Err(TlsError::Config("t1_range must satisfy 0 < lo < hi".into()));
    }
    let mean_single = config.ensemble(1).defect_moments().0;
    let duration = config.cadence_s * (config.samples_per_qubit.max(2) - 1) as f64;
    (0..n_qubits)
        .into_par_iter()
        .map(|i| {
            let frac = i as f64 / (n_qubits - 1) as f64;
            let t1 = lo * (hi / lo).powf(frac);
            let n_tls = ((1.0 / (t1 * mean_single)).round() as usize).max(1);
            let label = format!("q{i:02}");
            let ens_cfg = config.ensemble(n_tls);
            let stream = 2 * i as u64;
            let mut rng = rng_stream(seed, stream);
            let ensemble = TlsEnsemble {
                defects: draw_defects(&ens_cfg, &mut rng),
                n_tls,
                background_rate: 0.0,
                band: ens_cfg.delta_band_hz,
            };
            let trace = simulate_stream(&ensemble, duration, config.cadence_s, seed, stream + 1)?;
            let summary = distribution_summary(trace.values())
                .map_err(|source| TlsError::Qubit { label: label.clone(), source })?;
            Ok(ScalingPoint::from_summary(label, &summary, trace.len(), trace.span() / 3600.0))
        })
        .collect()
}

/// Sample skewness `m3/m2^{3/2}`.
pub fn skewness(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let m2 = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m3 = v.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    if m2 == 0.0 { 0.0 } else { m3 / m2.powf(1.5) }
}
