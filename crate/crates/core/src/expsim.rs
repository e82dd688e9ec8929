//! Synthetic raw data: decay curves, Ramsey fringes with virtual-Z
//! detuning, and single-shot IQ clouds.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{DecayCurve, DomainError, IqShot, IqShotSet, QubitDesign, RamseyCurve};
use crate::tlssim::rng_stream;

#[derive(Debug, Error)]
pub enum ExpSimError {
    #[error("invalid noise config: {0}")]
    Config(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

pub type Result<T> = std::result::Result<T, ExpSimError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentNoiseConfig {
    /// Repetitions per delay point; `None` gives noiseless curves.
    pub shots_per_point: Option<u32>,
    /// Shots per prepared state in single-shot runs.
    pub single_shot_shots: u32,
    pub iq_blob_sigma: f64,
    pub thermal_excitation_p: f64,
    pub decay_during_readout_p: f64,
    pub mist_mode: bool,
    pub mist_spread_scale: f64,
    /// Fraction of prepared-|1⟩ shots scattered in MIST mode.
    pub mist_fraction: f64,
    /// Decay-curve amplitude `A` and offset `B`.
    pub decay_amplitude: f64,
    pub decay_offset: f64,
}

impl Default for ExperimentNoiseConfig {
    fn default() -> Self {
        ExperimentNoiseConfig {
            shots_per_point: Some(1 << 10),
            single_shot_shots: 1 << 12,
            iq_blob_sigma: 1.0,
            thermal_excitation_p: 0.0,
            decay_during_readout_p: 0.0,
            mist_mode: false,
            mist_spread_scale: 1.0,
            mist_fraction: 0.3,
            decay_amplitude: 1.0,
            decay_offset: 0.0,
        }
    }
}

impl ExperimentNoiseConfig {
    pub fn noiseless() -> Self {
        ExperimentNoiseConfig { shots_per_point: None, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(ExpSimError::Config(format!("{name} must lie in [0, 1], got {p}")))
            }
        };
        prob("thermal_excitation_p", self.thermal_excitation_p)?;
        prob("decay_during_readout_p", self.decay_during_readout_p)?;
        prob("mist_fraction", self.mist_fraction)?;
        if self.shots_per_point == Some(0) || self.single_shot_shots == 0 {
            return Err(ExpSimError::Config("shot counts must be >= 1".into()));
        }
        if !(self.iq_blob_sigma >= 0.0 && self.mist_spread_scale >= 0.0) {
            return Err(ExpSimError::Config("iq_blob_sigma and mist_spread_scale must be >= 0".into()));
        }
        Ok(())
    }
}

fn sample_population<R: Rng + ?Sized>(p: f64, shots: Option<u32>, rng: &mut R) -> f64 {
    let p = p.clamp(0.0, 1.0);
    match shots {
        None => p,
        Some(n) => {
            let k = Binomial::new(n as u64, p).expect("p clamped to [0, 1]").sample(rng);
            k as f64 / n as f64
        }
    }
}

/// `τ = 0` followed by 39 geometric points from `T1/20` to `5·T1`.
pub fn default_decay_grid(t1: f64) -> Vec<f64> {
    let (lo, hi) = (t1 / 20.0, 5.0 * t1);
    std::iter::once(0.0)
        .chain((0..39).map(|k| lo * (hi / lo).powf(k as f64 / 38.0)))
        .collect()
}

/// Decay curve `A·exp(−τ/T1) + B` with binomial shot noise.
pub fn simulate_decay_curve(t1: f64, grid: &[f64], noise: &ExperimentNoiseConfig, seed: u64) -> Result<DecayCurve> {
    noise.validate()?;
    if !(t1 > 0.0) {
        return Err(ExpSimError::Config(format!("t1 must be > 0, got {t1}")));
    }
    let mut rng = rng_stream(seed, 0);
    let p1 = grid
        .iter()
        .map(|&tau| {
            let ideal = noise.decay_amplitude * (-tau / t1).exp() + noise.decay_offset;
            sample_population(ideal, noise.shots_per_point, &mut rng)
        })
        .collect();
    Ok(DecayCurve::new(grid.to_vec(), p1, noise.shots_per_point)?)
}

/// Phase `2πΔ_f·τ mod 2π` added to the second Ramsey pulse.
pub fn virtual_z_phase(set_detuning: f64, tau: f64) -> f64 {
    TAU * (set_detuning * tau).rem_euclid(1.0)
}

/// Sampling protocol of one Ramsey series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamseyProtocol {
    pub label: &'static str,
    pub t_max: f64,
    pub nyquist: f64,
    pub set_detuning: f64,
    /// Mean T2* reported for the device, s.
    pub mean_t2star: f64,
}

impl RamseyProtocol {
    /// Linear grid over `[0, t_max]` at twice the Nyquist frequency.
    pub fn grid(&self) -> Vec<f64> {
        ramsey_grid(self.t_max, self.nyquist)
    }
}

/// Per-qubit Ramsey settings (t_max, Nyquist frequency, set detuning, mean T2*).
pub const RAMSEY_PROTOCOLS: [RamseyProtocol; 8] = [
    RamseyProtocol { label: "A.1", t_max: 120e-6, nyquist: 166.7e3, set_detuning: 20e3, mean_t2star: 28.56e-6 },
    RamseyProtocol { label: "A.2", t_max: 250e-6, nyquist: 80e3, set_detuning: 10e3, mean_t2star: 51.26e-6 },
    RamseyProtocol { label: "A.3", t_max: 200e-6, nyquist: 100e3, set_detuning: 10e3, mean_t2star: 38.88e-6 },
    RamseyProtocol { label: "A.4", t_max: 150e-6, nyquist: 133.3e3, set_detuning: 10e3, mean_t2star: 34.96e-6 },
    RamseyProtocol { label: "B.1", t_max: 150e-6, nyquist: 133.3e3, set_detuning: 15e3, mean_t2star: 39.38e-6 },
    RamseyProtocol { label: "B.2", t_max: 250e-6, nyquist: 80e3, set_detuning: 10e3, mean_t2star: 44.15e-6 },
    RamseyProtocol { label: "B.3", t_max: 250e-6, nyquist: 80e3, set_detuning: 15e3, mean_t2star: 44.03e-6 },
    RamseyProtocol { label: "B.4", t_max: 100e-6, nyquist: 200e3, set_detuning: 15e3, mean_t2star: 15.96e-6 },
];

pub fn ramsey_protocol(label: &str) -> Option<RamseyProtocol> {
    RAMSEY_PROTOCOLS.iter().copied().find(|p| p.label.eq_ignore_ascii_case(label))
}

/// `n + 1` evenly spaced delays over `[0, t_max]` with `n = round(2·f_N·t_max)`.
pub fn ramsey_grid(t_max: f64, nyquist: f64) -> Vec<f64> {
    let n = (2.0 * nyquist * t_max).round().max(1.0) as usize;
    (0..=n).map(|k| t_max * (k as f64 / n as f64)).collect()
}

/// Ramsey fringe `½ + ½·cos(2πδτ + φ(τ))·exp(−τ/T2*)` with `φ` the
/// virtual-Z phase, so the fringe oscillates at `|δ + Δ_f|`.
///
/// `drive_offset` is `δ = f_drive − f_q`; a qubit that moved up in
/// frequency by `x` appears as `δ = −x`.
pub fn simulate_ramsey_curve(
    drive_offset: f64,
    t2star: f64,
    set_detuning: f64,
    t_max: f64,
    grid: &[f64],
    noise: &ExperimentNoiseConfig,
    seed: u64,
) -> Result<RamseyCurve> {
    noise.validate()?;
    if !(t2star > 0.0 && t_max > 0.0) {
        return Err(ExpSimError::Config("t2star and t_max must be > 0".into()));
    }
    let mut rng = rng_stream(seed, 0);
    let p1 = grid
        .iter()
        .map(|&tau| {
            let phase = (TAU * drive_offset * tau).rem_euclid(TAU) + virtual_z_phase(set_detuning, tau);
            let ideal = 0.5 + 0.5 * phase.cos() * (-tau / t2star).exp();
            sample_population(ideal, noise.shots_per_point, &mut rng)
        })
        .collect();
    Ok(RamseyCurve::new(grid.to_vec(), p1, set_detuning, t_max, noise.shots_per_point)?)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    sigma * rng.sample::<f64, _>(StandardNormal)
}

/// Single-shot IQ clouds: |0⟩ at the origin, |1⟩ at `(separation, 0)`.
///
/// A fraction `thermal_excitation_p` of prepared-|0⟩ shots lands in the
/// |1⟩ blob; a fraction `decay_during_readout_p` of prepared-|1⟩ shots is
/// placed uniformly along the segment towards |0⟩. In MIST mode a further
/// `mist_fraction` of |1⟩ shots is scattered over a half-ring of radius
/// `separation + mist_spread_scale·U`.
pub fn simulate_single_shot(
    design: &QubitDesign,
    separation: f64,
    noise: &ExperimentNoiseConfig,
    seed: u64,
) -> Result<IqShotSet> {
    noise.validate()?;
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(ExpSimError::Config(format!("separation must be >= 0, got {separation}")));
    }
    log::debug!("single-shot run for {}", design.label());
    let n = noise.single_shot_shots as usize;
    let s = noise.iq_blob_sigma;
    let mut rng = rng_stream(seed, 0);
    let mut shots = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let excited = rng.random::<f64>() < noise.thermal_excitation_p;
        let cx = if excited { separation } else { 0.0 };
        shots.push(IqShot { i: cx + gaussian(&mut rng, s), q: gaussian(&mut rng, s), prepared_state: 0 });
    }
    for _ in 0..n {
        let u: f64 = rng.random();
        let (cx, cy) = if u < noise.decay_during_readout_p {
            (separation * rng.random::<f64>(), 0.0)
        } else if noise.mist_mode && u < noise.decay_during_readout_p + noise.mist_fraction {
            let radius = separation + noise.mist_spread_scale * rng.random::<f64>();
            let angle = PI * rng.random::<f64>() - 0.5 * PI;
            (radius * angle.cos(), radius * angle.sin())
        } else {
            (separation, 0.0)
        };
        shots.push(IqShot { i: cx + gaussian(&mut rng, s), q: cy + gaussian(&mut rng, s), prepared_state: 1 });
    }
    Ok(IqShotSet::new(shots)?)
}
