//! Junction aging across cooldowns: normal-state resistance from the qubit
//! frequency, dispersive resonator pulling, and the split of resonator
//! shifts into pulling and bare-frequency parts.

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{CooldownRecord, CODATA};

#[derive(Debug, Error, PartialEq)]
pub enum AgingError {
    #[error("need at least 2 usable cooldown records, got {0}")]
    TooFewRecords(usize),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, AgingError>;

/// Ratio below which the transmon approximation is reported as doubtful.
pub const MIN_EJ_EC_RATIO: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionState {
    /// J.
    pub e_j: f64,
    /// J.
    pub e_c: f64,
    /// Ω.
    pub r_n: f64,
    /// J.
    pub delta: f64,
}

/// `E_J = hΔ/(8e²R_N)`.
pub fn josephson_energy(r_n: f64, delta: f64) -> f64 {
    CODATA.h * delta / (8.0 * CODATA.e * CODATA.e * r_n)
}

impl JunctionState {
    pub fn from_resistance(r_n: f64, e_c: f64, delta: f64) -> Result<Self> {
        if !(r_n > 0.0 && e_c > 0.0 && delta > 0.0) {
            return Err(AgingError::Invalid("r_n, e_c and delta must be positive".into()));
        }
        Ok(JunctionState { e_j: josephson_energy(r_n, delta), e_c, r_n, delta })
    }

    pub fn ej_ec_ratio(&self) -> f64 {
        self.e_j / self.e_c
    }
}

/// `f_q = (√(8·E_J·E_C) − E_C)/h`.
pub fn fq_from_junction(state: &JunctionState) -> f64 {
    if state.ej_ec_ratio() < MIN_EJ_EC_RATIO {
        warn!("E_J/E_C = {:.1} is below {MIN_EJ_EC_RATIO}; transmon formula is approximate", state.ej_ec_ratio());
    }
    ((8.0 * state.e_j * state.e_c).sqrt() - state.e_c) / CODATA.h
}

/// `R_N = hΔE_C / (e²(f_q·h + E_C)²)`.
pub fn rn_from_fq(f_q: f64, e_c: f64, delta: f64) -> f64 {
    CODATA.h * delta * e_c / (CODATA.e.powi(2) * (f_q * CODATA.h + e_c).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorModel {
    /// Hz.
    pub f_r_bare: f64,
    /// Hz.
    pub g: f64,
    /// m.
    pub l_tot: Option<f64>,
    pub eps_eff: Option<f64>,
}

impl ResonatorModel {
    /// Bare frequency from the quarter-wave geometry.
    pub fn from_geometry(l_tot: f64, eps_eff: f64, g: f64) -> Result<Self> {
        if !(l_tot > 0.0 && eps_eff >= 1.0 && g >= 0.0) {
            return Err(AgingError::Invalid("need l_tot > 0, eps_eff >= 1, g >= 0".into()));
        }
        Ok(ResonatorModel { f_r_bare: bare_fr(l_tot, eps_eff), g, l_tot: Some(l_tot), eps_eff: Some(eps_eff) })
    }
}

/// Dispersive estimate `f_r = f_bare + g²/(f_bare − f_q)`.
pub fn dressed_fr(model: &ResonatorModel, f_q: f64) -> f64 {
    let detuning = model.f_r_bare - f_q;
    if detuning.abs() < 10.0 * model.g {
        warn!("resonator-qubit detuning {detuning:.3e} Hz is within 10 g; dispersive formula is approximate");
    }
    model.f_r_bare + model.g * model.g / detuning
}

/// `c0/(4·l_tot·√ε_eff)`.
pub fn bare_fr(l_tot: f64, eps_eff: f64) -> f64 {
    CODATA.c0 / (4.0 * l_tot * eps_eff.sqrt())
}

/// Coupling implied by a dressed pair: `g² = (f_r − f_bare)(f_bare − f_q)`.
pub fn coupling_from_pair(f_r: f64, f_q: f64, f_r_bare: f64) -> Result<f64> {
    let g2 = (f_r - f_r_bare) * (f_r_bare - f_q);
    if !(g2 >= 0.0) {
        return Err(AgingError::Invalid(format!(
            "f_r = {f_r}, f_q = {f_q} cannot be dressed from f_r_bare = {f_r_bare}"
        )));
    }
    Ok(g2.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSplit {
    pub index: u32,
    pub elapsed_days: f64,
    /// Observed `f_r − f_r,ref`, Hz.
    pub delta_fr: f64,
    /// Shift explained by the qubit moving with fixed bare frequency, Hz.
    pub pulling: f64,
    /// Remainder attributed to the bare frequency, Hz.
    pub bare: f64,
    /// `pulling/delta_fr`; `None` when the observed shift is zero.
    pub pulling_share: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftDecomposition {
    pub reference_index: u32,
    /// Coupling back-solved from the reference record, Hz.
    pub g_ref: f64,
    pub f_r_bare: f64,
    pub splits: Vec<ShiftSplit>,
    pub notes: Vec<String>,
}

fn usable(records: &[CooldownRecord], notes: &mut Vec<String>) -> Vec<(u32, f64, f64, f64)> {
    records
        .iter()
        .filter_map(|r| match (r.f_q, r.f_r) {
            (Some(q), Some(f)) => Some((r.index, r.elapsed_days, q, f)),
            _ => {
                notes.push(format!("cooldown {} skipped: f_q or f_r missing", r.index));
                None
            }
        })
        .collect()
}

/// Splits each resonator shift relative to the first usable record into a
/// pulling part (dispersive prediction with the bare frequency held and
/// `g ∝ R_N^{-1/4}`) and the bare-frequency remainder.
pub fn decompose_fr_shift(
    records: &[CooldownRecord],
    model: &ResonatorModel,
    e_c: f64,
    delta: f64,
) -> Result<ShiftDecomposition> {
    let mut notes = Vec::new();
    let rows = usable(records, &mut notes);
    if rows.len() < 2 {
        return Err(AgingError::TooFewRecords(rows.len()));
    }
    let (ref_index, _, fq0, fr0) = rows[0];
    if records.first().is_some_and(|r| r.index != ref_index) {
        notes.push(format!("baseline taken from cooldown {ref_index}, the earliest with both frequencies"));
    }
    let f_bare = model.f_r_bare;
    let g0 = coupling_from_pair(fr0, fq0, f_bare)?;
    let rn0 = rn_from_fq(fq0, e_c, delta);
    let splits = rows[1..]
        .iter()
        .map(|&(index, elapsed_days, fq, fr)| {
            let g = g0 * (rn0 / rn_from_fq(fq, e_c, delta)).powf(0.25);
            let predicted = dressed_fr(&ResonatorModel { g, ..*model }, fq);
            // the reference dresses exactly to fr0 with g0, so differences cancel the bare term
            let pulling = (predicted - f_bare) - (fr0 - f_bare);
            let delta_fr = fr - fr0;
            ShiftSplit {
                index,
                elapsed_days,
                delta_fr,
                pulling,
                bare: delta_fr - pulling,
                pulling_share: (delta_fr != 0.0).then(|| pulling / delta_fr),
            }
        })
        .collect();
    Ok(ShiftDecomposition { reference_index: ref_index, g_ref: g0, f_r_bare: f_bare, splits, notes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CooldownRow {
    pub index: u32,
    pub elapsed_days: f64,
    pub delta_fq: Option<f64>,
    pub delta_fr: Option<f64>,
    pub r_n: Option<f64>,
    pub delta_rn_rel: Option<f64>,
    pub mean_t1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CooldownReport {
    pub baseline_index: u32,
    pub rows: Vec<CooldownRow>,
    pub notes: Vec<String>,
}

/// Deltas of `f_q`, `f_r` and `R_N` relative to the earliest record that
/// has them, plus the mean-T1 series as observed.
pub fn cooldown_report(records: &[CooldownRecord], e_c: f64, delta: f64) -> Result<CooldownReport> {
    crate::domain::check_cooldown_series(records).map_err(|e| AgingError::Invalid(e.to_string()))?;
    let mut notes = Vec::new();
    let first_fq = records.iter().find(|r| r.f_q.is_some());
    let first_fr = records.iter().find(|r| r.f_r.is_some());
    let Some(base) = first_fq.or(first_fr).or(records.first()) else {
        return Err(AgingError::TooFewRecords(0));
    };
    if records.first().is_some_and(|r| r.f_q.is_none() || r.f_r.is_none()) {
        notes.push(format!(
            "first cooldown lacks frequencies; baseline from cooldown {}",
            base.index
        ));
    }
    let fq0 = first_fq.and_then(|r| r.f_q);
    let fr0 = first_fr.and_then(|r| r.f_r);
    let rn0 = fq0.map(|f| rn_from_fq(f, e_c, delta));
    let rows = records
        .iter()
        .map(|r| {
            let r_n = r.f_q.map(|f| rn_from_fq(f, e_c, delta));
            CooldownRow {
                index: r.index,
                elapsed_days: r.elapsed_days,
                delta_fq: r.f_q.zip(fq0).map(|(a, b)| a - b),
                delta_fr: r.f_r.zip(fr0).map(|(a, b)| a - b),
                r_n,
                delta_rn_rel: r_n.zip(rn0).map(|(a, b)| a / b - 1.0),
                mean_t1: r.mean_t1,
            }
        })
        .collect();
    notes.push("mean T1 varies between cooldowns; listed as observed".into());
    Ok(CooldownReport { baseline_index: base.index, rows, notes })
}
