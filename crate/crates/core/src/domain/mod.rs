//! Shared data model: physical constants, device parameters, experiment
//! records and fit results, plus the file schemas used to exchange them.

pub mod io;
pub mod units;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{
    parse_cooldowns, parse_decay, parse_iq, parse_ramsey, parse_trace, ramsey_sidecar_path,
    read_cooldowns, read_decay, read_iq, read_ramsey, read_trace, validate_dataset,
    write_cooldowns, write_decay, write_iq, write_ramsey, write_trace, Dataset, RamseySidecar,
    SchemaKind,
};

/// CODATA 2018 exact SI constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Planck constant, J·s.
    pub h: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
    /// Elementary charge, C.
    pub e: f64,
    /// Vacuum speed of light, m/s.
    pub c0: f64,
}

pub const CODATA: PhysicalConstants = PhysicalConstants {
    h: 6.626_070_15e-34,
    k_b: 1.380_649e-23,
    e: 1.602_176_634e-19,
    c0: 299_792_458.0,
};

/// Ratio Δ/(k_B·T_c) of weak-coupling BCS theory.
pub const BCS_GAP_RATIO: f64 = 1.764;

/// Superconducting gap Δ (J) from a critical temperature in kelvin.
pub fn bcs_gap(t_c: f64) -> f64 {
    BCS_GAP_RATIO * CODATA.k_b * t_c
}

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema mismatch in field `{field}`: {detail}")]
    Schema { field: String, detail: String },
    #[error("missing unit for field `{0}`")]
    MissingUnit(String),
    #[error("invariant violated: {rule}{}", row.map(|r| format!(" (row {r})")).unwrap_or_default())]
    Invariant { rule: String, row: Option<usize> },
}

impl DomainError {
    pub(crate) fn schema(field: impl Into<String>, detail: impl Into<String>) -> Self {
        DomainError::Schema {
            field: field.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn invariant(rule: impl Into<String>, row: Option<usize>) -> Self {
        DomainError::Invariant {
            rule: rule.into(),
            row,
        }
    }
}

pub type Result<T, E = DomainError> = std::result::Result<T, E>;

/// Static design parameters of one qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitDesign {
    pub chip_id: String,
    pub qubit_id: String,
    /// Readout resonator frequency, Hz.
    pub f_r: f64,
    /// Qubit 0-1 transition frequency, Hz.
    pub f_q: f64,
    /// Magnitude of the anharmonicity, Hz.
    pub anharmonicity: f64,
    /// Superconducting gap Δ, J.
    pub gap_delta: f64,
}

impl QubitDesign {
    pub fn new(
        chip_id: impl Into<String>,
        qubit_id: impl Into<String>,
        f_r: f64,
        f_q: f64,
        anharmonicity: f64,
        gap_delta: f64,
    ) -> Result<Self> {
        if !(f_q > 0.0 && f_r > f_q) {
            return Err(DomainError::invariant("f_r > f_q > 0", None));
        }
        if !(anharmonicity > 0.0) {
            return Err(DomainError::invariant("anharmonicity > 0", None));
        }
        if !(gap_delta > 0.0) {
            return Err(DomainError::invariant("gap_delta > 0", None));
        }
        Ok(QubitDesign {
            chip_id: chip_id.into(),
            qubit_id: qubit_id.into(),
            f_r,
            f_q,
            anharmonicity,
            gap_delta,
        })
    }

    pub fn label(&self) -> String {
        format!("{}.{}", self.chip_id, self.qubit_id)
    }

    /// Charging energy in joules, taking E_C ≈ h·|α| in the transmon limit.
    pub fn charging_energy(&self) -> f64 {
        CODATA.h * self.anharmonicity
    }
}

/// Frequency parameters of the eight measured devices: chip, qubit, f_r (GHz),
/// f_q (GHz), anharmonicity (MHz).
pub const DEVICE_TABLE: [(&str, &str, f64, f64, f64); 8] = [
    ("A", "1", 6.5829, 4.332736, 225.075),
    ("A", "2", 6.7383, 4.320850, 219.487),
    ("A", "3", 6.9860, 4.563595, 228.126),
    ("A", "4", 7.1407, 4.671054, 220.046),
    ("B", "1", 6.5849, 4.441636, 224.806),
    ("B", "2", 6.7367, 4.541780, 223.012),
    ("B", "3", 6.9749, 4.164750, 228.386),
    ("B", "4", 7.1428, 4.621970, 228.406),
];

/// Builds [`QubitDesign`]s for the device table with Δ from a critical temperature.
pub fn reference_devices(t_c: f64) -> Vec<QubitDesign> {
    let gap = bcs_gap(t_c);
    DEVICE_TABLE
        .iter()
        .map(|&(chip, qubit, f_r, f_q, alpha)| {
            QubitDesign::new(chip, qubit, f_r * 1e9, f_q * 1e9, alpha * 1e6, gap)
                .expect("device table satisfies QubitDesign invariants")
        })
        .collect()
}

/// Pure-dephasing time from 1/T2 = 1/(2T1) + 1/T_φ. `None` when the pair is
/// inconsistent with T2 ≤ 2T1.
pub fn pure_dephasing_time(t1: f64, t2: f64) -> Option<f64> {
    let rate = 1.0 / t2 - 1.0 / (2.0 * t1);
    (rate > 0.0).then(|| 1.0 / rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterKind {
    T1,
    #[serde(rename = "t2star")]
    T2Star,
    FRamseyOffset,
    DeltaM,
    Fidelity,
    TEff,
    TMxc,
}

impl ParameterKind {
    pub const ALL: [ParameterKind; 7] = [
        ParameterKind::T1,
        ParameterKind::T2Star,
        ParameterKind::FRamseyOffset,
        ParameterKind::DeltaM,
        ParameterKind::Fidelity,
        ParameterKind::TEff,
        ParameterKind::TMxc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParameterKind::T1 => "t1",
            ParameterKind::T2Star => "t2star",
            ParameterKind::FRamseyOffset => "f_ramsey_offset",
            ParameterKind::DeltaM => "delta_m",
            ParameterKind::Fidelity => "fidelity",
            ParameterKind::TEff => "t_eff",
            ParameterKind::TMxc => "t_mxc",
        }
    }

    pub fn dimension(self) -> units::Dimension {
        use units::Dimension;
        match self {
            ParameterKind::T1 | ParameterKind::T2Star => Dimension::Time,
            ParameterKind::FRamseyOffset => Dimension::Frequency,
            ParameterKind::TEff | ParameterKind::TMxc => Dimension::Temperature,
            ParameterKind::DeltaM | ParameterKind::Fidelity => Dimension::None,
        }
    }

    /// Unit tag used in canonical trace files.
    pub fn canonical_unit(self) -> units::Unit {
        match self {
            ParameterKind::DeltaM => units::Unit::Arbitrary,
            other => units::Unit::si(other.dimension()),
        }
    }

    pub fn is_coherence(self) -> bool {
        matches!(self, ParameterKind::T1 | ParameterKind::T2Star)
    }
}

impl fmt::Display for ParameterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParameterKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ParameterKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| {
                format!(
                    "unknown parameter kind `{s}`, expected one of {}",
                    ParameterKind::ALL.map(|k| k.name()).join(", ")
                )
            })
    }
}

/// A time series of one monitored parameter. Values are stored in SI units
/// (arbitrary units for Δ_m).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeTrace {
    pub kind: ParameterKind,
    timestamps: Vec<f64>,
    values: Vec<f64>,
}

impl TimeTrace {
    pub fn new(kind: ParameterKind, timestamps: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(DomainError::invariant(
                "timestamps and values have equal length",
                None,
            ));
        }
        if timestamps.is_empty() {
            return Err(DomainError::invariant("trace length >= 1", None));
        }
        for (row, (t, v)) in timestamps.iter().zip(&values).enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return Err(DomainError::invariant("values finite", Some(row)));
            }
            if row > 0 && *t <= timestamps[row - 1] {
                return Err(DomainError::invariant(
                    "timestamps strictly increasing",
                    Some(row),
                ));
            }
        }
        Ok(TimeTrace {
            kind,
            timestamps,
            values,
        })
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn span(&self) -> f64 {
        self.timestamps[self.timestamps.len() - 1] - self.timestamps[0]
    }
}

fn check_populations(p1: &[f64]) -> Result<()> {
    for (row, p) in p1.iter().enumerate() {
        if !(0.0..=1.0).contains(p) {
            return Err(DomainError::invariant(
                format!("p1 in [0, 1], got {p}"),
                Some(row),
            ));
        }
    }
    Ok(())
}

fn check_delays(delays: &[f64]) -> Result<()> {
    for (row, tau) in delays.iter().enumerate() {
        if !tau.is_finite() || *tau < 0.0 {
            return Err(DomainError::invariant("delays nonnegative", Some(row)));
        }
        if row > 0 && *tau <= delays[row - 1] {
            return Err(DomainError::invariant(
                "delays strictly increasing",
                Some(row),
            ));
        }
    }
    Ok(())
}

/// Excited-state population after a variable delay following a π pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    delays: Vec<f64>,
    p1: Vec<f64>,
    /// `None` for noiseless (infinite-shot) curves.
    pub shots_per_point: Option<u32>,
}

impl DecayCurve {
    pub fn new(delays: Vec<f64>, p1: Vec<f64>, shots_per_point: Option<u32>) -> Result<Self> {
        if delays.len() != p1.len() {
            return Err(DomainError::invariant("delays and p1 have equal length", None));
        }
        check_delays(&delays)?;
        check_populations(&p1)?;
        if shots_per_point == Some(0) {
            return Err(DomainError::invariant("shots_per_point >= 1", None));
        }
        Ok(DecayCurve {
            delays,
            p1,
            shots_per_point,
        })
    }

    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    pub fn p1(&self) -> &[f64] {
        &self.p1
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }
}

/// Ramsey fringe recorded with a virtual-Z detuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RamseyCurve {
    delays: Vec<f64>,
    p1: Vec<f64>,
    /// Set detuning Δ_f, Hz.
    pub set_detuning: f64,
    /// Time span t_max, s.
    pub t_max: f64,
    pub shots_per_point: Option<u32>,
}

impl RamseyCurve {
    pub fn new(
        delays: Vec<f64>,
        p1: Vec<f64>,
        set_detuning: f64,
        t_max: f64,
        shots_per_point: Option<u32>,
    ) -> Result<Self> {
        if delays.len() != p1.len() {
            return Err(DomainError::invariant("delays and p1 have equal length", None));
        }
        check_delays(&delays)?;
        check_populations(&p1)?;
        if !(set_detuning >= 0.0) {
            return Err(DomainError::invariant("set detuning >= 0", None));
        }
        if !(t_max > 0.0) {
            return Err(DomainError::invariant("t_max > 0", None));
        }
        let slack = t_max * 1e-9;
        if let Some(row) = delays.iter().position(|&tau| tau > t_max + slack) {
            return Err(DomainError::invariant("delays within [0, t_max]", Some(row)));
        }
        if shots_per_point == Some(0) {
            return Err(DomainError::invariant("shots_per_point >= 1", None));
        }
        Ok(RamseyCurve {
            delays,
            p1,
            set_detuning,
            t_max,
            shots_per_point,
        })
    }

    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    pub fn p1(&self) -> &[f64] {
        &self.p1
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    /// Sampling rate inferred from the median delay step, Hz.
    pub fn sampling_rate(&self) -> f64 {
        let mut steps: Vec<f64> = self.delays.windows(2).map(|w| w[1] - w[0]).collect();
        steps.sort_by(f64::total_cmp);
        1.0 / steps[steps.len() / 2]
    }

    pub fn nyquist(&self) -> f64 {
        0.5 * self.sampling_rate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IqShot {
    pub i: f64,
    pub q: f64,
    pub prepared_state: u8,
}

/// Single-shot readout results for both prepared basis states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqShotSet {
    shots: Vec<IqShot>,
}

impl IqShotSet {
    pub fn new(shots: Vec<IqShot>) -> Result<Self> {
        for (row, s) in shots.iter().enumerate() {
            if !s.i.is_finite() || !s.q.is_finite() {
                return Err(DomainError::invariant("finite coordinates", Some(row)));
            }
            if s.prepared_state > 1 {
                return Err(DomainError::invariant(
                    "prepared_state is 0 or 1",
                    Some(row),
                ));
            }
        }
        let ones = shots.iter().filter(|s| s.prepared_state == 1).count();
        if ones == 0 || ones == shots.len() {
            return Err(DomainError::invariant("both prepared states present", None));
        }
        Ok(IqShotSet { shots })
    }

    pub fn shots(&self) -> &[IqShot] {
        &self.shots
    }

    pub fn len(&self) -> usize {
        self.shots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shots.is_empty()
    }

    pub fn count(&self, state: u8) -> usize {
        self.shots.iter().filter(|s| s.prepared_state == state).count()
    }

    /// Shots per prepared state when the set is balanced.
    pub fn n_per_state(&self) -> Option<usize> {
        let n0 = self.count(0);
        (n0 == self.count(1)).then_some(n0)
    }

    pub fn class(&self, state: u8) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.shots
            .iter()
            .filter(move |s| s.prepared_state == state)
            .map(|s| (s.i, s.q))
    }
}

/// Per-cooldown summary feeding the aging analysis. Missing measurements
/// are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CooldownRecord {
    pub index: u32,
    pub elapsed_days: f64,
    pub f_q: Option<f64>,
    pub f_r: Option<f64>,
    pub mean_t1: Option<f64>,
}

/// Checks ordering invariants of a cooldown series.
pub fn check_cooldown_series(records: &[CooldownRecord]) -> Result<()> {
    for (row, pair) in records.windows(2).enumerate() {
        if pair[1].index <= pair[0].index {
            return Err(DomainError::invariant(
                "cooldown index strictly increasing",
                Some(row + 1),
            ));
        }
        if pair[1].elapsed_days < pair[0].elapsed_days {
            return Err(DomainError::invariant(
                "elapsed_days nondecreasing with index",
                Some(row + 1),
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitFlag {
    NotConverged,
    /// Fitted frequency is inconsistent with the set detuning and may be a
    /// folded alias.
    Aliased,
    /// Frequency below 1/t_max cannot be resolved.
    Unresolvable,
    PoorGoodnessOfFit,
    FewSamples,
    SingularCovariance,
}

/// Outcome of one model fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: String,
    pub params: BTreeMap<String, f64>,
    pub stderr: BTreeMap<String, f64>,
    /// Euclidean norm of the residual vector (or the minimised objective for
    /// likelihood fits).
    pub residual_norm: f64,
    pub converged: bool,
    pub flags: Vec<FitFlag>,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    pub fn has_flag(&self, flag: FitFlag) -> bool {
        self.flags.contains(&flag)
    }

    /// Unconverged fits are never treated as reliable.
    pub fn reliable(&self) -> bool {
        self.converged && !self.has_flag(FitFlag::NotConverged)
    }

    pub(crate) fn push_flag(&mut self, flag: FitFlag) {
        if !self.flags.contains(&flag) {
            self.flags.push(flag);
            self.flags.sort();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn device_table_builds() {
        let devices = reference_devices(1.2);
        assert_eq!(devices.len(), 8);
        assert_eq!(devices[0].label(), "A.1");
        assert!((devices[0].charging_energy() / CODATA.h - 225.075e6).abs() < 1e-3);
    }

    #[test]
    fn qubit_design_rejects_inverted_frequencies() {
        assert!(QubitDesign::new("A", "1", 4e9, 5e9, 2e8, 1e-23).is_err());
    }

    #[test]
    fn trace_requires_increasing_time() {
        let err = TimeTrace::new(ParameterKind::T1, vec![0.0, 1.0, 1.0], vec![1.0; 3]).unwrap_err();
        assert!(err.to_string().contains("strictly increasing"));
    }

    #[test]
    fn dephasing_time_from_t1_t2() {
        // T2 = 2T1 leaves no room for pure dephasing.
        assert_eq!(pure_dephasing_time(50e-6, 100e-6), None);
        let tphi = pure_dephasing_time(50e-6, 50e-6).unwrap();
        assert!((tphi - 100e-6).abs() < 1e-15);
    }

    #[test]
    fn iq_set_needs_both_states() {
        let shots = vec![
            IqShot { i: 0.0, q: 0.0, prepared_state: 0 },
            IqShot { i: 1.0, q: 0.0, prepared_state: 0 },
        ];
        assert!(IqShotSet::new(shots).is_err());
    }
}
