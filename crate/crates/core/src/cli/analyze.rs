use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::{RunContext, RunManifest};
use super::simulate::device;
use super::{load_config, AnalyzeCmd, CliError, Units};
use crate::aging::{self, CooldownReport, ResonatorModel, ShiftDecomposition};
use crate::domain::{bcs_gap, io, FitResult, IqShotSet, ParameterKind, TimeTrace, CODATA};
use crate::fitters::{self, mirrored_rician_pdf, RicianParams};
use crate::plot::{HLine, PlotData, Series};
use crate::readout::{self, DiscriminationModel, TeffStatus};
use crate::stability::{self, DropoutReport, PairOverlap, ScalingPoint};

pub(super) fn run(cmd: AnalyzeCmd, argv: Vec<String>) -> Result<RunManifest, CliError> {
    match cmd {
        AnalyzeCmd::FitDecay { input, common } => {
            let mut ctx = context("analyze fit-decay", argv, &common.out, common.units)?;
            fit_decay(&mut ctx, &input, common.units)?;
            finish_fit(ctx)
        }
        AnalyzeCmd::FitRamsey { input, drive_frequency_hz, common } => {
            let mut ctx = context("analyze fit-ramsey", argv, &common.out, common.units)?;
            if let Some(f) = drive_frequency_hz {
                ctx.option("drive_frequency_hz", f);
            }
            fit_ramsey(&mut ctx, &input, drive_frequency_hz, common.units)?;
            finish_fit(ctx)
        }
        AnalyzeCmd::Readout { input, f_q_hz, device, common } => {
            let mut ctx = context("analyze readout", argv, &common.out, common.units)?;
            let f_q = match (f_q_hz, device) {
                (Some(f), _) => f,
                (None, Some(label)) => self::device(&label, 1.2)?.f_q,
                (None, None) => return Err(CliError::validation("readout", "need --f-q-hz or --device for T_eff")),
            };
            if !(f_q > 0.0) {
                return Err(CliError::validation("readout", "qubit frequency must be > 0"));
            }
            ctx.option("f_q_hz", f_q);
            readout_report(&mut ctx, &input, f_q, common.units)?;
            ctx.finish()
        }
        AnalyzeCmd::Stability { traces, dropout_k, coincidence_threshold, common } => {
            let mut ctx = context("analyze stability", argv, &common.out, common.units)?;
            ctx.option("dropout_k", dropout_k);
            ctx.option("coincidence_threshold", coincidence_threshold);
            stability_report(&mut ctx, &traces, dropout_k, coincidence_threshold, common.units)?;
            ctx.finish()
        }
        AnalyzeCmd::Aging { input, config, common } => {
            let mut ctx = context("analyze aging", argv, &common.out, common.units)?;
            aging_report(&mut ctx, &input, config.as_deref(), common.units)?;
            ctx.finish()
        }
        AnalyzeCmd::Benchmark { points, override_admission, common } => {
            let mut ctx = context("analyze benchmark", argv, &common.out, common.units)?;
            ctx.option("override_admission", override_admission);
            benchmark(&mut ctx, &points, override_admission, common.units)?;
            ctx.finish()
        }
    }
}

fn context(command: &str, argv: Vec<String>, out: &Path, units: Units) -> Result<RunContext, CliError> {
    let mut ctx = RunContext::new(command, argv, out)?;
    ctx.option("units", units.name());
    Ok(ctx)
}

/// Writes the manifest, then turns an unconverged fit into exit code 3.
fn finish_fit(ctx: RunContext) -> Result<RunManifest, CliError> {
    let converged = ctx.fit_converged;
    let manifest = ctx.finish()?;
    if converged == Some(false) {
        return Err(CliError::fit("fitters", "fit did not converge; report written with converged = false"));
    }
    Ok(manifest)
}

#[derive(Debug, Serialize)]
struct Quantity {
    value: f64,
    stderr: Option<f64>,
    unit: &'static str,
}

fn convert_params(fit: &FitResult, units: Units) -> BTreeMap<String, Quantity> {
    fit.params
        .iter()
        .map(|(name, &v)| {
            let se = fit.stderr.get(name).copied();
            let (f, unit): (fn(Units, f64) -> f64, &'static str) = match name.as_str() {
                "t1" | "t2star" => (Units::time, units.time_unit()),
                "f_ramsey" => (Units::freq, units.freq_unit()),
                "phi0" => (|_, v| v, "rad"),
                _ => (|_, v| v, "1"),
            };
            (name.clone(), Quantity { value: f(units, v), stderr: se.map(|s| f(units, s)), unit })
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct FitReport {
    units: &'static str,
    fit: FitResult,
    params: BTreeMap<String, Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    set_detuning: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    offset: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    calibrated_f_q: Option<Quantity>,
}

fn fit_curve_plot(title: &str, x: &[f64], y: &[f64], model: impl Fn(f64) -> f64) -> PlotData {
    let mut plot = PlotData::new(title, "delay (s)", "P1");
    plot.series.push(Series::points("data", x.to_vec(), y.to_vec()));
    let t_end = x.last().copied().unwrap_or(1.0);
    let fine: Vec<f64> = (0..=400).map(|k| t_end * k as f64 / 400.0).collect();
    let fy = fine.iter().map(|&t| model(t)).collect();
    plot.series.push(Series::line("fit", fine, fy));
    plot
}

fn fit_decay(ctx: &mut RunContext, input: &Path, units: Units) -> Result<(), CliError> {
    ctx.input(input)?;
    let curve = io::read_decay(input)?;
    let fit = fitters::fit_exponential(&curve)?;
    ctx.fit_converged = Some(fit.converged);
    let p = [fit.params["A"], fit.params["B"], fit.params["t1"]];
    let plot = fit_curve_plot("Energy relaxation", curve.delays(), curve.p1(), |t| {
        fitters::CurveModel::value(&fitters::Exponential, t, &p)
    });
    let report = FitReport {
        units: units.name(),
        params: convert_params(&fit, units),
        fit,
        set_detuning: None,
        offset: None,
        calibrated_f_q: None,
    };
    ctx.write_json("fit_decay.json", &report)?;
    ctx.write_plot("fit_decay", &plot)
}

fn fit_ramsey(ctx: &mut RunContext, input: &Path, drive: Option<f64>, units: Units) -> Result<(), CliError> {
    ctx.input(input)?;
    ctx.input(&io::ramsey_sidecar_path(input))?;
    let curve = io::read_ramsey(input)?;
    let fit = fitters::fit_damped_cosine(&curve)?;
    ctx.fit_converged = Some(fit.converged);
    let names = ["A", "B", "phi0", "f_ramsey", "t2star"];
    let p: Vec<f64> = names.iter().map(|n| fit.params[*n]).collect();
    let plot = fit_curve_plot("Ramsey fringe", curve.delays(), curve.p1(), |t| {
        fitters::CurveModel::value(&fitters::DampedCosine, t, &p)
    });
    let f_r = fit.params["f_ramsey"];
    let f_se = fit.stderr.get("f_ramsey").copied();
    let freq = |v: f64, se: Option<f64>| Quantity { value: units.freq(v), stderr: se.map(|s| units.freq(s)), unit: units.freq_unit() };
    let report = FitReport {
        units: units.name(),
        params: convert_params(&fit, units),
        set_detuning: Some(freq(curve.set_detuning, None)),
        offset: Some(freq(f_r.abs() - curve.set_detuning, f_se)),
        calibrated_f_q: drive.map(|f| freq(fitters::resolve_drive_calibration(f, f_r, curve.set_detuning), f_se)),
        fit,
    };
    ctx.write_json("fit_ramsey.json", &report)?;
    ctx.write_plot("fit_ramsey", &plot)
}

/// Up to 500 shots per prepared state, plus the decision boundary when a
/// model is given.
pub(super) fn iq_scatter(shots: &IqShotSet, model: Option<&DiscriminationModel>) -> PlotData {
    let mut plot = PlotData::new("Single-shot readout", "I", "Q");
    for state in 0..2u8 {
        let (i, q): (Vec<f64>, Vec<f64>) = shots.class(state).take(500).unzip();
        plot.series.push(Series::points(format!("prepared |{state}>"), i, q));
    }
    if let Some(m) = model {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for s in shots.shots() {
            lo = [lo[0].min(s.i), lo[1].min(s.q)];
            hi = [hi[0].max(s.i), hi[1].max(s.q)];
        }
        let n = 120;
        let at = |a: usize, b: usize| {
            (lo[0] + (hi[0] - lo[0]) * a as f64 / n as f64, lo[1] + (hi[1] - lo[1]) * b as f64 / n as f64)
        };
        let (mut bx, mut by) = (Vec::new(), Vec::new());
        for a in 0..n {
            for b in 0..n {
                let (x, y) = at(a, b);
                let c = m.classify(x, y);
                let (xr, _) = at(a + 1, b);
                let (_, yu) = at(a, b + 1);
                if m.classify(xr, y) != c || m.classify(x, yu) != c {
                    bx.push(x);
                    by.push(y);
                }
            }
        }
        plot.series.push(Series::points("decision boundary", bx, by));
    }
    plot
}

#[derive(Debug, Serialize)]
struct ReadoutReport {
    units: &'static str,
    f_q: Quantity,
    n_per_state: [usize; 2],
    delta_m: f64,
    fidelity: f64,
    confusion: [[f64; 2]; 2],
    t_eff_mk: Option<f64>,
    t_eff_status: TeffStatus,
    accuracy: f64,
    /// Jarque–Bera p-values of the I quadrature per prepared state.
    normality_p: [f64; 2],
    model: DiscriminationModel,
}

fn readout_report(ctx: &mut RunContext, input: &Path, f_q: f64, units: Units) -> Result<(), CliError> {
    ctx.input(input)?;
    let shots = io::read_iq(input)?;
    let model = readout::fit_discriminator(&shots)?;
    let m = readout::compute_metrics(&shots, &model, f_q);
    let normality_p = [0u8, 1].map(|s| {
        let i: Vec<f64> = shots.class(s).map(|p| p.0).collect();
        readout::jarque_bera(&i).1
    });
    let report = ReadoutReport {
        units: units.name(),
        f_q: Quantity { value: units.freq(f_q), stderr: None, unit: units.freq_unit() },
        n_per_state: [shots.count(0), shots.count(1)],
        delta_m: m.delta_m,
        fidelity: m.fidelity,
        confusion: m.confusion,
        t_eff_mk: m.t_eff.is_finite().then(|| m.t_eff_mk()),
        t_eff_status: m.t_eff_status,
        accuracy: m.accuracy,
        normality_p,
        model: model.clone(),
    };
    ctx.write_json("readout.json", &report)?;
    ctx.write_plot("iq", &iq_scatter(&shots, Some(&model)))
}

#[derive(Debug, Serialize)]
struct TraceSummary {
    label: String,
    parameter: ParameterKind,
    n: usize,
    span_hours: f64,
    admitted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value_unit: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    skewness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rician: Option<RicianParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<FitResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dropouts: Option<DropoutReport>,
}

#[derive(Debug, Serialize)]
struct StabilityReport {
    units: &'static str,
    dropout_k: f64,
    coincidence_threshold: f64,
    traces: Vec<TraceSummary>,
    coincidence: Vec<PairOverlap>,
    scaling_points: Vec<ScalingPoint>,
}

struct Analysed {
    summary: TraceSummary,
    trace: Option<TimeTrace>,
    dist: Option<stability::DistributionSummary>,
}

fn analyse_trace(label: String, path: &Path, k: f64, units: Units) -> Analysed {
    let trace = match io::read_trace(path) {
        Ok(t) => t,
        Err(e) => {
            return Analysed {
                summary: TraceSummary {
                    label,
                    parameter: ParameterKind::T1,
                    n: 0,
                    span_hours: 0.0,
                    admitted: false,
                    reason: Some(format!("domain: {e}")),
                    value_unit: None,
                    mean: None,
                    std: None,
                    skewness: None,
                    rician: None,
                    fit: None,
                    dropouts: None,
                },
                trace: None,
                dist: None,
            }
        }
    };
    let coherence = trace.kind.is_coherence();
    let scale = |v: f64| if coherence { units.time(v) } else { v };
    let mut summary = TraceSummary {
        label,
        parameter: trace.kind,
        n: trace.len(),
        span_hours: trace.span() / 3600.0,
        admitted: true,
        reason: None,
        value_unit: Some(if coherence { units.time_unit() } else { "canonical" }),
        mean: None,
        std: None,
        skewness: Some(crate::tlssim::skewness(trace.values())),
        rician: None,
        fit: None,
        dropouts: None,
    };
    let mut dist = None;
    let moments = if coherence {
        match stability::distribution_summary(trace.values()) {
            Ok(d) => {
                let m = (d.mean, d.std);
                summary.rician = Some(d.params);
                summary.fit = Some(d.fit.clone());
                dist = Some(d);
                m
            }
            Err(e) => {
                summary.admitted = false;
                summary.reason = Some(format!("stability: {e}"));
                return Analysed { summary, trace: Some(trace), dist: None };
            }
        }
    } else {
        let v = trace.values();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (mean, var.sqrt())
    };
    summary.mean = Some(scale(moments.0));
    summary.std = Some(scale(moments.1));
    let mut rep = stability::detect_dropouts_with(&trace, moments, k);
    rep.threshold = scale(rep.threshold);
    summary.dropouts = Some(rep);
    Analysed { summary, trace: Some(trace), dist }
}

fn trace_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.extension().is_some_and(|x| x == "csv") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn stability_report(ctx: &mut RunContext, dir: &Path, k: f64, threshold: f64, units: Units) -> Result<(), CliError> {
    if !(k > 0.0) || !(0.0..=1.0).contains(&threshold) {
        return Err(CliError::validation("stability", "need dropout_k > 0 and coincidence_threshold in [0, 1]"));
    }
    let files = trace_files(dir)?;
    for f in &files {
        ctx.input(f)?;
    }
    let analysed: Vec<Analysed> = files
        .par_iter()
        .map(|f| {
            let label = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            analyse_trace(label, f, k, units)
        })
        .collect();
    if !analysed.iter().any(|a| a.summary.admitted) {
        return Err(stability::StabilityError::NoDatasets.into());
    }

    let mut traces = BTreeMap::new();
    let mut reports = BTreeMap::new();
    let mut scaling_points = Vec::new();
    for a in analysed.iter().filter(|a| a.summary.admitted) {
        let (Some(trace), Some(rep)) = (&a.trace, &a.summary.dropouts) else { continue };
        traces.insert(a.summary.label.clone(), trace.clone());
        reports.insert(a.summary.label.clone(), rep.clone());
        if let (ParameterKind::T1, Some(d)) = (trace.kind, &a.dist) {
            scaling_points.push(ScalingPoint::from_summary(a.summary.label.clone(), d, trace.len(), trace.span() / 3600.0));
        }
    }
    let coincidence = stability::coincidence_report(&traces, &reports, threshold);

    for a in analysed.iter().filter(|a| a.summary.admitted) {
        let (Some(trace), Some(rep)) = (&a.trace, &a.summary.dropouts) else { continue };
        let coherence = trace.kind.is_coherence();
        let scale = |v: f64| if coherence { units.time(v) } else { v };
        let mut plot = PlotData::new(
            format!("{} ({})", a.summary.label, trace.kind),
            "time (h)",
            format!("{} ({})", trace.kind, a.summary.value_unit.unwrap_or("")),
        );
        plot.series.push(Series::line(
            trace.kind.to_string(),
            trace.timestamps().iter().map(|t| t / 3600.0).collect(),
            trace.values().iter().map(|&v| scale(v)).collect(),
        ));
        plot.shaded = rep.intervals.iter().map(|&(s, e)| (s / 3600.0, e / 3600.0)).collect();
        plot.hlines.push(HLine { y: rep.threshold, label: "mean - k std".into() });
        if let Some(m) = a.summary.mean {
            plot.hlines.push(HLine { y: m, label: "mean".into() });
        }
        ctx.write_plot(&format!("trace_{}", a.summary.label), &plot)?;
        if let Some(d) = &a.dist {
            ctx.write_plot(&format!("hist_{}", a.summary.label), &histogram_plot(trace, &d.params, units))?;
        }
    }

    let report = StabilityReport {
        units: units.name(),
        dropout_k: k,
        coincidence_threshold: threshold,
        traces: analysed.into_iter().map(|a| a.summary).collect(),
        coincidence,
        scaling_points: scaling_points.clone(),
    };
    ctx.write_json("stability.json", &report)?;
    let text = serde_json::to_string_pretty(&scaling_points).map_err(|e| CliError::internal(e.to_string()))? + "\n";
    ctx.write("scaling_points.json", text.as_bytes(), super::ArtifactRole::Data)?;
    Ok(())
}

fn histogram_plot(trace: &TimeTrace, params: &RicianParams, units: Units) -> PlotData {
    let v = trace.values();
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bins = ((v.len() as f64).sqrt().round() as usize).clamp(10, 80);
    let width = ((hi - lo) / bins as f64).max(f64::MIN_POSITIVE);
    let mut counts = vec![0usize; bins];
    for &x in v {
        counts[(((x - lo) / width) as usize).min(bins - 1)] += 1;
    }
    let centres: Vec<f64> = (0..bins).map(|b| lo + (b as f64 + 0.5) * width).collect();
    let density: Vec<f64> = counts.iter().map(|&c| c as f64 / (v.len() as f64 * width)).collect();
    let fine: Vec<f64> = (0..=200).map(|k| lo + (hi - lo) * k as f64 / 200.0).collect();
    let pdf: Vec<f64> = fine.iter().map(|&t| mirrored_rician_pdf(t, params)).collect();
    let tf = units.time(1.0);
    let mut plot = PlotData::new(format!("{} histogram", trace.kind), format!("{} ({})", trace.kind, units.time_unit()), "density (1/s)");
    plot.series.push(Series::points("samples", centres.iter().map(|c| c * tf).collect(), density));
    plot.series.push(Series::line("mirrored Rician", fine.iter().map(|c| c * tf).collect(), pdf));
    plot
}

fn default_tc() -> f64 {
    1.2
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgingConfig {
    /// Reference device label supplying the anharmonicity.
    #[serde(default)]
    device: Option<String>,
    #[serde(default)]
    anharmonicity_hz: Option<f64>,
    #[serde(default = "default_tc")]
    t_c_k: f64,
    #[serde(default)]
    f_r_bare_hz: Option<f64>,
    #[serde(default)]
    l_tot_m: Option<f64>,
    #[serde(default)]
    eps_eff: Option<f64>,
}

#[derive(Debug, Serialize)]
struct AgingRow {
    index: u32,
    elapsed_days: f64,
    delta_fq: Option<f64>,
    delta_fr: Option<f64>,
    r_n_ohm: Option<f64>,
    delta_rn_rel: Option<f64>,
    mean_t1: Option<f64>,
}

#[derive(Debug, Serialize)]
struct AgingReport {
    units: &'static str,
    freq_unit: &'static str,
    time_unit: &'static str,
    e_c_over_h_hz: f64,
    delta_j: f64,
    baseline_index: u32,
    rows: Vec<AgingRow>,
    decomposition: Option<ShiftDecomposition>,
    decomposition_method: &'static str,
    notes: Vec<String>,
}

fn aging_report(ctx: &mut RunContext, input: &Path, config: Option<&Path>, units: Units) -> Result<(), CliError> {
    let Some(cfg_path) = config else {
        return Err(CliError::validation("aging", "--config with `device` or `anharmonicity_hz` is required"));
    };
    let (cfg, hash): (AgingConfig, String) = load_config("aging", cfg_path)?;
    ctx.set_config_hash(hash);
    ctx.input(cfg_path)?;
    ctx.input(input)?;
    let records = io::read_cooldowns(input)?;
    let anharmonicity = match (cfg.anharmonicity_hz, &cfg.device) {
        (Some(a), _) => a,
        (None, Some(label)) => device(label, cfg.t_c_k)?.anharmonicity,
        (None, None) => return Err(CliError::validation("aging", "config field `anharmonicity_hz`: required without `device`")),
    };
    if !(anharmonicity > 0.0 && cfg.t_c_k > 0.0) {
        return Err(CliError::validation("aging", "anharmonicity_hz and t_c_k must be > 0"));
    }
    let e_c = CODATA.h * anharmonicity;
    let delta = bcs_gap(cfg.t_c_k);
    let report: CooldownReport = aging::cooldown_report(&records, e_c, delta)?;
    let mut notes = report.notes.clone();

    let resonator = match (cfg.f_r_bare_hz, cfg.l_tot_m, cfg.eps_eff) {
        (Some(f), _, _) => Some(ResonatorModel { f_r_bare: f, g: 0.0, l_tot: cfg.l_tot_m, eps_eff: cfg.eps_eff }),
        (None, Some(l), Some(e)) => Some(ResonatorModel::from_geometry(l, e, 0.0)?),
        _ => None,
    };
    let decomposition = match resonator {
        Some(m) => Some(aging::decompose_fr_shift(&records, &m, e_c, delta)?),
        None => {
            notes.push("no bare resonator frequency configured; shift decomposition skipped".into());
            None
        }
    };

    let rows: Vec<AgingRow> = report
        .rows
        .iter()
        .map(|r| AgingRow {
            index: r.index,
            elapsed_days: r.elapsed_days,
            delta_fq: r.delta_fq.map(|v| units.freq(v)),
            delta_fr: r.delta_fr.map(|v| units.freq(v)),
            r_n_ohm: r.r_n,
            delta_rn_rel: r.delta_rn_rel,
            mean_t1: r.mean_t1.map(|v| units.time(v)),
        })
        .collect();

    let series = |f: &dyn Fn(&AgingRow) -> Option<f64>| -> (Vec<f64>, Vec<f64>) {
        rows.iter().filter_map(|r| Some((r.elapsed_days, f(r)?))).unzip()
    };
    let mut freq_plot = PlotData::new("Frequency change since first cooldown", "elapsed (days)", format!("shift ({})", units.freq_unit()));
    let (x, y) = series(&|r| r.delta_fq);
    freq_plot.series.push(Series::points("f_q", x, y));
    let (x, y) = series(&|r| r.delta_fr);
    freq_plot.series.push(Series::points("f_r", x, y));
    let mut rn_plot = PlotData::new("Junction resistance change", "elapsed (days)", "dR_N/R_N");
    let (x, y) = series(&|r| r.delta_rn_rel);
    rn_plot.series.push(Series::points("R_N", x, y));
    let mut t1_plot = PlotData::new("Mean T1 per cooldown", "elapsed (days)", format!("T1 ({})", units.time_unit()));
    let (x, y) = series(&|r| r.mean_t1);
    t1_plot.series.push(Series::points("mean T1", x, y));

    let out = AgingReport {
        units: units.name(),
        freq_unit: units.freq_unit(),
        time_unit: units.time_unit(),
        e_c_over_h_hz: anharmonicity,
        delta_j: delta,
        baseline_index: report.baseline_index,
        rows,
        decomposition,
        decomposition_method: "pulling share from the dispersive formula with the bare frequency held, g scaled as R_N^-1/4 from the reference cooldown; remainder attributed to the bare resonator",
        notes,
    };
    ctx.write_json("aging.json", &out)?;
    ctx.write_plot("aging_frequency", &freq_plot)?;
    ctx.write_plot("aging_resistance", &rn_plot)?;
    ctx.write_plot("aging_t1", &t1_plot)
}

#[derive(Debug, Serialize)]
struct BenchmarkReport {
    units: &'static str,
    a: f64,
    a_stderr: f64,
    a_unit: &'static str,
    exponent: f64,
    exponent_stderr: f64,
    weighted: bool,
    n_points: usize,
    excluded: Vec<String>,
    override_admission: bool,
}

fn benchmark(ctx: &mut RunContext, path: &Path, override_admission: bool, units: Units) -> Result<(), CliError> {
    ctx.input(path)?;
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let points: Vec<ScalingPoint> = serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::validation("stability", format!("points field `{}`: {}", e.path(), e.inner())))?;
    let fit = stability::fit_scaling_law(&points, override_admission)?;
    let (a, a_se) = fit.a_in(units.system());
    let tf = units.time(1.0);
    let used: Vec<&ScalingPoint> = points.iter().filter(|p| !fit.excluded.contains(&p.label)).collect();
    let mut plot = PlotData::new("sigma_T1 versus mean T1", format!("<T1> ({})", units.time_unit()), format!("sigma_T1 ({})", units.time_unit()));
    plot.log_x = true;
    plot.log_y = true;
    plot.series.push(Series::points(
        "admitted",
        used.iter().map(|p| p.mean_t1 * tf).collect(),
        used.iter().map(|p| p.std_t1 * tf).collect(),
    ));
    let lo = used.iter().map(|p| p.mean_t1).fold(f64::INFINITY, f64::min);
    let hi = used.iter().map(|p| p.mean_t1).fold(f64::NEG_INFINITY, f64::max);
    let line_x: Vec<f64> = (0..=50).map(|k| lo * (hi / lo).powf(k as f64 / 50.0)).collect();
    plot.series.push(Series::line(
        "a <T1>^1.5",
        line_x.iter().map(|t| t * tf).collect(),
        line_x.iter().map(|t| fit.a * t.powf(1.5) * tf).collect(),
    ));
    let report = BenchmarkReport {
        units: units.name(),
        a,
        a_stderr: a_se,
        a_unit: units.system().a_unit(),
        exponent: fit.exponent,
        exponent_stderr: fit.exponent_stderr,
        weighted: fit.weighted,
        n_points: fit.n_points,
        excluded: fit.excluded.clone(),
        override_admission,
    };
    ctx.write_json("benchmark.json", &report)?;
    ctx.write_plot("benchmark", &plot)
}
