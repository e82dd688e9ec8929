use serde::Deserialize;
use serde_json::Value;

use super::manifest::{ArtifactRole, RunContext, RunManifest};
use super::{load_config, parse_config_value, CliError, SimArgs, SimulateCmd};
use crate::domain::{io, reference_devices, TimeTrace};
use crate::expsim::{self, ExperimentNoiseConfig};
use crate::plot::{PlotData, Series};
use crate::tlssim::{self, EnsembleConfig, ScalingConfig};

fn default_duration() -> f64 {
    24.0 * 3600.0
}

fn default_cadence() -> f64 {
    60.0
}

fn default_a() -> f64 {
    1.22e-2
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct TlsRunConfig {
    ensemble: EnsembleConfig,
    #[serde(default = "default_duration")]
    duration_s: f64,
    #[serde(default = "default_cadence")]
    cadence_s: f64,
    /// Emits a coupled T2* trace when set.
    #[serde(default)]
    t_phi_s: Option<f64>,
    #[serde(default)]
    scaling: Option<ScalingRun>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScalingRun {
    n_qubits: usize,
    t1_range_s: [f64; 2],
    /// Target prefactor in µs^-1/2.
    #[serde(default = "default_a")]
    a_per_sqrt_us: f64,
    #[serde(default)]
    samples_per_qubit: Option<usize>,
    #[serde(default)]
    cadence_s: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecayRunConfig {
    t1_s: f64,
    #[serde(default)]
    delays_s: Option<Vec<f64>>,
    #[serde(default)]
    noise: ExperimentNoiseConfig,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RamseyRunConfig {
    /// Label of a built-in sampling protocol, e.g. `A.2`.
    #[serde(default)]
    protocol: Option<String>,
    #[serde(default)]
    t2star_s: Option<f64>,
    /// `f_drive − f_q`.
    #[serde(default)]
    drive_offset_hz: f64,
    #[serde(default)]
    set_detuning_hz: Option<f64>,
    #[serde(default)]
    t_max_s: Option<f64>,
    #[serde(default)]
    nyquist_hz: Option<f64>,
    #[serde(default)]
    noise: ExperimentNoiseConfig,
    #[serde(default)]
    seed: Option<u64>,
}

fn default_device() -> String {
    "A.1".into()
}

fn default_tc() -> f64 {
    1.2
}

fn default_separation() -> f64 {
    4.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SingleShotRunConfig {
    #[serde(default = "default_device")]
    device: String,
    #[serde(default = "default_tc")]
    t_c_k: f64,
    #[serde(default = "default_separation")]
    separation: f64,
    #[serde(default)]
    noise: ExperimentNoiseConfig,
    #[serde(default)]
    seed: Option<u64>,
}

fn read_config(module: &str, args: &SimArgs, ctx: &mut RunContext) -> Result<Option<Value>, CliError> {
    let Some(path) = &args.config else { return Ok(None) };
    let (value, hash): (Value, String) = load_config(module, path)?;
    ctx.set_config_hash(hash);
    ctx.input(path)?;
    Ok(Some(value))
}

fn resolve_seed(ctx: &mut RunContext, flag: Option<u64>, config: Option<u64>) -> u64 {
    let (seed, source) = match (flag, config) {
        (Some(s), _) => (s, "flag"),
        (None, Some(s)) => (s, "config"),
        (None, None) => (0, "default"),
    };
    ctx.seed("seed", seed, source);
    seed
}

pub(super) fn run(cmd: SimulateCmd, argv: Vec<String>) -> Result<RunManifest, CliError> {
    match cmd {
        SimulateCmd::Tls(args) => tls(&args, argv),
        SimulateCmd::Decay(args) => decay(&args, argv),
        SimulateCmd::Ramsey(args) => ramsey(&args, argv),
        SimulateCmd::Singleshot(args) => singleshot(&args, argv),
    }
}

fn trace_plot(traces: &[&TimeTrace], title: &str) -> PlotData {
    let mut plot = PlotData::new(title, "time (h)", "value (s)");
    for t in traces {
        let x = t.timestamps().iter().map(|v| v / 3600.0).collect();
        plot.series.push(Series::line(t.kind.to_string(), x, t.values().to_vec()));
    }
    plot
}

fn tls(args: &SimArgs, argv: Vec<String>) -> Result<RunManifest, CliError> {
    let mut ctx = RunContext::new("simulate tls", argv, &args.out)?;
    let raw = read_config("tlssim", args, &mut ctx)?;
    let config_seed = raw
        .as_ref()
        .and_then(|v| v.get("ensemble").unwrap_or(v).get("seed"))
        .and_then(Value::as_u64);
    let mut cfg = match raw {
        None => TlsRunConfig {
            ensemble: EnsembleConfig::default(),
            duration_s: default_duration(),
            cadence_s: default_cadence(),
            t_phi_s: None,
            scaling: None,
        },
        Some(v) if v.get("ensemble").is_some() => parse_config_value("tlssim", v)?,
        // a bare ensemble config
        Some(v) => TlsRunConfig {
            ensemble: parse_config_value("tlssim", v)?,
            duration_s: default_duration(),
            cadence_s: default_cadence(),
            t_phi_s: None,
            scaling: None,
        },
    };
    let seed = resolve_seed(&mut ctx, args.seed, config_seed);
    cfg.ensemble.seed = seed;
    ctx.option("duration_s", cfg.duration_s);
    ctx.option("cadence_s", cfg.cadence_s);

    let ensemble = tlssim::sample_ensemble(&cfg.ensemble, seed)?;
    let t1 = tlssim::simulate_t1_trace(&ensemble, cfg.duration_s, cfg.cadence_s, seed)?;
    ctx.write("t1_trace.csv", io::write_trace(&t1).as_bytes(), ArtifactRole::Data)?;
    let mut shown = vec![&t1];
    let t2;
    if let Some(t_phi) = cfg.t_phi_s {
        t2 = tlssim::coupled_t2star_trace(&t1, t_phi)?;
        ctx.write("t2star_trace.csv", io::write_trace(&t2).as_bytes(), ArtifactRole::Data)?;
        shown.push(&t2);
    }
    ctx.write_plot("trace", &trace_plot(&shown, "TLS-limited coherence"))?;

    if let Some(sc) = &cfg.scaling {
        let mut scfg = ScalingConfig::calibrated(sc.a_per_sqrt_us);
        if let Some(n) = sc.samples_per_qubit {
            scfg.samples_per_qubit = n;
        }
        if let Some(c) = sc.cadence_s {
            scfg.cadence_s = c;
        }
        let points = tlssim::scaling_experiment(sc.n_qubits, (sc.t1_range_s[0], sc.t1_range_s[1]), &scfg, seed)?;
        let text = serde_json::to_string_pretty(&points).map_err(|e| CliError::internal(e.to_string()))? + "\n";
        ctx.write("scaling_points.json", text.as_bytes(), ArtifactRole::Data)?;
    }
    ctx.finish()
}

fn decay(args: &SimArgs, argv: Vec<String>) -> Result<RunManifest, CliError> {
    let mut ctx = RunContext::new("simulate decay", argv, &args.out)?;
    let cfg: DecayRunConfig = match read_config("expsim", args, &mut ctx)? {
        Some(v) => parse_config_value("expsim", v)?,
        None => DecayRunConfig { t1_s: 50e-6, delays_s: None, noise: ExperimentNoiseConfig::default(), seed: None },
    };
    if !(cfg.t1_s > 0.0) {
        return Err(CliError::validation("expsim", "config field `t1_s`: must be > 0"));
    }
    let seed = resolve_seed(&mut ctx, args.seed, cfg.seed);
    let grid = cfg.delays_s.clone().unwrap_or_else(|| expsim::default_decay_grid(cfg.t1_s));
    let curve = expsim::simulate_decay_curve(cfg.t1_s, &grid, &cfg.noise, seed)?;
    ctx.write("decay.csv", io::write_decay(&curve).as_bytes(), ArtifactRole::Data)?;
    let mut plot = PlotData::new("Energy relaxation", "delay (s)", "P1");
    plot.series.push(Series::points("data", curve.delays().to_vec(), curve.p1().to_vec()));
    ctx.write_plot("decay", &plot)?;
    ctx.finish()
}

fn ramsey(args: &SimArgs, argv: Vec<String>) -> Result<RunManifest, CliError> {
    let mut ctx = RunContext::new("simulate ramsey", argv, &args.out)?;
    let cfg: RamseyRunConfig = match read_config("expsim", args, &mut ctx)? {
        Some(v) => parse_config_value("expsim", v)?,
        None => parse_config_value("expsim", serde_json::json!({ "protocol": "A.2" }))?,
    };
    let proto = match &cfg.protocol {
        Some(label) => Some(expsim::ramsey_protocol(label).ok_or_else(|| {
            CliError::validation("expsim", format!("config field `protocol`: unknown protocol `{label}`"))
        })?),
        None => None,
    };
    let need = |v: Option<f64>, from: Option<f64>, field: &str| {
        v.or(from).ok_or_else(|| CliError::validation("expsim", format!("config field `{field}`: required without `protocol`")))
    };
    let t2star = need(cfg.t2star_s, proto.map(|p| p.mean_t2star), "t2star_s")?;
    let set_detuning = need(cfg.set_detuning_hz, proto.map(|p| p.set_detuning), "set_detuning_hz")?;
    let t_max = need(cfg.t_max_s, proto.map(|p| p.t_max), "t_max_s")?;
    let nyquist = need(cfg.nyquist_hz, proto.map(|p| p.nyquist), "nyquist_hz")?;
    if !(nyquist > 0.0 && t_max > 0.0) {
        return Err(CliError::validation("expsim", "t_max_s and nyquist_hz must be > 0"));
    }
    let seed = resolve_seed(&mut ctx, args.seed, cfg.seed);
    let grid = expsim::ramsey_grid(t_max, nyquist);
    let curve = expsim::simulate_ramsey_curve(cfg.drive_offset_hz, t2star, set_detuning, t_max, &grid, &cfg.noise, seed)?;
    let (csv, sidecar) = io::write_ramsey(&curve);
    ctx.write("ramsey.csv", csv.as_bytes(), ArtifactRole::Data)?;
    ctx.write("ramsey.json", sidecar.as_bytes(), ArtifactRole::Data)?;
    let mut plot = PlotData::new("Ramsey fringe", "delay (s)", "P1");
    plot.series.push(Series::points("data", curve.delays().to_vec(), curve.p1().to_vec()));
    ctx.write_plot("ramsey", &plot)?;
    ctx.finish()
}

fn singleshot(args: &SimArgs, argv: Vec<String>) -> Result<RunManifest, CliError> {
    let mut ctx = RunContext::new("simulate singleshot", argv, &args.out)?;
    let cfg: SingleShotRunConfig = match read_config("expsim", args, &mut ctx)? {
        Some(v) => parse_config_value("expsim", v)?,
        None => parse_config_value("expsim", serde_json::json!({}))?,
    };
    let design = device(&cfg.device, cfg.t_c_k)?;
    let seed = resolve_seed(&mut ctx, args.seed, cfg.seed);
    let shots = expsim::simulate_single_shot(&design, cfg.separation, &cfg.noise, seed)?;
    ctx.write("iq.csv", io::write_iq(&shots).as_bytes(), ArtifactRole::Data)?;
    ctx.write_plot("iq", &super::analyze::iq_scatter(&shots, None))?;
    ctx.finish()
}

pub(super) fn device(label: &str, t_c_k: f64) -> Result<crate::domain::QubitDesign, CliError> {
    if !(t_c_k > 0.0) {
        return Err(CliError::validation("domain", "t_c_k must be > 0"));
    }
    reference_devices(t_c_k)
        .into_iter()
        .find(|d| d.label().eq_ignore_ascii_case(label))
        .ok_or_else(|| CliError::validation("domain", format!("unknown device `{label}`, expected e.g. A.1 .. B.4")))
}
