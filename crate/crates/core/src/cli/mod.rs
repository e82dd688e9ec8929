//! Command-line front end: `simulate` writes synthetic datasets, `analyze`
//! turns datasets into JSON reports and plots. Every run leaves a
//! `manifest.json` in its output directory.

mod analyze;
pub mod manifest;
mod simulate;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::aging::AgingError;
use crate::domain::DomainError;
use crate::expsim::ExpSimError;
use crate::fitters::FitError;
use crate::readout::ReadoutError;
use crate::stability::{StabilityError, UnitSystem};
use crate::tlssim::TlsError;

pub use manifest::{read_manifest, ArtifactRole, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Validation,
    Fit,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Validation => 2,
            ErrorKind::Fit => 3,
            ErrorKind::Io => 4,
        }
    }
}

/// Error surfaced to the user as a JSON object on stderr.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub module: String,
    pub message: String,
}

impl CliError {
    pub fn validation(module: &str, message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Validation, module: module.into(), message: message.into() }
    }

    pub fn fit(module: &str, message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Fit, module: module.into(), message: message.into() }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError { kind: ErrorKind::Io, module: "io".into(), message: format!("{}: {err}", path.display()) }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Io, module: "cli".into(), message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": {
                "kind": self.kind,
                "module": self.module,
                "message": format!("{}: {}", self.module, self.message),
                "exit_code": self.exit_code(),
            }
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.module, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<DomainError> for CliError {
    fn from(e: DomainError) -> Self {
        match e {
            DomainError::Io { path, source } => CliError::io(Path::new(&path), source),
            other => CliError::validation("domain", other.to_string()),
        }
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::TooFewPoints { .. } => CliError::validation("fitters", e.to_string()),
            _ => CliError::fit("fitters", e.to_string()),
        }
    }
}

impl From<StabilityError> for CliError {
    fn from(e: StabilityError) -> Self {
        match e {
            StabilityError::Fit(f) => CliError { module: "stability".into(), ..CliError::from(f) },
            other => CliError::validation("stability", other.to_string()),
        }
    }
}

impl From<TlsError> for CliError {
    fn from(e: TlsError) -> Self {
        match e {
            TlsError::Qubit { .. } => CliError::fit("tlssim", e.to_string()),
            TlsError::Config(_) => CliError::validation("tlssim", e.to_string()),
        }
    }
}

impl From<ExpSimError> for CliError {
    fn from(e: ExpSimError) -> Self {
        CliError::validation("expsim", e.to_string())
    }
}

impl From<ReadoutError> for CliError {
    fn from(e: ReadoutError) -> Self {
        CliError::validation("readout", e.to_string())
    }
}

impl From<AgingError> for CliError {
    fn from(e: AgingError) -> Self {
        CliError::validation("aging", e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "transmon-lab", version, about = "Transmon stability simulation and analysis")]
pub struct Cli {
    /// Worker threads for per-qubit and per-dataset work.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic datasets.
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Fit and report on datasets.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Check a data file against its schema.
    Validate {
        #[arg(long)]
        kind: crate::domain::io::SchemaKind,
        path: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config seed; 0 when neither is given.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum SimulateCmd {
    /// TLS-limited T1 trace (and optional T2* trace or scaling family).
    Tls(SimArgs),
    /// Energy-relaxation curve.
    Decay(SimArgs),
    /// Ramsey fringe with virtual-Z detuning.
    Ramsey(SimArgs),
    /// Single-shot IQ clouds.
    Singleshot(SimArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Units {
    /// Hz and seconds.
    #[default]
    Si,
    /// GHz and microseconds.
    Lab,
}

impl Units {
    pub fn system(self) -> UnitSystem {
        match self {
            Units::Si => UnitSystem::Si,
            Units::Lab => UnitSystem::Lab,
        }
    }

    pub fn time(self, s: f64) -> f64 {
        s * self.system().time_factor()
    }

    pub fn freq(self, hz: f64) -> f64 {
        match self {
            Units::Si => hz,
            Units::Lab => hz * 1e-9,
        }
    }

    pub fn time_unit(self) -> &'static str {
        match self {
            Units::Si => "s",
            Units::Lab => "us",
        }
    }

    pub fn freq_unit(self) -> &'static str {
        match self {
            Units::Si => "Hz",
            Units::Lab => "GHz",
        }
    }

    fn name(self) -> &'static str {
        match self {
            Units::Si => "si",
            Units::Lab => "lab",
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Units::Si)]
    pub units: Units,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCmd {
    /// Exponential fit of a decay CSV.
    FitDecay {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Damped-cosine fit of a Ramsey CSV and its JSON sidecar.
    FitRamsey {
        #[arg(long)]
        input: PathBuf,
        /// Drive frequency used for the run; adds the calibrated qubit frequency.
        #[arg(long)]
        drive_frequency_hz: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// QDA discrimination metrics of an IQ CSV.
    Readout {
        #[arg(long)]
        input: PathBuf,
        /// Qubit frequency for T_eff.
        #[arg(long, conflicts_with = "device")]
        f_q_hz: Option<f64>,
        /// Device label from the reference table, e.g. `A.1`.
        #[arg(long)]
        device: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Dropouts, coincidences and distribution summaries of a trace directory.
    Stability {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        dropout_k: f64,
        #[arg(long, default_value_t = 0.5)]
        coincidence_threshold: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Cross-cooldown junction aging.
    Aging {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// `σ_T1 = a·⟨T1⟩^{3/2}` fit over scaling points.
    Benchmark {
        #[arg(long)]
        points: PathBuf,
        /// Admit points failing the sample-count or span rule.
        #[arg(long)]
        override_admission: bool,
        #[command(flatten)]
        common: Common,
    },
}

/// Reads a JSON config, reporting the field path of any mismatch.
pub fn load_config<T: DeserializeOwned>(module: &str, path: &Path) -> Result<(T, String), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let hash = manifest::sha256_hex(&bytes);
    let de = &mut serde_json::Deserializer::from_slice(&bytes);
    let value = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        CliError::validation(module, format!("config field `{field}`: {}", e.inner()))
    })?;
    Ok((value, hash))
}

pub fn parse_config_value<T: DeserializeOwned>(module: &str, value: serde_json::Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let field = e.path().to_string();
        CliError::validation(module, format!("config field `{field}`: {}", e.inner()))
    })
}

/// Runs a parsed command line. `argv` is recorded in the manifest;
/// `validate` writes none.
pub fn run(cli: Cli, argv: Vec<String>) -> Result<Option<RunManifest>, CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::validation("cli", "--jobs must be at least 1"));
        }
        // the global pool can only be built once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match cli.command {
        Command::Simulate(cmd) => simulate::run(cmd, argv).map(Some),
        Command::Analyze(cmd) => analyze::run(cmd, argv).map(Some),
        Command::Validate { kind, path } => {
            crate::domain::io::validate_dataset(&path, kind)?;
            println!("{}", serde_json::json!({ "valid": true, "path": path.display().to_string() }));
            Ok(None)
        }
    }
}

/// Parses `argv`, runs, prints errors as JSON and returns the exit code.
pub fn main_with_args(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli, argv) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
