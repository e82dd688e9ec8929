//! Run manifests: what went into a run and what came out of it.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactRole {
    /// Numeric output covered by the reproducibility guarantee.
    Data,
    /// Rendered view of a data file.
    Plot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub file: String,
    pub role: ArtifactRole,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Hash of everything that determines the data outputs.
    pub id: String,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub command_line: Vec<String>,
    pub config_hash: Option<String>,
    pub options: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
    pub seed_source: Option<String>,
    pub rng: String,
    pub inputs: Vec<InputDigest>,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub artifacts: Vec<Artifact>,
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Collects inputs while a command runs and records every file it writes.
#[derive(Debug)]
pub struct RunContext {
    pub out_dir: PathBuf,
    /// Set by fitting commands; `Some(false)` makes the run fail after
    /// its outputs are written.
    pub fit_converged: Option<bool>,
    manifest: RunManifest,
}

impl RunContext {
    pub fn new(command: &str, command_line: Vec<String>, out_dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
        Ok(RunContext {
            out_dir: out_dir.to_path_buf(),
            fit_converged: None,
            manifest: RunManifest {
                id: String::new(),
                tool: env!("CARGO_PKG_NAME").into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                command_line,
                config_hash: None,
                options: BTreeMap::new(),
                seeds: BTreeMap::new(),
                seed_source: None,
                rng: crate::tlssim::RNG_NAME.into(),
                inputs: Vec::new(),
                started_unix_s: now(),
                finished_unix_s: 0.0,
                artifacts: Vec::new(),
            },
        })
    }

    pub fn set_config_hash(&mut self, hash: String) {
        self.manifest.config_hash = Some(hash);
    }

    pub fn option(&mut self, key: &str, value: impl ToString) {
        self.manifest.options.insert(key.into(), value.to_string());
    }

    pub fn seed(&mut self, key: &str, seed: u64, source: &str) {
        self.manifest.seeds.insert(key.into(), seed);
        self.manifest.seed_source = Some(source.into());
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let sha256 = file_digest(path)?;
        self.manifest.inputs.push(InputDigest { path: path.display().to_string(), sha256 });
        Ok(())
    }

    /// Deterministic id over the content that shapes outputs; paths and
    /// clock times are left out.
    pub fn id(&mut self) -> String {
        if self.manifest.id.is_empty() {
            let m = &self.manifest;
            let key = serde_json::json!({
                "version": m.version,
                "command": m.command,
                "config_hash": m.config_hash,
                "options": m.options,
                "seeds": m.seeds,
                "inputs": m.inputs.iter().map(|i| &i.sha256).collect::<Vec<_>>(),
            });
            self.manifest.id = sha256_hex(key.to_string().as_bytes())[..16].to_string();
        }
        self.manifest.id.clone()
    }

    pub fn write(&mut self, name: &str, bytes: &[u8], role: ArtifactRole) -> Result<PathBuf, CliError> {
        let path = self.out_dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.manifest.artifacts.push(Artifact { file: name.into(), role, sha256: sha256_hex(bytes) });
        Ok(path)
    }

    /// Serialises `report` with the manifest id attached under `manifest_id`.
    pub fn write_json<T: Serialize>(&mut self, name: &str, report: &T) -> Result<PathBuf, CliError> {
        let mut value = serde_json::to_value(report).map_err(|e| CliError::internal(e.to_string()))?;
        if let serde_json::Value::Object(map) = &mut value {
            map.insert("manifest_id".into(), self.id().into());
        }
        let text = serde_json::to_string_pretty(&value).map_err(|e| CliError::internal(e.to_string()))? + "\n";
        self.write(name, text.as_bytes(), ArtifactRole::Data)
    }

    pub fn write_plot(&mut self, stem: &str, plot: &crate::plot::PlotData) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(plot).map_err(|e| CliError::internal(e.to_string()))? + "\n";
        self.write(&format!("{stem}.plot.json"), json.as_bytes(), ArtifactRole::Data)?;
        self.write(&format!("{stem}.svg"), crate::plot::render_svg(plot).as_bytes(), ArtifactRole::Plot)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<RunManifest, CliError> {
        self.id();
        self.manifest.finished_unix_s = now();
        let path = self.out_dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self.manifest).map_err(|e| CliError::internal(e.to_string()))? + "\n";
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(self.manifest)
    }
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest, CliError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::validation("cli", format!("{}: {e}", path.display())))
}
