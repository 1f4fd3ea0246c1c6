//! Every run writes exactly one `run.json` describing what produced what.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config_path: PathBuf,
    /// The resolved configuration, after any seed override.
    pub config: Value,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_ms: u128,
    pub diagnostics: Value,
}

pub struct ManifestBuilder {
    command: String,
    config_path: PathBuf,
    config: Value,
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    started: Instant,
    diagnostics: Value,
}

impl ManifestBuilder {
    pub fn new(command: &str, config_path: &Path, config: Value, seed: Option<u64>) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            config_path: config_path.to_path_buf(),
            config,
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
            diagnostics: Value::Null,
        }
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.inputs.push(path.to_path_buf());
        self
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    pub fn diagnostics<T: Serialize>(&mut self, value: &T) -> &mut Self {
        self.diagnostics = serde_json::to_value(value).unwrap_or(Value::Null);
        self
    }

    pub fn write(self, path: &Path) -> Result<(), CliError> {
        let manifest = RunManifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_path: self.config_path,
            config: self.config,
            seed: self.seed,
            inputs: self.inputs,
            outputs: self.outputs,
            wall_clock_ms: self.started.elapsed().as_millis(),
            diagnostics: self.diagnostics,
        };
        kgli_core::io::write_json(path, &manifest)
            .map_err(|e| CliError::numeric(format!("cannot write manifest: {e}")))
    }
}
