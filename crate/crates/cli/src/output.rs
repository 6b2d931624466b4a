use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything needed to reproduce a run, written next to its outputs.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub config_echo: serde_json::Value,
    /// Wall-clock seconds per phase.
    pub timing: BTreeMap<String, f64>,
    /// File names relative to the output directory.
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, serde_json::Value>,
}

impl RunManifest {
    pub fn new<C: Serialize>(command: &str, seed: u64, config: &C) -> Result<Self, CliError> {
        Ok(Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            config_echo: serde_json::to_value(config)?,
            timing: BTreeMap::new(),
            outputs: Vec::new(),
            details: BTreeMap::new(),
        })
    }

    pub fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timing.insert(phase.to_string(), start.elapsed().as_secs_f64());
        out
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        write_text(dir, "manifest.json", &(serde_json::to_string_pretty(self)? + "\n"))
    }
}

/// Loads the config echoed by a previous run of `command`.
pub fn load_config_echo<C: DeserializeOwned>(path: &Path, command: &str) -> Result<C, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read manifest {}: {e}", path.display())))?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("bad manifest {}: {e}", path.display())))?;
    if manifest.command != command {
        return Err(CliError::Usage(format!(
            "manifest was written by `{}`, not `{command}`",
            manifest.command
        )));
    }
    serde_json::from_value(manifest.config_echo)
        .map_err(|e| CliError::Usage(format!("bad config_echo in manifest: {e}")))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    Ok(())
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    fs::write(dir.join(name), text)?;
    Ok(())
}

/// RFC 4180 CSV with a header row and LF line endings.
pub struct CsvOut {
    writer: csv::Writer<fs::File>,
}

impl CsvOut {
    pub fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self, CliError> {
        let path: PathBuf = dir.join(name);
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)?;
        writer.write_record(header)?;
        Ok(Self { writer })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<(), CliError> {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.writer.flush()?;
        Ok(())
    }
}

/// Shortest representation that round-trips.
pub fn num(v: f64) -> String {
    format!("{v}")
}
