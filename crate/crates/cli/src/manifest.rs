//! Provenance record written next to every command's outputs.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliResult;

#[derive(Debug, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub workers: usize,
    pub nisebath_version: &'static str,
    pub cli_version: &'static str,
    pub outputs: Vec<OutputRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig) -> CliResult<Self> {
        Ok(Self {
            command: command.to_string(),
            config_sha256: config.hash()?,
            seed: config.seed,
            workers: config.workers(),
            nisebath_version: nisebath::VERSION,
            cli_version: env!("CARGO_PKG_VERSION"),
            outputs: Vec::new(),
            notes: Vec::new(),
        })
    }

    /// Records a written file; paths are stored relative to `dir`.
    pub fn record(&mut self, dir: &Path, path: &Path) -> CliResult<()> {
        let bytes = std::fs::read(path)?;
        let file = path.strip_prefix(dir).unwrap_or(path).display().to_string();
        self.outputs.push(OutputRecord {
            file,
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(())
    }

    /// Writes `<command>.manifest.json` into `dir`.
    pub fn write(&self, dir: &Path) -> CliResult<PathBuf> {
        let path = dir.join(format!("{}.manifest.json", self.command));
        let text = serde_json::to_string_pretty(self).expect("manifest is plain data");
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }
}
