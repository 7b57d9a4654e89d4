use std::path::{Path, PathBuf};

use pqrst::evaluate::host_descriptor;
use serde::Serialize;

/// Provenance written next to every run's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Every flag value, defaults included.
    pub config: serde_json::Value,
    /// Values derived from the flags (corpus, model sizes, effective transform parameters).
    pub resolved: serde_json::Value,
    pub seed: u64,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub version: String,
    pub host: String,
}

impl RunManifest {
    pub fn new<C: Serialize>(
        subcommand: &str,
        config: &C,
        seed: u64,
        inputs: Vec<PathBuf>,
        outputs: Vec<PathBuf>,
        resolved: serde_json::Value,
    ) -> serde_json::Result<Self> {
        Ok(Self {
            subcommand: subcommand.into(),
            config: serde_json::to_value(config)?,
            resolved,
            seed,
            inputs,
            outputs,
            version: env!("CARGO_PKG_VERSION").into(),
            host: host_descriptor(),
        })
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)
    }
}
