//! Run manifest: what a subcommand produced, from which config, under which
//! seed.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
    /// Stamped only in the standalone manifest file so that the data
    /// outputs embedding a manifest stay byte-identical across reruns.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp_unix: Option<u64>,
}

impl RunManifest {
    pub fn new(command: &str, config_hash: String, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            config_hash,
            seed,
            outputs: Vec::new(),
            timestamp_unix: None,
        }
    }

    pub fn record(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Writes `manifest.json` (timestamped) into the output directory.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let mut stamped = self.clone();
        stamped.timestamp_unix = Some(
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        );
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(&stamped)?;
        std::fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
