use std::io;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::ConfigFile;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Subcommand arguments that are not part of the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ManifestArgs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimators: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub param: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
}

/// Written next to every output. Feeding it back as `--config` reproduces
/// the outputs; only `wall_clock_unix_s` differs between reruns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub args: ManifestArgs,
    pub seed: u64,
    pub config: ConfigFile,
    pub outputs: Vec<String>,
    pub wall_clock_unix_s: f64,
}

impl Manifest {
    pub fn new(command: &str, args: ManifestArgs, config: &ConfigFile, outputs: Vec<String>) -> Self {
        Self {
            tool: "hgo-mfc".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            args,
            seed: config.sim.seed,
            config: config.clone(),
            outputs,
            wall_clock_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs_f64())
                .unwrap_or(0.0),
        }
    }

    pub fn write(&self, dir: &Path) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        text.push('\n');
        std::fs::write(dir.join(MANIFEST_FILE), text)
    }
}
