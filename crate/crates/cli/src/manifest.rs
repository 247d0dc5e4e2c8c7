//! Run manifests: enough to reproduce a CSV byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunManifest {
    pub command: String,
    pub config: RunConfig,
    pub seed: u64,
    pub versions: BTreeMap<String, String>,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<PathBuf>,
}

pub fn now() -> String {
    OffsetDateTime::now_utc().format(&Rfc3339).unwrap_or_default()
}

impl RunManifest {
    pub fn new(command: &str, config: RunConfig, started_at: String, outputs: Vec<PathBuf>) -> Self {
        let versions = BTreeMap::from([
            ("regchain-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("regchain-core".to_string(), regchain_core::VERSION.to_string()),
        ]);
        RunManifest { command: command.into(), seed: config.game.seed, config, versions, started_at, finished_at: now(), outputs }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("manifest {}: {e}", path.display())))
    }
}
