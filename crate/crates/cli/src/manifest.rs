//! Run manifests and artifact checksums.
//!
//! A manifest is written before any result and never touched again; the
//! checksums of the artifacts it lists go to a separate file once the run
//! has finished.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Mode};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Mode,
    /// Extra command arguments (scheme, checkpoint paths, flags).
    pub arguments: BTreeMap<String, String>,
    pub seed: u64,
    pub started_at: String,
    /// Files the run emits, relative to the output directory.
    pub artifacts: Vec<String>,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checksums {
    pub manifest: String,
    pub finished_at: String,
    /// SHA-256 (hex) of every artifact, keyed by relative path.
    pub sha256: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(
        command: Mode,
        config: &ExperimentConfig,
        arguments: BTreeMap<String, String>,
        artifacts: Vec<String>,
    ) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            arguments,
            seed: config.seed,
            started_at: chrono::Utc::now().to_rfc3339(),
            artifacts,
            config: config.clone(),
        }
    }

    pub fn file_name(command: Mode) -> String {
        format!("manifest-{}.json", command.as_str())
    }

    pub fn checksum_file_name(command: Mode) -> String {
        format!("checksums-{}.json", command.as_str())
    }

    /// Writes the manifest into `dir`. Re-running a command in the same
    /// directory starts a new run and replaces the previous manifest.
    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))?;
        let path = dir.join(Self::file_name(self.command));
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::io("manifest", e))?;
        fs::write(&path, text + "\n").map_err(|e| CliError::io(path.display(), e))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Hashes every listed artifact and writes the checksum file.
    pub fn seal(&self, dir: &Path) -> Result<Checksums, CliError> {
        let mut sha256 = BTreeMap::new();
        for name in &self.artifacts {
            let path = dir.join(name);
            let bytes = fs::read(&path).map_err(|e| CliError::io(format!("artifact {}", path.display()), e))?;
            sha256.insert(name.clone(), hex(&Sha256::digest(&bytes)));
        }
        let sums = Checksums {
            manifest: Self::file_name(self.command),
            finished_at: chrono::Utc::now().to_rfc3339(),
            sha256,
        };
        let path = dir.join(Self::checksum_file_name(self.command));
        let text = serde_json::to_string_pretty(&sums).map_err(|e| CliError::io("checksums", e))?;
        fs::write(&path, text + "\n").map_err(|e| CliError::io(path.display(), e))?;
        Ok(sums)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
