//! Run manifests: a JSON record of everything needed to reproduce a CLI
//! invocation exactly, including a content hash of the checkpoint used.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{io_at, CliError, Result};

/// Manifest format version.
pub const MANIFEST_VERSION: u32 = 1;

/// What one CLI run did and with which inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Format version.
    pub version: u32,
    /// Subcommand that produced this manifest.
    pub command: String,
    /// Master seed of the run.
    pub seed: u64,
    /// The fully resolved configuration, embedded as a snapshot.
    pub config: ExperimentConfig,
    /// SHA-256 of the checkpoint file read or written, when one exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_sha256: Option<String>,
    /// Files the run wrote.
    pub outputs: Vec<PathBuf>,
    /// Free-form facts recorded by the command (counts, verification
    /// results, variant switches).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub facts: BTreeMap<String, String>,
}

impl RunManifest {
    /// Starts a manifest for `command` with the resolved config snapshot.
    pub fn new(command: &str, config: &ExperimentConfig) -> RunManifest {
        RunManifest {
            version: MANIFEST_VERSION,
            command: command.to_string(),
            seed: config.seed,
            config: config.clone(),
            checkpoint_sha256: None,
            outputs: Vec::new(),
            facts: BTreeMap::new(),
        }
    }

    /// Records the content hash of the checkpoint at `path`.
    pub fn with_checkpoint(mut self, path: &Path) -> Result<RunManifest> {
        self.checkpoint_sha256 = Some(sha256_file(path)?);
        Ok(self)
    }

    /// Adds an output file.
    pub fn add_output(mut self, path: impl Into<PathBuf>) -> RunManifest {
        self.outputs.push(path.into());
        self
    }

    /// Records one free-form fact.
    pub fn add_fact(mut self, key: &str, value: impl ToString) -> RunManifest {
        self.facts.insert(key.to_string(), value.to_string());
        self
    }

    /// Writes pretty-printed JSON to `path`, creating parent directories.
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                io_at(parent, std::fs::create_dir_all(parent))?;
            }
        }
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Config(format!("manifest serialization: {e}")))?;
        io_at(path, std::fs::write(path, json))
    }

    /// Reads a manifest back.
    pub fn load(path: &Path) -> Result<RunManifest> {
        let text = io_at(path, std::fs::read_to_string(path))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("manifest {}: {e}", path.display())))
    }
}

/// SHA-256 of a file's contents, hex-encoded.
pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = io_at(path, std::fs::read(path))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        use std::fmt::Write as _;
        let _ = write!(hex, "{byte:02x}");
    }
    Ok(hex)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Profile;

    #[test]
    fn sha256_matches_known_vector() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.txt");
        std::fs::write(&path, b"abc").unwrap();
        assert_eq!(
            sha256_file(&path).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_round_trips_through_json() {
        let dir = tempfile::tempdir().unwrap();
        let config = ExperimentConfig::for_profile(Profile::Desk);
        let manifest = RunManifest::new("evaluate", &config)
            .add_output(dir.path().join("records.csv"))
            .add_fact("record_count", 120);
        let path = dir.path().join("manifest.json");
        manifest.save(&path).unwrap();
        let back = RunManifest::load(&path).unwrap();
        assert_eq!(manifest, back);
        assert_eq!(back.facts["record_count"], "120");
    }

    #[test]
    fn checkpoint_hash_changes_with_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.json");
        std::fs::write(&path, b"one").unwrap();
        let first = sha256_file(&path).unwrap();
        std::fs::write(&path, b"two").unwrap();
        let second = sha256_file(&path).unwrap();
        assert_ne!(first, second);
    }
}
