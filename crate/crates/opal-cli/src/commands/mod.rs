//! Subcommand implementations. Each command resolves its configuration,
//! does its work, and writes a run manifest next to its outputs.

pub mod ablate;
pub mod compare;
pub mod evaluate;
pub mod graph_dump;
pub mod inspect;
pub mod train;

use std::fs;
use std::path::Path;

use opal_core::ops::OperatorToken;
use opal_core::stats::ProgramLogEntry;

use crate::config::ExperimentConfig;
use crate::error::{io_at, CliError, Result};

/// Writes the fully resolved configuration as reloadable TOML into the
/// run's output directory and returns its path. Re-running with
/// `--config <that file>` reproduces the run.
pub fn write_config_snapshot(config: &ExperimentConfig) -> Result<std::path::PathBuf> {
    let path = config.paths.out_dir.join("config.toml");
    io_at(&path, fs::write(&path, config.to_toml()?))?;
    Ok(path)
}

/// FNV-1a mix of the master seed with a textual context, so every
/// (function, dim, run, algorithm) cell gets an independent, reproducible
/// random stream.
pub fn mix_seed(master: u64, context: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = OFFSET;
    for byte in master.to_le_bytes() {
        hash = (hash ^ u64::from(byte)).wrapping_mul(PRIME);
    }
    for byte in context.bytes() {
        hash = (hash ^ u64::from(byte)).wrapping_mul(PRIME);
    }
    hash
}

/// Creates a directory (and parents), attributing failures to the path.
pub fn ensure_dir(dir: &Path) -> Result<()> {
    io_at(dir, fs::create_dir_all(dir))
}

/// Writes decoded programs as a two-column CSV: the grouping key (landscape
/// family or ablation variant) and the space-joined token names.
pub fn write_program_logs(entries: &[ProgramLogEntry], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| CliError::Core(e.into()))?;
    writer
        .write_record(["group", "tokens"])
        .map_err(|e| CliError::Core(e.into()))?;
    for entry in entries {
        let tokens = entry
            .tokens
            .iter()
            .map(|t| t.name())
            .collect::<Vec<_>>()
            .join(" ");
        writer
            .write_record([entry.family.as_str(), tokens.as_str()])
            .map_err(|e| CliError::Core(e.into()))?;
    }
    writer.flush().map_err(|e| CliError::Core(e.into()))?;
    Ok(())
}

/// Reads a program CSV written by [`write_program_logs`].
pub fn read_program_logs(path: &Path) -> Result<Vec<ProgramLogEntry>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::Core(e.into()))?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| CliError::Core(e.into()))?;
        let family = row
            .get(0)
            .ok_or_else(|| CliError::Config(format!("{}: missing group column", path.display())))?
            .to_string();
        let tokens = row
            .get(1)
            .unwrap_or("")
            .split_whitespace()
            .map(|name| name.parse::<OperatorToken>().map_err(CliError::Core))
            .collect::<Result<Vec<_>>>()?;
        out.push(ProgramLogEntry { family, tokens });
    }
    Ok(out)
}
