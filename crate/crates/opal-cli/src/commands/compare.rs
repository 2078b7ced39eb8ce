//! `opal compare`: build the nonparametric comparison report from a
//! records CSV produced by `opal evaluate`.

use std::path::PathBuf;

use opal_core::stats::{read_records, BenchReport};

use crate::config::ExperimentConfig;
use crate::error::{io_at, CliError, Result};
use crate::manifest::RunManifest;

use super::{ensure_dir, read_program_logs, write_config_snapshot};

/// Significance level for the win/tie/loss and pairwise tables.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Runs `opal compare` as invoked from the command line.
///
/// `reference` names the algorithm the pairwise tests compare against.
pub fn run(config: &ExperimentConfig, reference: &str, alpha: f64) -> Result<PathBuf> {
    config.validate()?;
    ensure_dir(&config.paths.out_dir)?;
    let snapshot = write_config_snapshot(config)?;
    let records_path = config.records_out();
    if !records_path.is_file() {
        return Err(CliError::Io {
            path: records_path.display().to_string(),
            source: std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "records CSV not found (run `opal evaluate` first)",
            ),
        });
    }
    let records = read_records(&records_path).map_err(CliError::Core)?;

    // Pick up program logs when they sit next to the records.
    let programs_path = records_path
        .parent()
        .map(|dir| dir.join("programs.csv"))
        .filter(|p| p.is_file());
    let programs = match &programs_path {
        Some(path) => read_program_logs(path)?,
        None => Vec::new(),
    };

    let report =
        BenchReport::build(&records, reference, alpha, &programs).map_err(CliError::Core)?;
    let report_path = config.report_out();
    if let Some(parent) = report_path.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    io_at(&report_path, std::fs::write(&report_path, report.to_text()))?;
    let tables = report
        .write_csv_tables(&config.paths.out_dir)
        .map_err(CliError::Core)?;

    let mut manifest = RunManifest::new("compare", config)
        .add_output(&report_path)
        .add_output(&snapshot)
        .add_fact("record_count", records.len())
        .add_fact("reference", reference)
        .add_fact("alpha", alpha)
        .add_fact("algorithms", report.algorithms.join(","));
    for table in &tables {
        manifest = manifest.add_output(table);
    }
    manifest.save(&config.manifest_out())?;

    println!("wrote report to {}", report_path.display());
    Ok(report_path)
}
