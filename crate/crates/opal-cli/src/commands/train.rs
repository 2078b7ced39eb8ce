//! `opal train`: meta-train a policy, streaming an episode CSV log and
//! writing a resumable checkpoint.

use std::collections::BTreeMap;
use std::path::PathBuf;

use opal_core::policy::{Checkpoint, TrainerState};
use opal_core::train::{train_with, EpisodeLogWriter, ResumeState};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::manifest::RunManifest;

use super::{ensure_dir, write_config_snapshot};

/// What a completed training run left on disk.
#[derive(Debug)]
pub struct TrainArtifacts {
    /// Final checkpoint location.
    pub checkpoint: PathBuf,
    /// Episode log location.
    pub log: PathBuf,
    /// Episodes completed over the whole run (including resumed ones).
    pub episodes: usize,
}

/// Runs training under `config`, optionally attaching variant metadata to
/// the final checkpoint (used by the ablation driver).
pub fn run_with_metadata(
    config: &ExperimentConfig,
    metadata: Option<BTreeMap<String, String>>,
) -> Result<TrainArtifacts> {
    config.validate()?;
    ensure_dir(&config.paths.out_dir)?;
    let snapshot = write_config_snapshot(config)?;

    // The experiment master seed drives training; flag/file overrides of
    // the top-level seed therefore move the whole run.
    let mut train_config = config.train.clone();
    train_config.seed = config.seed;
    if train_config.checkpoint_every > 0 && train_config.checkpoint_dir.is_none() {
        train_config.checkpoint_dir = Some(config.paths.out_dir.clone());
    }

    // Resuming continues episode numbering from the stored counter; the
    // log is opened in append mode so one file covers the whole run.
    let resume = match &config.paths.checkpoint_in {
        Some(path) => {
            let ckpt = Checkpoint::load(path).map_err(CliError::Core)?;
            Some(ResumeState::from_checkpoint(&ckpt).map_err(CliError::Core)?)
        }
        None => None,
    };
    let resuming = resume.is_some();

    let log_path = config.paths.out_dir.join("episodes.csv");
    let mut log = if resuming {
        EpisodeLogWriter::open_append(&log_path).map_err(CliError::Core)?
    } else {
        EpisodeLogWriter::create(&log_path).map_err(CliError::Core)?
    };

    let mut log_error: Option<opal_core::CoreError> = None;
    let mut flagged = 0usize;
    let mut last_episode = resume.as_ref().map(|r| r.episode).unwrap_or(0);
    let outcome = train_with(&train_config, resume, |record| {
        if record.flagged {
            flagged += 1;
        }
        last_episode = record.episode;
        if log_error.is_none() {
            if let Err(e) = log.append(record) {
                log_error = Some(e);
            }
        }
    })
    .map_err(CliError::Core)?;
    log.flush().map_err(CliError::Core)?;
    if let Some(e) = log_error {
        return Err(CliError::Core(e));
    }

    let checkpoint_path = config.checkpoint_out();
    if let Some(parent) = checkpoint_path.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    let mut checkpoint = Checkpoint::new(&outcome.params, config.seed, last_episode)
        .with_trainer(TrainerState {
            baseline: outcome.baseline,
            baseline_initialized: outcome.baseline_initialized,
        });
    if let Some(metadata) = metadata {
        checkpoint = checkpoint.with_metadata(metadata);
    }
    checkpoint.save(&checkpoint_path).map_err(CliError::Core)?;

    let mut manifest = RunManifest::new("train", config)
        .with_checkpoint(&checkpoint_path)?
        .add_output(&checkpoint_path)
        .add_output(&log_path)
        .add_output(&snapshot)
        .add_fact("episodes_completed", last_episode.to_string())
        .add_fact("episodes_this_invocation", outcome.records.len().to_string())
        .add_fact("flagged_episodes", flagged.to_string())
        .add_fact("resumed", resuming.to_string());
    for path in &outcome.checkpoints {
        manifest = manifest.add_output(path);
    }
    manifest.save(&config.manifest_out())?;

    Ok(TrainArtifacts {
        checkpoint: checkpoint_path,
        log: log_path,
        episodes: last_episode,
    })
}

/// Runs `opal train` as invoked from the command line.
pub fn run(config: &ExperimentConfig) -> Result<TrainArtifacts> {
    let artifacts = run_with_metadata(config, None)?;
    println!(
        "trained through episode {}; checkpoint at {}",
        artifacts.episodes,
        artifacts.checkpoint.display()
    );
    Ok(artifacts)
}
