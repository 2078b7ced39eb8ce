//! `opal evaluate`: run a trained policy and the two reference optimizers
//! over a function/dimension grid, collecting one record per run.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use opal_core::env::{seeded_stream, Family, TaskSpec};
use opal_core::ops::{de_baseline, pso_baseline};
use opal_core::policy::{Checkpoint, DecodeMode, PolicyParams};
use opal_core::stats::{write_records, ProgramLogEntry, RunRecord};
use opal_core::train::{rollout, GraphMode, RolloutConfig};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::manifest::{sha256_file, RunManifest};

use super::{ensure_dir, mix_seed, write_config_snapshot, write_program_logs};

/// The fixed comparison set: the trained policy and two classic optimizers.
pub const ALGORITHMS: [&str; 3] = ["opal", "de", "pso"];

/// One (function, dim, run, algorithm) cell of the benchmark grid.
#[derive(Debug, Clone, Copy)]
struct Cell {
    family: Family,
    dim: usize,
    run: usize,
    algorithm: &'static str,
}

/// Everything a benchmark sweep produced.
#[derive(Debug)]
pub struct BenchArtifacts {
    /// All run records, in deterministic grid order.
    pub records: Vec<RunRecord>,
    /// Programs the policy emitted, grouped by function family.
    pub programs: Vec<ProgramLogEntry>,
}

/// Runs the policy in `params` on one seeded task and returns its final
/// best plus the decoded program.
fn policy_run(
    task: &TaskSpec,
    params: &PolicyParams,
    rollout_config: &RolloutConfig,
    run_seed: u64,
) -> Result<(f64, Vec<opal_core::ops::OperatorToken>)> {
    let mut env = task.build();
    let mut rng = seeded_stream(run_seed, 0);
    let result = rollout(&mut env, params, rollout_config, &mut rng).map_err(CliError::Core)?;
    Ok((result.f_final_best, result.output.tokens))
}

/// Executes one grid cell.
fn run_cell(
    cell: &Cell,
    config: &ExperimentConfig,
    params: &PolicyParams,
    rollout_config: &RolloutConfig,
    algorithm_label: &str,
) -> Result<(RunRecord, Option<ProgramLogEntry>)> {
    let function = cell.family.name();
    let budget = config.eval_budget(cell.dim);
    // One instance per (function, dim): every run and every algorithm
    // face the same rotated/shifted landscape, so records pair by run.
    let instance_seed = mix_seed(config.seed, &format!("instance|{function}|{}", cell.dim));
    // Runs are noise-free so equal seeds reproduce equal records exactly.
    let task = TaskSpec::new(cell.family, cell.dim, instance_seed, 0.0, budget);
    let run_seed = mix_seed(
        config.seed,
        &format!("run|{function}|{}|{}|{}", cell.dim, cell.run, cell.algorithm),
    );

    // Policy cells carry the caller's label (the variant name in ablation
    // runs, plain "opal" otherwise); reference optimizers keep their own.
    let (label, group) = if cell.algorithm == "opal" {
        (algorithm_label, algorithm_label)
    } else {
        (cell.algorithm, cell.algorithm)
    };
    let program_group = if group == "opal" { function } else { group };

    let (final_best, program) = match cell.algorithm {
        "opal" => {
            let (best, tokens) = policy_run(&task, params, rollout_config, run_seed)?;
            (best, Some(tokens))
        }
        "de" => {
            let mut env = task.build();
            let mut rng = seeded_stream(run_seed, 0);
            (de_baseline(&mut env, budget, &mut rng).final_best(), None)
        }
        "pso" => {
            let mut env = task.build();
            let mut rng = seeded_stream(run_seed, 0);
            (pso_baseline(&mut env, budget, &mut rng).final_best(), None)
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown algorithm `{other}` in benchmark grid"
            )))
        }
    };

    let record = RunRecord {
        algorithm: label.to_string(),
        function: function.to_string(),
        dim: cell.dim,
        seed: cell.run as u64,
        final_best,
        trace_path: None,
    };
    let log = program.map(|tokens| ProgramLogEntry {
        family: program_group.to_string(),
        tokens,
    });
    Ok((record, log))
}

/// Sweeps the full grid with a bounded worker pool; records are collected
/// and written by this single thread, in deterministic order.
pub fn run_benchmark(
    config: &ExperimentConfig,
    params: &PolicyParams,
    graph_mode: GraphMode,
    algorithms: &[&'static str],
    algorithm_label: &str,
) -> Result<BenchArtifacts> {
    let families = config.eval.families()?;
    let mut cells = Vec::new();
    for &family in &families {
        for &dim in &config.eval.dims {
            for run in 0..config.eval.runs {
                for &algorithm in algorithms {
                    cells.push(Cell {
                        family,
                        dim,
                        run,
                        algorithm,
                    });
                }
            }
        }
    }

    let rollout_config = RolloutConfig {
        design_ratio: config.eval.design_ratio,
        population: config.train.population,
        graph: {
            let mut graph = config.train.graph.clone();
            graph.identity_adjacency = matches!(graph_mode, GraphMode::Identity);
            graph
        },
        decode_mode: DecodeMode::Greedy,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let results: Vec<Result<(RunRecord, Option<ProgramLogEntry>)>> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| run_cell(cell, config, params, &rollout_config, algorithm_label))
            .collect()
    });

    let mut records = Vec::with_capacity(results.len());
    let mut programs = Vec::new();
    for result in results {
        let (record, log) = result?;
        records.push(record);
        if let Some(log) = log {
            programs.push(log);
        }
    }
    Ok(BenchArtifacts { records, programs })
}

/// Reads the policy checkpoint and the graph mode recorded in its
/// metadata (defaults to the k-NN graph).
pub fn load_policy(path: &Path) -> Result<(Checkpoint, PolicyParams, GraphMode)> {
    let checkpoint = Checkpoint::load(path).map_err(CliError::Core)?;
    let params = checkpoint.restore_params().map_err(CliError::Core)?;
    let graph_mode = match checkpoint
        .metadata
        .as_ref()
        .and_then(|m| m.get("graph_mode"))
    {
        Some(name) => GraphMode::from_str(name).map_err(CliError::Core)?,
        None => GraphMode::Knn,
    };
    Ok((checkpoint, params, graph_mode))
}

/// Runs `opal evaluate` as invoked from the command line.
pub fn run(config: &ExperimentConfig) -> Result<(PathBuf, usize)> {
    config.validate()?;
    ensure_dir(&config.paths.out_dir)?;
    let snapshot = write_config_snapshot(config)?;
    let checkpoint_path = config
        .paths
        .checkpoint_in
        .clone()
        .expect("validate() requires checkpoint_in for evaluate");

    // The checkpoint is read once and never written back; hashing it
    // before and after makes that auditable from the manifest alone.
    let hash_before = sha256_file(&checkpoint_path)?;
    let (_, params, graph_mode) = load_policy(&checkpoint_path)?;
    let artifacts = run_benchmark(config, &params, graph_mode, &ALGORITHMS, "opal")?;

    let records_path = config.records_out();
    if let Some(parent) = records_path.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    write_records(&artifacts.records, &records_path).map_err(CliError::Core)?;
    let programs_path = config.paths.out_dir.join("programs.csv");
    write_program_logs(&artifacts.programs, &programs_path)?;

    let hash_after = sha256_file(&checkpoint_path)?;
    if hash_after != hash_before {
        return Err(CliError::Config(
            "checkpoint changed during evaluation; refusing to continue".into(),
        ));
    }

    RunManifest::new("evaluate", config)
        .with_checkpoint(&checkpoint_path)?
        .add_output(&records_path)
        .add_output(&programs_path)
        .add_output(&snapshot)
        .add_fact("record_count", artifacts.records.len())
        .add_fact("graph_mode", graph_mode)
        .add_fact("algorithms", ALGORITHMS.join(","))
        .save(&config.manifest_out())?;

    println!(
        "wrote {} records to {}",
        artifacts.records.len(),
        records_path.display()
    );
    Ok((records_path, artifacts.records.len()))
}
