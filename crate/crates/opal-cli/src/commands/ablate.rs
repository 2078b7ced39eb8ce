//! `opal ablate`: train and benchmark the four policy variants that isolate
//! the auxiliary head, the training pool, and the graph structure.

use std::collections::BTreeMap;
use std::path::PathBuf;

use ndarray::Array2;

use opal_core::env::{seeded_stream, Family, TaskPool, TaskSpec};
use opal_core::graph::build_graph;
use opal_core::ops::{design_phase, DEFAULT_DE_CR, DEFAULT_DE_F};
use opal_core::stats::{operator_usage, rank_table, write_records, OperatorUsage, RunRecord};
use opal_core::train::GraphMode;

use crate::config::ExperimentConfig;
use crate::error::{io_at, CliError, Result};
use crate::manifest::RunManifest;

use super::evaluate::{load_policy, run_benchmark};
use super::{ensure_dir, write_config_snapshot, write_program_logs};

/// One ablation variant: what it changes relative to the full system.
#[derive(Debug, Clone, Copy)]
pub struct Variant {
    /// Row label in the report.
    pub name: &'static str,
    /// Auxiliary-classification loss weight.
    pub aux_weight: f64,
    /// Task families the trainer samples from.
    pub task_pool: TaskPool,
    /// Trajectory-graph adjacency used in training and evaluation.
    pub graph_mode: GraphMode,
}

/// The four variants, in report order.
pub const VARIANTS: [Variant; 4] = [
    Variant {
        name: "full",
        aux_weight: 0.3,
        task_pool: TaskPool::Mixed,
        graph_mode: GraphMode::Knn,
    },
    Variant {
        name: "noAux",
        aux_weight: 0.0,
        task_pool: TaskPool::Mixed,
        graph_mode: GraphMode::Knn,
    },
    Variant {
        name: "restricted",
        aux_weight: 0.3,
        task_pool: TaskPool::Restricted,
        graph_mode: GraphMode::Knn,
    },
    Variant {
        name: "noGraph",
        aux_weight: 0.3,
        task_pool: TaskPool::Mixed,
        graph_mode: GraphMode::Identity,
    },
];

fn pool_name(pool: TaskPool) -> &'static str {
    match pool {
        TaskPool::Mixed => "mixed",
        TaskPool::Restricted => "restricted",
    }
}

/// Builds one short probe trajectory under `variant`'s graph settings and
/// reports whether its adjacency came out exactly as the identity matrix.
fn probe_adjacency_is_identity(config: &ExperimentConfig, variant: &Variant) -> Result<bool> {
    let task = TaskSpec::new(Family::Sphere, 10, config.seed, 0.0, 600);
    let mut env = task.build();
    let mut rng = seeded_stream(config.seed, 0xAB1A7E);
    design_phase(
        &mut env,
        config.train.population,
        DEFAULT_DE_F,
        DEFAULT_DE_CR,
        500,
        &mut rng,
    );
    let mut graph_config = config.train.graph.clone();
    graph_config.identity_adjacency = matches!(variant.graph_mode, GraphMode::Identity);
    let graph = build_graph(
        env.trajectory_points(),
        env.trajectory_fitness(),
        &graph_config,
        &mut rng,
    )
    .map_err(CliError::Core)?;
    let eye: Array2<f64> = Array2::eye(graph.a.nrows());
    Ok(graph.a == eye)
}

/// Report row for one variant.
#[derive(Debug, Clone)]
pub struct AblationRow {
    /// Variant name.
    pub variant: String,
    /// Mean rank over all (function, dim) problems (1 = best).
    pub avg_rank: f64,
    /// Distinct decoded token sequences across all evaluation runs.
    pub unique_programs: usize,
    /// Fraction of emitted tokens outside the two DE generators.
    pub non_de_fraction: f64,
}

/// Renders the four-row ablation table.
pub fn render_report(rows: &[AblationRow]) -> String {
    let mut out = String::from("ablation results\n\n");
    out.push_str(&format!(
        "{:<12} {:>9} {:>16} {:>16}\n",
        "variant", "avg_rank", "unique_programs", "non_de_fraction"
    ));
    for row in rows {
        out.push_str(&format!(
            "{:<12} {:>9.3} {:>16} {:>16.3}\n",
            row.variant, row.avg_rank, row.unique_programs, row.non_de_fraction
        ));
    }
    out
}

/// Runs `opal ablate` as invoked from the command line.
pub fn run(config: &ExperimentConfig) -> Result<PathBuf> {
    config.validate()?;
    ensure_dir(&config.paths.out_dir)?;
    let snapshot = write_config_snapshot(config)?;

    let mut all_records: Vec<RunRecord> = Vec::new();
    let mut all_programs = Vec::new();
    let mut variant_outputs: Vec<PathBuf> = Vec::new();
    let mut identity_fact = String::from("n/a");

    for variant in &VARIANTS {
        let variant_dir = config.paths.out_dir.join(format!("variant_{}", variant.name));
        ensure_dir(&variant_dir)?;

        // Same master seed everywhere: the variants differ only in the
        // factor each one ablates.
        let mut variant_config = config.clone();
        variant_config.paths.out_dir = variant_dir.clone();
        variant_config.paths.checkpoint_in = None;
        variant_config.paths.checkpoint_out = Some(variant_dir.join("checkpoint.json"));
        variant_config.train.aux_weight = variant.aux_weight;
        variant_config.train.task_pool = variant.task_pool;
        variant_config.train.families = None;
        variant_config.train.graph_mode = variant.graph_mode;
        variant_config.train.checkpoint_every = 0;

        let mut metadata = BTreeMap::new();
        metadata.insert("variant".to_string(), variant.name.to_string());
        metadata.insert("aux_weight".to_string(), variant.aux_weight.to_string());
        metadata.insert("task_pool".to_string(), pool_name(variant.task_pool).to_string());
        metadata.insert("graph_mode".to_string(), variant.graph_mode.to_string());

        let artifacts = super::train::run_with_metadata(&variant_config, Some(metadata))?;
        println!(
            "variant {}: trained {} episodes, checkpoint at {}",
            variant.name,
            artifacts.episodes,
            artifacts.checkpoint.display()
        );

        // Benchmark the variant policy alone; reference optimizers are not
        // part of the ablation table.
        let (_, params, graph_mode) = load_policy(&artifacts.checkpoint)?;
        let bench = run_benchmark(&variant_config, &params, graph_mode, &["opal"], variant.name)?;
        all_records.extend(bench.records);
        all_programs.extend(bench.programs);

        // Extend the variant manifest train() wrote with the ablation facts,
        // including a direct structural check of the graph ablation.
        let manifest_path = variant_config.manifest_out();
        let mut manifest = RunManifest::load(&manifest_path)?
            .add_fact("variant", variant.name)
            .add_fact("aux_weight", variant.aux_weight)
            .add_fact("task_pool", pool_name(variant.task_pool))
            .add_fact("graph_mode", variant.graph_mode);
        if matches!(variant.graph_mode, GraphMode::Identity) {
            let verified = probe_adjacency_is_identity(config, variant)?;
            manifest = manifest.add_fact("identity_adjacency_verified", verified);
            identity_fact = verified.to_string();
        }
        manifest.save(&manifest_path)?;
        variant_outputs.push(artifacts.checkpoint);
        variant_outputs.push(manifest_path);
    }

    // Rank the four variants against each other on every problem.
    let names: Vec<String> = VARIANTS.iter().map(|v| v.name.to_string()).collect();
    let table = rank_table(&all_records, &names).map_err(CliError::Core)?;
    let usage = operator_usage(&all_programs);
    let usage_for = |name: &str| -> Option<&OperatorUsage> {
        usage.iter().find(|u| u.family == name)
    };
    let rows: Vec<AblationRow> = names
        .iter()
        .enumerate()
        .map(|(col, name)| {
            let u = usage_for(name);
            AblationRow {
                variant: name.clone(),
                avg_rank: table.mean_ranks[col],
                unique_programs: u.map_or(0, |u| u.unique_programs),
                non_de_fraction: u.map_or(0.0, |u| u.non_de_fraction),
            }
        })
        .collect();

    let records_path = config.records_out();
    write_records(&all_records, &records_path).map_err(CliError::Core)?;
    let programs_path = config.paths.out_dir.join("programs.csv");
    write_program_logs(&all_programs, &programs_path)?;

    let report_path = config.report_out();
    io_at(&report_path, std::fs::write(&report_path, render_report(&rows)))?;
    let csv_path = config.paths.out_dir.join("ablation.csv");
    let mut writer = csv::Writer::from_path(&csv_path).map_err(|e| CliError::Core(e.into()))?;
    writer
        .write_record(["variant", "avg_rank", "unique_programs", "non_de_fraction"])
        .map_err(|e| CliError::Core(e.into()))?;
    for row in &rows {
        writer
            .write_record([
                row.variant.clone(),
                row.avg_rank.to_string(),
                row.unique_programs.to_string(),
                row.non_de_fraction.to_string(),
            ])
            .map_err(|e| CliError::Core(e.into()))?;
    }
    writer.flush().map_err(|e| CliError::Core(e.into()))?;

    let mut manifest = RunManifest::new("ablate", config)
        .add_output(&report_path)
        .add_output(&csv_path)
        .add_output(&records_path)
        .add_output(&programs_path)
        .add_output(&snapshot)
        .add_fact("variants", names.join(","))
        .add_fact("record_count", all_records.len())
        .add_fact("identity_adjacency_verified", &identity_fact);
    for path in &variant_outputs {
        manifest = manifest.add_output(path);
    }
    manifest.save(&config.manifest_out())?;

    println!("wrote ablation report to {}", report_path.display());
    Ok(report_path)
}
