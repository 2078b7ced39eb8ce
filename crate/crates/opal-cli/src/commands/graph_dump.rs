//! `opal graph-dump`: run one design-phase probe and write its trajectory
//! graph (node features + adjacency) for inspection.

use std::path::PathBuf;

use opal_core::env::{seeded_stream, Family, TaskSpec};
use opal_core::graph::build_graph;
use opal_core::ops::{design_phase, DEFAULT_DE_CR, DEFAULT_DE_F};
use opal_core::train::split_budget;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::manifest::RunManifest;

use super::{ensure_dir, write_config_snapshot};

/// Runs `opal graph-dump` for one (function, dim) task.
pub fn run(config: &ExperimentConfig, function: Family, dim: usize) -> Result<Vec<PathBuf>> {
    config.validate()?;
    ensure_dir(&config.paths.out_dir)?;
    let snapshot = write_config_snapshot(config)?;

    let budget = config.eval_budget(dim);
    let (t_design, _) = split_budget(budget, config.eval.design_ratio);
    let task = TaskSpec::new(function, dim, config.seed, 0.0, budget);
    let mut env = task.build();
    let mut rng = seeded_stream(config.seed, 0);
    design_phase(
        &mut env,
        config.train.population,
        DEFAULT_DE_F,
        DEFAULT_DE_CR,
        t_design,
        &mut rng,
    );
    let graph_config = config.train.graph.clone();
    let graph = build_graph(
        env.trajectory_points(),
        env.trajectory_fitness(),
        &graph_config,
        &mut rng,
    )
    .map_err(CliError::Core)?;

    let features_path = config.paths.out_dir.join("graph_features.csv");
    let mut writer =
        csv::Writer::from_path(&features_path).map_err(|e| CliError::Core(e.into()))?;
    writer
        .write_record(["f_z", "rank_norm", "d_best", "t_norm", "df_local", "dim_feature"])
        .map_err(|e| CliError::Core(e.into()))?;
    for row in graph.h.rows() {
        writer
            .write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| CliError::Core(e.into()))?;
    }
    writer.flush().map_err(|e| CliError::Core(e.into()))?;

    let adjacency_path = config.paths.out_dir.join("graph_adjacency.csv");
    let mut writer =
        csv::Writer::from_path(&adjacency_path).map_err(|e| CliError::Core(e.into()))?;
    for row in graph.a.rows() {
        writer
            .write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| CliError::Core(e.into()))?;
    }
    writer.flush().map_err(|e| CliError::Core(e.into()))?;

    let sidecar_path = config.paths.out_dir.join("graph.json");
    let sidecar = serde_json::json!({
        "function": function.name(),
        "dim": dim,
        "seed": config.seed,
        "nodes": graph.a.nrows(),
        "k_effective": graph.k_eff(graph_config.k),
        "strategy": format!("{:?}", graph_config.strategy),
        "identity_adjacency": graph_config.identity_adjacency,
        "design_evaluations": env.evals_used(),
    });
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| CliError::Config(format!("graph sidecar serialization: {e}")))?;
    crate::error::io_at(&sidecar_path, std::fs::write(&sidecar_path, json))?;

    RunManifest::new("graph_dump", config)
        .add_output(&features_path)
        .add_output(&adjacency_path)
        .add_output(&sidecar_path)
        .add_output(&snapshot)
        .add_fact("function", function.name())
        .add_fact("dim", dim)
        .add_fact("nodes", graph.a.nrows())
        .save(&config.manifest_out())?;

    println!(
        "dumped {}-node graph for {} (d = {dim}) into {}",
        graph.a.nrows(),
        function.name(),
        config.paths.out_dir.display()
    );
    Ok(vec![features_path, adjacency_path, sidecar_path])
}
