//! `opal inspect-program`: decode and print the program a trained policy
//! picks for one task, with its per-phase probabilities.

use opal_core::env::{seeded_stream, Family, TaskSpec};
use opal_core::graph::build_graph;
use opal_core::ops::{design_phase, OperatorToken, DEFAULT_DE_CR, DEFAULT_DE_F};
use opal_core::policy::{decode, forward, DecodeMode};
use opal_core::train::split_budget;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::manifest::RunManifest;

use super::evaluate::load_policy;
use super::{ensure_dir, write_config_snapshot};

/// Runs `opal inspect-program` for one (function, dim) task.
pub fn run(config: &ExperimentConfig, function: Family, dim: usize) -> Result<String> {
    config.validate()?;
    ensure_dir(&config.paths.out_dir)?;
    let snapshot = write_config_snapshot(config)?;
    let checkpoint_path = config
        .paths
        .checkpoint_in
        .clone()
        .expect("validate() requires checkpoint_in for inspect_program");
    let (checkpoint, params, graph_mode) = load_policy(&checkpoint_path)?;

    let budget = config.eval_budget(dim);
    let (t_design, t_run) = split_budget(budget, config.eval.design_ratio);
    let task = TaskSpec::new(function, dim, config.seed, 0.0, budget);
    let mut env = task.build();
    let mut rng = seeded_stream(config.seed, 0);
    let design = design_phase(
        &mut env,
        config.train.population,
        DEFAULT_DE_F,
        DEFAULT_DE_CR,
        t_design,
        &mut rng,
    );
    let mut graph_config = config.train.graph.clone();
    graph_config.identity_adjacency = matches!(graph_mode, opal_core::train::GraphMode::Identity);
    let graph = build_graph(
        env.trajectory_points(),
        env.trajectory_fitness(),
        &graph_config,
        &mut rng,
    )
    .map_err(CliError::Core)?;
    let pass = forward(graph.h.view(), graph.a.view(), &params).map_err(CliError::Core)?;
    let output = decode(&pass, DecodeMode::Greedy, &mut rng);
    let probabilities = pass.phase_probabilities();

    let mut text = String::new();
    text.push_str(&format!(
        "task: {} (d = {dim}, budget = {budget}, probe = {t_design}, run = {t_run})\n",
        function.name()
    ));
    text.push_str(&format!(
        "checkpoint: {} (episode {})\n",
        checkpoint_path.display(),
        checkpoint.episode
    ));
    text.push_str(&format!("probe best: {:.6e}\n\nprogram:\n", design.f_design_best));
    text.push_str(&output.program.to_text());
    text.push_str("\nper-phase token probabilities:\n");
    for (phase, probs) in probabilities.iter().enumerate() {
        text.push_str(&format!("  phase {}:\n", phase + 1));
        let mut indexed: Vec<(usize, f64)> =
            probs.iter().copied().enumerate().collect();
        indexed.sort_by(|a, b| b.1.total_cmp(&a.1));
        for (idx, p) in indexed {
            text.push_str(&format!(
                "    {:<24} {:.4}\n",
                OperatorToken::ALL[idx].name(),
                p
            ));
        }
    }
    if let Some(label) = opal_core::env::LandscapeLabel::from_index(pass.aux_prediction()) {
        text.push_str(&format!("\npredicted landscape class: {}\n", label.name()));
    }
    print!("{text}");

    RunManifest::new("inspect_program", config)
        .with_checkpoint(&checkpoint_path)?
        .add_output(&snapshot)
        .add_fact("function", function.name())
        .add_fact("dim", dim)
        .add_fact(
            "program",
            output
                .tokens
                .iter()
                .map(|t| t.name())
                .collect::<Vec<_>>()
                .join(" "),
        )
        .save(&config.manifest_out())?;

    Ok(text)
}
