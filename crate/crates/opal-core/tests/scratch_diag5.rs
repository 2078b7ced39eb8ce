//! Temporary diagnostic: fresh-graph aux accuracy vs training horizon
//! under the true mixed objective (REINFORCE + entropy + λ_aux = 0.3).

use opal_core::env::{sample_task_filtered, seeded_stream, Family};
use opal_core::graph::build_graph;
use opal_core::ops::{design_phase, DEFAULT_DE_CR, DEFAULT_DE_F, DEFAULT_POPULATION};
use opal_core::policy::forward;
use opal_core::train::{split_budget, train_with, ResumeState, TrainConfig};

fn accuracy(
    params: &opal_core::policy::PolicyParams,
    families: &[Family],
    config: &TrainConfig,
    eval_seed: u64,
    n: usize,
) -> f64 {
    let mut rng = seeded_stream(eval_seed, 0);
    let mut correct = 0usize;
    for _ in 0..n {
        let task = sample_task_filtered(&mut rng, families, &config.dims, config.budget_per_dim);
        let mut env = task.build();
        let (t_design, _) = split_budget(env.budget(), config.design_ratio);
        design_phase(&mut env, DEFAULT_POPULATION, DEFAULT_DE_F, DEFAULT_DE_CR, t_design, &mut rng);
        let graph = build_graph(
            env.trajectory_points(),
            env.trajectory_fitness(),
            &config.effective_graph(),
            &mut rng,
        )
        .unwrap();
        let pass = forward(graph.h.view(), graph.a.view(), params).unwrap();
        if pass.aux_prediction() == task.label.index() {
            correct += 1;
        }
    }
    correct as f64 / n as f64
}

#[test]
#[ignore]
fn accuracy_vs_horizon() {
    let families = vec![
        Family::Sphere,
        Family::Rastrigin,
        Family::HybridBlend,
        Family::CompositionBlend,
    ];
    for seed in [909u64, 777] {
        let mut resume: Option<ResumeState> = None;
        let mut completed = 0usize;
        print!("seed {seed}:");
        for target in [100usize, 300, 500, 1000, 2000, 3000] {
            let config = TrainConfig {
                episodes: target,
                families: Some(families.clone()),
                dims: vec![10],
                seed,
                checkpoint_every: 0,
                checkpoint_dir: None,
                ..TrainConfig::default()
            };
            let outcome = train_with(&config, resume.take(), |_| {}).unwrap();
            completed = target;
            let acc = accuracy(&outcome.params, &families, &config, seed + 10, 100);
            print!(" ep{completed}={acc:.2}");
            use std::io::Write as _;
            std::io::stdout().flush().ok();
            resume = Some(ResumeState {
                params: outcome.params,
                episode: completed,
                baseline: outcome.baseline,
                baseline_initialized: outcome.baseline_initialized,
            });
        }
        println!();
    }
}
