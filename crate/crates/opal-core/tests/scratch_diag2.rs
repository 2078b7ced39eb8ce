//! Temporary diagnostic: how much family signal do the graph summaries carry?

use opal_core::env::{sample_task_filtered, seeded_stream, Family};
use opal_core::graph::{build_graph, col, GraphConfig};
use opal_core::ops::{design_phase, DEFAULT_DE_CR, DEFAULT_DE_F, DEFAULT_POPULATION};
use opal_core::train::split_budget;

/// Per-graph summary: [mean d_best, std d_best, corr(f_z,d_best),
/// mean |f_z(i) - mean_nbr f_z|, skew f_z, frac rank-corr(t, f)].
fn summarize(graph: &opal_core::graph::TrajectoryGraph) -> Vec<f64> {
    let h = &graph.h;
    let a = &graph.a;
    let n = h.nrows();
    let nf = n as f64;
    let mean = |c: usize| (0..n).map(|i| h[[i, c]]).sum::<f64>() / nf;
    let std = |c: usize, m: f64| {
        ((0..n).map(|i| (h[[i, c]] - m).powi(2)).sum::<f64>() / nf).sqrt()
    };
    let m_db = mean(col::D_BEST);
    let s_db = std(col::D_BEST, m_db);
    let m_fz = mean(col::F_Z);
    let s_fz = std(col::F_Z, m_fz).max(1e-12);
    // corr(f_z, d_best)
    let mut cov = 0.0;
    for i in 0..n {
        cov += (h[[i, col::F_Z]] - m_fz) * (h[[i, col::D_BEST]] - m_db);
    }
    cov /= nf;
    let corr = cov / (s_fz * s_db.max(1e-12));
    // local roughness: mean |f_z - mean of neighbors' f_z|
    let mut rough = 0.0;
    for i in 0..n {
        let mut acc = 0.0;
        let mut deg = 0.0;
        for j in 0..n {
            if a[[i, j]] > 0.5 && j != i {
                acc += h[[j, col::F_Z]];
                deg += 1.0;
            }
        }
        if deg > 0.0 {
            rough += (h[[i, col::F_Z]] - acc / deg).abs();
        }
    }
    rough /= nf;
    // skew of f_z
    let skew = (0..n).map(|i| ((h[[i, col::F_Z]] - m_fz) / s_fz).powi(3)).sum::<f64>() / nf;
    // corr(t_norm, f_z)
    let m_t = mean(col::T_NORM);
    let s_t = std(col::T_NORM, m_t).max(1e-12);
    let mut cov_t = 0.0;
    for i in 0..n {
        cov_t += (h[[i, col::T_NORM]] - m_t) * (h[[i, col::F_Z]] - m_fz);
    }
    cov_t /= nf;
    let corr_t = cov_t / (s_t * s_fz);
    vec![m_db, s_db, corr, rough, skew, corr_t]
}

#[test]
#[ignore]
fn family_signal_in_graph_summaries() {
    let families = vec![
        Family::Sphere,
        Family::Rastrigin,
        Family::HybridBlend,
        Family::CompositionBlend,
    ];
    let dims = vec![10usize];
    let budget_per_dim = 1000usize;
    let graph_config = GraphConfig::default();
    let mut rng = seeded_stream(77, 0);

    let mut data: Vec<(Vec<f64>, usize)> = Vec::new();
    for _ in 0..600 {
        let task = sample_task_filtered(&mut rng, &families, &dims, budget_per_dim);
        let mut env = task.build();
        let (t_design, _) = split_budget(env.budget(), 0.2);
        design_phase(
            &mut env,
            DEFAULT_POPULATION,
            DEFAULT_DE_F,
            DEFAULT_DE_CR,
            t_design,
            &mut rng,
        );
        let graph = build_graph(
            env.trajectory_points(),
            env.trajectory_fitness(),
            &graph_config,
            &mut rng,
        )
        .unwrap();
        data.push((summarize(&graph), task.label.index()));
    }

    // Per-family mean of each summary statistic.
    let stat_names = ["mean_dbest", "std_dbest", "corr_f_d", "roughness", "skew_f", "corr_t_f"];
    for class in 0..4 {
        let rows: Vec<&Vec<f64>> = data
            .iter()
            .filter(|(_, l)| *l == class)
            .map(|(s, _)| s)
            .collect();
        let k = rows.len() as f64;
        let means: Vec<f64> = (0..6)
            .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / k)
            .collect();
        let stds: Vec<f64> = (0..6)
            .map(|j| {
                (rows.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / k).sqrt()
            })
            .collect();
        println!("class {class} (n={}):", rows.len());
        for j in 0..6 {
            println!("  {:<11} mean {:>9.4}  std {:>8.4}", stat_names[j], means[j], stds[j]);
        }
    }

    // 1-NN classification accuracy (leave-one-out) in z-scored summary space.
    let n = data.len();
    let dim = 6;
    let mut mu = vec![0.0; dim];
    let mut sd = vec![0.0; dim];
    for j in 0..dim {
        mu[j] = data.iter().map(|(s, _)| s[j]).sum::<f64>() / n as f64;
        sd[j] = (data.iter().map(|(s, _)| (s[j] - mu[j]).powi(2)).sum::<f64>() / n as f64)
            .sqrt()
            .max(1e-12);
    }
    let zs: Vec<Vec<f64>> = data
        .iter()
        .map(|(s, _)| (0..dim).map(|j| (s[j] - mu[j]) / sd[j]).collect())
        .collect();
    let mut correct = 0usize;
    for i in 0..n {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for j in 0..n {
            if i == j {
                continue;
            }
            let d: f64 = (0..dim).map(|k| (zs[i][k] - zs[j][k]).powi(2)).sum();
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        if data[best].1 == data[i].1 {
            correct += 1;
        }
    }
    println!("1-NN leave-one-out accuracy on summaries: {:.3}", correct as f64 / n as f64);
}
