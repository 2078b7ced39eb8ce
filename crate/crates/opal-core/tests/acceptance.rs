//! Acceptance gate for the core library. One test per criterion; each
//! prints a single `acceptance cN (<name>): PASS` line on success, and
//! every assertion message carries the matching FAIL line.
//!
//! Criterion 10 (the ablation pipeline) exercises the command-line crate
//! and lives in its test suite instead.

use std::time::Instant;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use opal_core::env::{sample_task_filtered, seeded_stream, Family, LandscapeLabel, TaskSpec};
use opal_core::graph::{build_graph, col, k_eff, GraphConfig};
use opal_core::ops::{
    de_baseline, design_phase, execute_program, OperatorProgram, OperatorToken, DEFAULT_DE_CR,
    DEFAULT_DE_F, DEFAULT_POPULATION,
};
use opal_core::policy::{
    decode, forward, loss_and_gradient, DecodeMode, PolicyArch, PolicyParams, PHASE_COUNT,
};
use opal_core::stats::{
    friedman_test, holm_adjust, wilcoxon_signed_rank, wilcoxon_signed_rank_with_limit,
    WILCOXON_EXACT_LIMIT,
};
use opal_core::train::{
    reward, rollout, split_budget, train, RolloutConfig, TrainConfig, REWARD_EPSILON,
};

/// Emits the criterion's PASS line.
fn pass(name: &str, detail: String) {
    println!("acceptance {name}: PASS — {detail}");
}

fn random_tokens(rng: &mut ChaCha8Rng) -> Vec<OperatorToken> {
    (0..PHASE_COUNT)
        .map(|_| OperatorToken::from_index(rng.random_range(0..OperatorToken::ALL.len())).unwrap())
        .collect()
}

fn random_trajectory(m: usize, d: usize, rng: &mut ChaCha8Rng) -> (Array2<f64>, Vec<f64>) {
    let points = Array2::from_shape_fn((m, d), |_| rng.random_range(-100.0..100.0));
    let fitness = (0..m).map(|_| rng.random_range(-50.0..1e4)).collect();
    (points, fitness)
}

fn median_of(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// c1 — Reverse-mode gradients of the full loss (encoder, phase heads,
/// auxiliary head) match central finite differences on 20 random
/// instances with N=12 nodes, hidden width 8, dimension 5, in under 30 s.
#[test]
fn c1_gradient_matches_finite_differences() {
    const NAME: &str = "c1 (gradient oracle)";
    const STEP: f64 = 1e-5;
    let start = Instant::now();
    let arch = PolicyArch::with_hidden(8);
    let mut rng = seeded_stream(101, 0);
    let mut worst = 0.0f64;

    for instance in 0..20 {
        let m = rng.random_range(12..=40);
        let (points, fitness) = random_trajectory(m, 5, &mut rng);
        let config = GraphConfig {
            m_max: 12,
            ..GraphConfig::default()
        };
        let graph = build_graph(points.view(), &fitness, &config, &mut rng).unwrap();
        assert_eq!(graph.len(), 12, "{NAME}: FAIL — fuzz graph must have N=12");

        let params = PolicyParams::init(arch, &mut rng).unwrap();
        let tokens = random_tokens(&mut rng);
        let advantage = rng.random_range(-2.0..2.0);
        let label = LandscapeLabel::from_index(rng.random_range(0..LandscapeLabel::COUNT));
        let loss_of = |p: &PolicyParams| {
            loss_and_gradient(
                graph.h.view(),
                graph.a.view(),
                p,
                &tokens,
                advantage,
                0.01,
                0.3,
                label,
            )
            .unwrap()
            .0
        };
        let (_, gradient) = loss_and_gradient(
            graph.h.view(),
            graph.a.view(),
            &params,
            &tokens,
            advantage,
            0.01,
            0.3,
            label,
        )
        .unwrap();

        let flat = params.flatten();
        assert_eq!(gradient.len(), flat.len());
        for i in 0..flat.len() {
            let mut bumped = flat.clone();
            bumped[i] = flat[i] + STEP;
            let up = loss_of(&PolicyParams::from_flat(arch, &bumped).unwrap());
            bumped[i] = flat[i] - STEP;
            let down = loss_of(&PolicyParams::from_flat(arch, &bumped).unwrap());
            let numeric = (up - down) / (2.0 * STEP);
            let analytic = gradient[i];
            let rel = (analytic - numeric).abs() / 1.0f64.max(analytic.abs()).max(numeric.abs());
            worst = worst.max(rel);
            assert!(
                rel < 1e-4,
                "{NAME}: FAIL — instance {instance} parameter {i}: \
                 analytic {analytic} vs finite-difference {numeric} (rel {rel:.3e})"
            );
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        elapsed < 30.0,
        "{NAME}: FAIL — took {elapsed:.1} s (limit 30 s)"
    );
    pass(
        NAME,
        format!("20 instances, max rel err {worst:.2e}, {elapsed:.1} s"),
    );
}

/// c2 — The logarithmic-improvement reward reproduces its hand values:
/// reward(100, 1) = 2 within 1e-9, reward(x, x) = 0 exactly, and
/// reward(1, 0) lands in [11.9, 12.1] under ε = 1e-12.
#[test]
fn c2_reward_hand_values_are_exact() {
    const NAME: &str = "c2 (reward exactness)";
    let two = reward(100.0, 1.0, None, 1e-12);
    assert!(
        (two - 2.0).abs() <= 1e-9,
        "{NAME}: FAIL — reward(100, 1, 1e-12) = {two}"
    );
    for (x, eps) in [
        (5.0, 1e-12),
        (0.0, 1e-12),
        (1e100, 1e-12),
        (3.25, 1e-9),
        (7.0, REWARD_EPSILON),
    ] {
        let zero = reward(x, x, None, eps);
        assert!(
            zero == 0.0,
            "{NAME}: FAIL — reward({x}, {x}, {eps}) = {zero}, not exactly 0"
        );
    }
    let twelve = reward(1.0, 0.0, None, 1e-12);
    assert!(
        (11.9..=12.1).contains(&twelve),
        "{NAME}: FAIL — reward(1, 0, 1e-12) = {twelve}"
    );
    pass(
        NAME,
        format!("reward(100,1)={two:.12}, reward(1,0)={twelve:.6}"),
    );
}

/// c3 — Over 1000 fuzzed (program, budget) pairs the executor charges
/// t_run ≤ T_used < t_run + (max single-call cost) and its best-so-far
/// curve never increases.
#[test]
fn c3_executor_budget_law_holds_under_fuzz() {
    const NAME: &str = "c3 (executor budget law)";
    let mut rng = seeded_stream(303, 0);
    let families = [Family::Sphere, Family::Rastrigin, Family::Ackley];
    for case in 0..1000 {
        let family = families[rng.random_range(0..families.len())];
        let dim = rng.random_range(3..=12);
        let population = rng.random_range(8..=60);
        let t_run = rng.random_range(60..=3000);
        let noise = if rng.random::<f64>() < 0.3 { 0.5 } else { 0.0 };
        // Margin below the budget keeps the environment from running dry:
        // the law under test concerns executor accounting, not starvation.
        let budget = population + t_run + 150;
        let spec = TaskSpec::new(family, dim, rng.random::<u64>(), noise, budget);
        let mut env = spec.build();

        let mut init_rng = seeded_stream(rng.random::<u64>(), 0);
        let state =
            opal_core::ops::PopulationState::init_uniform(&mut env, population, &mut init_rng);
        let program = OperatorProgram::from_tokens(&random_tokens(&mut rng));
        let trace = execute_program(&mut env, state, &program, t_run, rng.random::<u64>());

        let used = trace.total_fes();
        assert!(
            used >= t_run,
            "{NAME}: FAIL — case {case}: used {used} < t_run {t_run}"
        );
        let costs: Vec<usize> = trace.h_fe.windows(2).map(|w| w[1] - w[0]).collect();
        let max_cost = costs.iter().copied().max().unwrap_or(0);
        assert!(
            used < t_run + max_cost,
            "{NAME}: FAIL — case {case}: used {used} ≥ t_run {t_run} + max call cost {max_cost}"
        );
        assert!(
            costs.iter().all(|&c| c > 0),
            "{NAME}: FAIL — case {case}: zero-cost call recorded in the trace"
        );
        assert!(
            trace.h_best.windows(2).all(|w| w[1] <= w[0]),
            "{NAME}: FAIL — case {case}: best-so-far curve increased"
        );
    }
    pass(NAME, "1000 fuzzed (program, budget) pairs".to_string());
}

/// c4 — Over 1000 fuzzed trajectories the graph invariants hold:
/// symmetric adjacency with unit diagonal, at most 300 nodes, effective
/// neighbor count min(10, N−1), standardized feature columns centered to
/// < 1e-9, zero trajectory time for single-point trajectories; < 60 s.
#[test]
fn c4_graph_invariants_hold_under_fuzz() {
    const NAME: &str = "c4 (graph invariants)";
    let start = Instant::now();
    let mut rng = seeded_stream(404, 0);
    let config = GraphConfig::default();
    for case in 0..1000 {
        let m = rng.random_range(1..=600);
        let d = rng.random_range(1..=40);
        let (points, mut fitness) = random_trajectory(m, d, &mut rng);
        // A quantized slice of cases produces tied fitness values.
        if rng.random::<f64>() < 0.3 {
            for f in fitness.iter_mut() {
                *f = f.round();
            }
        }
        let graph = build_graph(points.view(), &fitness, &config, &mut rng).unwrap();
        let n = graph.len();
        assert_eq!(
            n,
            m.min(300),
            "{NAME}: FAIL — case {case}: N = {n} for M = {m}"
        );
        let expected_k = k_eff(config.k, n);
        assert_eq!(
            graph.k_eff(config.k),
            expected_k.min(10).min(n.saturating_sub(1)),
            "{NAME}: FAIL — case {case}: k_eff mismatch"
        );
        for i in 0..n {
            assert_eq!(
                graph.a[[i, i]],
                1.0,
                "{NAME}: FAIL — case {case}: diagonal hole at {i}"
            );
            let degree = (0..n)
                .filter(|&j| j != i && graph.a[[i, j]] != 0.0)
                .count();
            assert!(
                degree >= expected_k,
                "{NAME}: FAIL — case {case}: node {i} degree {degree} < k_eff {expected_k}"
            );
            for j in (i + 1)..n {
                let v = graph.a[[i, j]];
                assert!(
                    v == 0.0 || v == 1.0,
                    "{NAME}: FAIL — case {case}: non-binary adjacency entry {v}"
                );
                assert_eq!(
                    v,
                    graph.a[[j, i]],
                    "{NAME}: FAIL — case {case}: asymmetric at ({i},{j})"
                );
            }
        }
        for column in [col::F_Z, col::DF_LOC] {
            let mean = graph.h.column(column).sum() / n as f64;
            assert!(
                mean.abs() < 1e-9,
                "{NAME}: FAIL — case {case}: standardized column {column} mean {mean:e}"
            );
        }
        if m == 1 {
            assert_eq!(
                graph.h[[0, col::T_NORM]],
                0.0,
                "{NAME}: FAIL — case {case}: t_norm nonzero for single-point trajectory"
            );
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        elapsed < 60.0,
        "{NAME}: FAIL — took {elapsed:.1} s (limit 60 s)"
    );
    pass(NAME, format!("1000 fuzzed trajectories, {elapsed:.1} s"));
}

/// c5 — Statistics oracles: the normal-approximation Wilcoxon p stays
/// within 0.03 of exact enumeration over 1000 fuzz cases (continuous
/// differences, 7 ≤ m ≤ 12), the Friedman closed form yields exactly 6.0
/// on the consistent 3×3 ranking and 0 on an all-tied matrix, and Holm
/// reproduces [0.03, 0.04, 0.04].
#[test]
fn c5_statistics_oracles_agree() {
    const NAME: &str = "c5 (statistics oracles)";
    let mut rng = seeded_stream(505, 0);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let m = rng.random_range(7..=WILCOXON_EXACT_LIMIT);
        let b: Vec<f64> = (0..m).map(|_| rng.random_range(-4.0..4.0)).collect();
        let a: Vec<f64> = b
            .iter()
            .map(|&v| {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                v + sign * (0.05 + rng.random::<f64>())
            })
            .collect();
        let exact = wilcoxon_signed_rank(&a, &b).unwrap();
        assert!(
            exact.exact && exact.effective_n == m,
            "{NAME}: FAIL — case {case}: expected exact enumeration at m = {m}"
        );
        let approx = wilcoxon_signed_rank_with_limit(&a, &b, 0).unwrap();
        let gap = (exact.p_value - approx.p_value).abs();
        worst = worst.max(gap);
        assert!(
            gap <= 0.03,
            "{NAME}: FAIL — case {case}: m={m} exact {} vs normal {} (gap {gap:.4})",
            exact.p_value,
            approx.p_value
        );
    }

    let consistent = ndarray::arr2(&[[1.0, 2.0, 3.0], [1.0, 2.0, 3.0], [1.0, 2.0, 3.0]]);
    let friedman = friedman_test(consistent.view()).unwrap();
    assert!(
        (friedman.statistic - 6.0).abs() < 1e-12,
        "{NAME}: FAIL — consistent 3×3 statistic {} ≠ 6.0",
        friedman.statistic
    );
    let tied = ndarray::arr2(&[[2.0, 2.0, 2.0], [2.0, 2.0, 2.0], [2.0, 2.0, 2.0]]);
    let tied_result = friedman_test(tied.view()).unwrap();
    assert!(
        tied_result.statistic == 0.0 && tied_result.p_value == 1.0,
        "{NAME}: FAIL — all-tied matrix gave statistic {}",
        tied_result.statistic
    );

    let holm = holm_adjust(&[0.01, 0.02, 0.04]).unwrap();
    for (got, want) in holm.iter().zip([0.03, 0.04, 0.04]) {
        assert!(
            (got - want).abs() < 1e-12,
            "{NAME}: FAIL — Holm gave {holm:?}, wanted [0.03, 0.04, 0.04]"
        );
    }
    pass(
        NAME,
        format!("1000 Wilcoxon cases (worst gap {worst:.4}), Friedman 6.0/0.0, Holm match"),
    );
}

/// Shared smoke-training setup: 300 episodes at d=10 with a 1000·d budget.
fn smoke_config(families: Vec<Family>, seed: u64) -> TrainConfig {
    TrainConfig {
        episodes: 300,
        families: Some(families),
        dims: vec![10],
        seed,
        checkpoint_every: 0,
        checkpoint_dir: None,
        ..TrainConfig::default()
    }
}

/// c6 — After 300 episodes on a sphere/rastrigin pool at d=10, the
/// trained greedy policy beats the median of uniformly random three-token
/// programs on at least 60% of 20 held-out instances, and mean reward
/// over episodes 251–300 exceeds episodes 1–50; all in under 20 minutes.
#[test]
fn c6_smoke_training_beats_random_programs() {
    const NAME: &str = "c6 (learning smoke test)";
    let start = Instant::now();
    let config = smoke_config(vec![Family::Sphere, Family::Rastrigin], 606);
    let outcome = train(&config).unwrap();

    let mean_reward = |lo: usize, hi: usize| {
        let rewards: Vec<f64> = outcome
            .records
            .iter()
            .filter(|r| !r.flagged && r.episode >= lo && r.episode <= hi)
            .map(|r| r.reward)
            .collect();
        assert!(
            !rewards.is_empty(),
            "{NAME}: FAIL — no clean episodes in {lo}..={hi}"
        );
        rewards.iter().sum::<f64>() / rewards.len() as f64
    };
    let early = mean_reward(1, 50);
    let late = mean_reward(251, 300);
    assert!(
        late > early,
        "{NAME}: FAIL — late mean reward {late:.4} ≤ early mean reward {early:.4}"
    );

    let rollout_config = RolloutConfig::from_train(&config, DecodeMode::Greedy);
    let mut wins = 0usize;
    for i in 0..20u64 {
        let family = if i % 2 == 0 {
            Family::Sphere
        } else {
            Family::Rastrigin
        };
        let spec = TaskSpec::new(family, 10, 9_000_000 + i, 0.0, 10_000);

        let mut env = spec.build();
        let mut rng = seeded_stream(616, i);
        let trained = rollout(&mut env, &outcome.params, &rollout_config, &mut rng)
            .unwrap()
            .f_final_best;

        // Five independent uniformly random three-token programs, each run
        // through the identical probe-then-execute pipeline.
        let mut random_finals = Vec::with_capacity(5);
        for r in 0..5u64 {
            let mut env = spec.build();
            let mut rng = seeded_stream(626, i * 100 + r);
            let (t_design, t_run) = split_budget(env.budget(), config.design_ratio);
            let design = design_phase(
                &mut env,
                config.population,
                DEFAULT_DE_F,
                DEFAULT_DE_CR,
                t_design,
                &mut rng,
            );
            let program = OperatorProgram::from_tokens(&random_tokens(&mut rng));
            let seed = rng.random::<u64>();
            let trace = execute_program(&mut env, design.state, &program, t_run, seed);
            random_finals.push(trace.final_best());
        }
        if trained <= median_of(&random_finals) {
            wins += 1;
        }
    }
    assert!(
        wins >= 12,
        "{NAME}: FAIL — trained policy won only {wins}/20 held-out instances (need ≥ 12)"
    );
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        elapsed < 1200.0,
        "{NAME}: FAIL — took {elapsed:.0} s (limit 1200 s)"
    );
    pass(
        NAME,
        format!(
            "wins {wins}/20, reward {early:.3} → {late:.3}, {elapsed:.0} s"
        ),
    );
}

/// c7 — The stock DE baseline collapses a noise-free sphere at d=10 by
/// three orders of magnitude within 10,000 evaluations (median of 20
/// seeds).
#[test]
fn c7_de_baseline_collapses_sphere() {
    const NAME: &str = "c7 (baseline sanity)";
    let mut ratios = Vec::with_capacity(20);
    for seed in 0..20u64 {
        let spec = TaskSpec::new(Family::Sphere, 10, 7_000 + seed, 0.0, 10_000);
        let mut env = spec.build();
        let mut rng = seeded_stream(707, seed);
        let trace = de_baseline(&mut env, 10_000, &mut rng);
        let initial = trace.h_best[0];
        let final_best = trace.final_best();
        assert!(
            initial > 0.0,
            "{NAME}: FAIL — seed {seed}: nonpositive initial best {initial}"
        );
        ratios.push(final_best / initial);
    }
    let median_ratio = median_of(&ratios);
    assert!(
        median_ratio <= 1e-3,
        "{NAME}: FAIL — median final/initial ratio {median_ratio:.3e} > 1e-3"
    );
    pass(NAME, format!("median reduction ratio {median_ratio:.3e}"));
}

/// c8 — Graph construction, encoder forward pass, and greedy decoding for
/// a 300-node graph at d=100 with hidden width 64 finish within 100 ms
/// single-threaded.
#[test]
fn c8_probe_to_program_overhead_is_small() {
    const NAME: &str = "c8 (overhead bound)";
    let mut rng = seeded_stream(808, 0);
    let (points, fitness) = random_trajectory(1500, 100, &mut rng);
    let config = GraphConfig::default();
    let params = PolicyParams::init(PolicyArch::with_hidden(64), &mut rng).unwrap();

    let run = |rng: &mut ChaCha8Rng| {
        let graph = build_graph(points.view(), &fitness, &config, rng).unwrap();
        assert_eq!(graph.len(), 300, "{NAME}: FAIL — expected the 300-node cap");
        let pass = forward(graph.h.view(), graph.a.view(), &params).unwrap();
        decode(&pass, DecodeMode::Greedy, rng)
    };
    // One untimed pass warms allocator and caches; the timed pass measures
    // the steady-state cost that recurs once per task.
    run(&mut rng);
    let start = Instant::now();
    let output = run(&mut rng);
    let elapsed = start.elapsed().as_secs_f64();
    assert_eq!(output.tokens.len(), PHASE_COUNT);
    assert!(
        elapsed < 0.100,
        "{NAME}: FAIL — probe-to-program path took {:.1} ms (limit 100 ms)",
        elapsed * 1e3
    );
    pass(NAME, format!("{:.1} ms for N=300, d=100, h=64", elapsed * 1e3));
}

/// c9 — After smoke training on a four-family pool (one family per
/// landscape class) with auxiliary weight 0.3, the auxiliary head
/// classifies 200 fresh design-phase graphs above 40% accuracy.
///
/// Known failure at this training horizon. The class signal is present in
/// the node features — a one-nearest-neighbor probe on six per-graph
/// summary statistics reaches ≈ 0.58 on the same graphs, and a single
/// threshold on the mean best-distance feature reaches ≈ 0.45 — but under
/// the fixed training settings (one-episode updates, learning rate 1e-3,
/// auxiliary weight 0.3, raw-scale distance features that saturate the
/// initial logits at ≈ ±20) the head spends the 300-episode budget
/// deflating those logits and settles on a near-constant prediction
/// (0.22–0.34 accuracy across seeds). Longer runs under the same mixed
/// objective oscillate around 0.2–0.44 without reliably clearing the bar,
/// and substituting different four-family pools reproduces the same
/// plateau. The threshold is kept as written rather than weakened; the
/// assertion message reports the measured value.
#[test]
fn c9_aux_head_learns_landscape_classes() {
    const NAME: &str = "c9 (aux-head learnability)";
    let families = vec![
        Family::Sphere,
        Family::Rastrigin,
        Family::HybridBlend,
        Family::CompositionBlend,
    ];
    let config = smoke_config(families.clone(), 909);
    assert_eq!(config.aux_weight, 0.3);
    let outcome = train(&config).unwrap();

    let mut rng = seeded_stream(919, 0);
    let mut correct = 0usize;
    for _ in 0..200 {
        let task = sample_task_filtered(&mut rng, &families, &config.dims, config.budget_per_dim);
        let mut env = task.build();
        let (t_design, _) = split_budget(env.budget(), config.design_ratio);
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
            &config.effective_graph(),
            &mut rng,
        )
        .unwrap();
        let pass = forward(graph.h.view(), graph.a.view(), &outcome.params).unwrap();
        if pass.aux_prediction() == task.label.index() {
            correct += 1;
        }
    }
    let accuracy = correct as f64 / 200.0;
    assert!(
        accuracy > 0.40,
        "{NAME}: FAIL — aux accuracy {accuracy:.3} ≤ 0.40 on 200 fresh graphs"
    );
    pass(NAME, format!("aux accuracy {accuracy:.3} on 200 fresh graphs"));
}
