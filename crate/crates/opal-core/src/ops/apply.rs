//! The eight population operators.
//!
//! Every operator clips candidates into the domain before evaluating them,
//! stops issuing evaluations once the environment budget is exhausted, and
//! returns the number of evaluations it actually performed. A call made with
//! zero remaining budget performs no work and returns zero cost.

use ndarray::Array1;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::env::Environment;

use super::{OperatorCall, OperatorToken, PopulationState, DEFAULT_DE_CR, DEFAULT_DE_F};

/// Applies one operator call to the population, returning its
/// function-evaluation cost.
///
/// Advertised costs with ample budget (population `P`, dimension `d`):
/// `P` for the DE moves, the PSO step, and the self Gaussian mutation;
/// `2 * floor(q_pair * P / 2)` for pair crossover; `n_samp` (default `P`)
/// for the best-centered Gaussian mutation; `ceil(q_restart * P)` for the
/// restart; and `2 d` for the axis search. Near exhaustion the batch is cut
/// short so the environment's total budget is never exceeded.
pub fn apply_operator(
    call: &OperatorCall,
    state: &mut PopulationState,
    env: &mut Environment,
    rng: &mut impl Rng,
) -> usize {
    if env.remaining() == 0 {
        return 0;
    }
    let used = match call.token {
        OperatorToken::DeRand1Bin => de_generation(
            state,
            env,
            rng,
            call.theta_or("F", DEFAULT_DE_F),
            call.theta_or("CR", DEFAULT_DE_CR),
            DonorStrategy::Rand1,
            true,
        ),
        OperatorToken::DeBest1Bin => de_generation(
            state,
            env,
            rng,
            call.theta_or("F", DEFAULT_DE_F),
            call.theta_or("CR", DEFAULT_DE_CR),
            DonorStrategy::Best1,
            true,
        ),
        OperatorToken::UniformCrossoverPairs => {
            uniform_crossover_pairs(state, env, rng, call.theta_or("q_pair", 0.5))
        }
        OperatorToken::PsoGlobalStep => pso_global_step(
            state,
            env,
            rng,
            call.theta_or("w", 0.7),
            call.theta_or("c1", 1.5),
            call.theta_or("c2", 1.5),
            call.theta_or("v_max_frac", 0.2),
        ),
        OperatorToken::GaussianMutationSelf => {
            gaussian_mutation_self(state, env, rng, call.theta_or("sigma", 0.1))
        }
        OperatorToken::GaussianMutationBest => {
            let n_samp = call
                .theta_or("n_samp", state.len() as f64)
                .round()
                .max(0.0) as usize;
            gaussian_mutation_best(state, env, rng, call.theta_or("sigma", 0.05), n_samp)
        }
        OperatorToken::RestartWorstFraction => {
            restart_worst_fraction(state, env, rng, call.theta_or("q_restart", 0.2))
        }
        OperatorToken::LocalSearchBestAxis => {
            local_search_best_axis(state, env, call.theta_or("delta", 0.01))
        }
    };
    state.recompute_best();
    used
}

/// Donor construction for the DE generation.
#[derive(Clone, Copy, PartialEq)]
pub(crate) enum DonorStrategy {
    /// `x_r1 + F (x_r2 - x_r3)` with r1, r2, r3 distinct and != target.
    Rand1,
    /// `x_best + F (x_r1 - x_r2)` with r1, r2 distinct and != target.
    Best1,
}

/// Draws `count` indices in `0..p`, distinct from each other and from
/// `exclude`, by rejection; duplicates are tolerated only when the
/// population is too small for distinctness.
fn draw_distinct(rng: &mut impl Rng, p: usize, exclude: usize, count: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(count);
    let relax = p <= count + 1;
    while out.len() < count {
        let idx = rng.random_range(0..p);
        if !relax && (idx == exclude || out.contains(&idx)) {
            continue;
        }
        out.push(idx);
    }
    out
}

/// One synchronous DE generation with binomial crossover and greedy
/// selection (ties keep the incumbent). Donors read the generation-start
/// population. `cap` stops the batch when the environment runs dry; probes
/// and baselines disable it to run whole generations under the
/// batch-overshoot rule.
pub(crate) fn de_generation(
    state: &mut PopulationState,
    env: &mut Environment,
    rng: &mut impl Rng,
    f: f64,
    cr: f64,
    strategy: DonorStrategy,
    cap: bool,
) -> usize {
    let p = state.len();
    let d = env.dim();
    let snapshot = state.x.clone();
    let best_row = snapshot.row(state.best_index).to_owned();
    let mut child = Array1::zeros(d);
    let mut used = 0;
    for i in 0..p {
        if cap && env.remaining() == 0 {
            break;
        }
        let donor: Array1<f64> = match strategy {
            DonorStrategy::Rand1 => {
                let r = draw_distinct(rng, p, i, 3);
                &snapshot.row(r[0])
                    + &(f * (&snapshot.row(r[1]).to_owned() - &snapshot.row(r[2])))
            }
            DonorStrategy::Best1 => {
                let r = draw_distinct(rng, p, i, 2);
                &best_row + &(f * (&snapshot.row(r[0]).to_owned() - &snapshot.row(r[1])))
            }
        };
        let j_rand = rng.random_range(0..d);
        for j in 0..d {
            child[j] = if j == j_rand || rng.random::<f64>() < cr {
                donor[j]
            } else {
                snapshot[[i, j]]
            };
        }
        env.clip_in_place(child.as_slice_mut().expect("contiguous"));
        let fc = env.evaluate(child.as_slice().expect("contiguous"));
        used += 1;
        if fc < state.fitness[i] {
            state.x.row_mut(i).assign(&child);
            state.fitness[i] = fc;
        }
    }
    state.recompute_best();
    used
}

fn uniform_crossover_pairs(
    state: &mut PopulationState,
    env: &mut Environment,
    rng: &mut impl Rng,
    q_pair: f64,
) -> usize {
    let p = state.len();
    let d = state.x.ncols();
    let pairs = (q_pair.clamp(0.0, 1.0) * p as f64 / 2.0).floor() as usize;
    if pairs == 0 {
        return 0;
    }
    let chosen = rand::seq::index::sample(rng, p, 2 * pairs).into_vec();
    let mut used = 0;
    for k in 0..pairs {
        let (a, b) = (chosen[2 * k], chosen[2 * k + 1]);
        let mut child_a = Array1::zeros(d);
        let mut child_b = Array1::zeros(d);
        for j in 0..d {
            let swap = rng.random::<f64>() < 0.5;
            let (pa, pb) = (state.x[[a, j]], state.x[[b, j]]);
            child_a[j] = if swap { pb } else { pa };
            child_b[j] = if swap { pa } else { pb };
        }
        for (idx, child) in [(a, &mut child_a), (b, &mut child_b)] {
            if env.remaining() == 0 {
                return used;
            }
            env.clip_in_place(child.as_slice_mut().expect("contiguous"));
            let fc = env.evaluate(child.as_slice().expect("contiguous"));
            used += 1;
            if fc < state.fitness[idx] {
                state.x.row_mut(idx).assign(child);
                state.fitness[idx] = fc;
            }
        }
    }
    used
}

fn pso_global_step(
    state: &mut PopulationState,
    env: &mut Environment,
    rng: &mut impl Rng,
    w: f64,
    c1: f64,
    c2: f64,
    v_max_frac: f64,
) -> usize {
    state.ensure_swarm_state();
    let p = state.len();
    let d = state.x.ncols();
    let vmax = env.range() * v_max_frac;
    // Global best over personal bests, fixed for this step.
    let gbest = {
        let pf = state.pbest_f.as_ref().expect("swarm state");
        let mut gi = 0;
        for i in 1..p {
            if pf[i] < pf[gi] {
                gi = i;
            }
        }
        state.pbest_x.as_ref().expect("swarm state").row(gi).to_owned()
    };
    let mut used = 0;
    for i in 0..p {
        if env.remaining() == 0 {
            break;
        }
        let mut new_x = Array1::zeros(d);
        {
            let v = state.velocities.as_mut().expect("swarm state");
            let pbx = state.pbest_x.as_ref().expect("swarm state");
            for j in 0..d {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let vel = w * v[[i, j]]
                    + c1 * r1 * (pbx[[i, j]] - state.x[[i, j]])
                    + c2 * r2 * (gbest[j] - state.x[[i, j]]);
                v[[i, j]] = vel.clamp(-vmax[j], vmax[j]);
                new_x[j] = state.x[[i, j]] + v[[i, j]];
            }
        }
        env.clip_in_place(new_x.as_slice_mut().expect("contiguous"));
        let fc = env.evaluate(new_x.as_slice().expect("contiguous"));
        used += 1;
        state.x.row_mut(i).assign(&new_x);
        state.fitness[i] = fc;
        let pbf = state.pbest_f.as_mut().expect("swarm state");
        if fc < pbf[i] {
            pbf[i] = fc;
            state.pbest_x.as_mut().expect("swarm state").row_mut(i).assign(&new_x);
        }
    }
    used
}

fn gaussian_mutation_self(
    state: &mut PopulationState,
    env: &mut Environment,
    rng: &mut impl Rng,
    sigma: f64,
) -> usize {
    let p = state.len();
    let d = state.x.ncols();
    let range = env.range();
    let mut used = 0;
    for i in 0..p {
        if env.remaining() == 0 {
            break;
        }
        let mut y = Array1::zeros(d);
        for j in 0..d {
            let n: f64 = rng.sample(StandardNormal);
            y[j] = state.x[[i, j]] + sigma * range[j] * n;
        }
        env.clip_in_place(y.as_slice_mut().expect("contiguous"));
        let fc = env.evaluate(y.as_slice().expect("contiguous"));
        used += 1;
        if fc < state.fitness[i] {
            state.x.row_mut(i).assign(&y);
            state.fitness[i] = fc;
        }
    }
    used
}

fn gaussian_mutation_best(
    state: &mut PopulationState,
    env: &mut Environment,
    rng: &mut impl Rng,
    sigma: f64,
    n_samp: usize,
) -> usize {
    let d = state.x.ncols();
    let range = env.range();
    let center = state.best_point();
    let mut used = 0;
    for _ in 0..n_samp {
        if env.remaining() == 0 {
            break;
        }
        let mut y = Array1::zeros(d);
        for j in 0..d {
            let n: f64 = rng.sample(StandardNormal);
            y[j] = center[j] + sigma * range[j] * n;
        }
        env.clip_in_place(y.as_slice_mut().expect("contiguous"));
        let fc = env.evaluate(y.as_slice().expect("contiguous"));
        used += 1;
        let worst = state.worst_index();
        if fc < state.fitness[worst] {
            state.x.row_mut(worst).assign(&y);
            state.fitness[worst] = fc;
        }
    }
    used
}

fn restart_worst_fraction(
    state: &mut PopulationState,
    env: &mut Environment,
    rng: &mut impl Rng,
    q_restart: f64,
) -> usize {
    let p = state.len();
    let d = state.x.ncols();
    let count = ((q_restart.clamp(0.0, 1.0) * p as f64).ceil() as usize).min(p);
    // Stable ascending sort by fitness; the tail is the worst `count`
    // (higher original index restarts first among exact ties).
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| state.fitness[a].total_cmp(&state.fitness[b]));
    let lower = env.lower().clone();
    let upper = env.upper().clone();
    let mut used = 0;
    for &idx in order.iter().rev().take(count) {
        if env.remaining() == 0 {
            break;
        }
        let mut y = Array1::zeros(d);
        for j in 0..d {
            y[j] = rng.random_range(lower[j]..upper[j]);
        }
        let fc = env.evaluate(y.as_slice().expect("contiguous"));
        used += 1;
        state.x.row_mut(idx).assign(&y);
        state.fitness[idx] = fc;
    }
    used
}

fn local_search_best_axis(
    state: &mut PopulationState,
    env: &mut Environment,
    delta: f64,
) -> usize {
    let d = state.x.ncols();
    let range = env.range();
    let bi = state.best_index;
    let mut best = state.x.row(bi).to_owned();
    let mut f_best = state.fitness[bi];
    let mut used = 0;
    for axis in 0..d {
        // One probe pair per axis; accept the first strict improvement.
        let mut probe_values = [f64::INFINITY; 2];
        let mut probe_points: [Option<Array1<f64>>; 2] = [None, None];
        for (slot, sign) in [(0usize, 1.0), (1usize, -1.0)] {
            if env.remaining() == 0 {
                break;
            }
            let mut y = best.clone();
            y[axis] += sign * delta * range[axis];
            env.clip_in_place(y.as_slice_mut().expect("contiguous"));
            probe_values[slot] = env.evaluate(y.as_slice().expect("contiguous"));
            probe_points[slot] = Some(y);
            used += 1;
        }
        for slot in 0..2 {
            if probe_values[slot] < f_best {
                best = probe_points[slot].take().expect("evaluated probe");
                f_best = probe_values[slot];
                break;
            }
        }
        if env.remaining() == 0 {
            break;
        }
    }
    state.x.row_mut(bi).assign(&best);
    state.fitness[bi] = f_best;
    used
}
