//! The design-phase probe and the standalone baseline optimizers.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::env::Environment;

use super::apply::{de_generation, DonorStrategy};
use super::{PopulationState, RunTrace, DEFAULT_POPULATION};

/// Output of the design-phase probe.
#[derive(Debug)]
pub struct DesignResult {
    /// Population at the end of the probe, the executor's starting state.
    pub state: PopulationState,
    /// Best fitness seen during the probe.
    pub f_design_best: f64,
    /// Evaluations the probe consumed.
    pub fes_used: usize,
}

/// Runs the fixed exploration probe: a uniform initial population of `p`
/// points followed by DE/rand/1/bin generations until at least `t_design`
/// evaluations are spent (the final generation may overshoot by less than
/// one batch).
pub fn design_phase(
    env: &mut Environment,
    p: usize,
    f: f64,
    cr: f64,
    t_design: usize,
    rng: &mut ChaCha8Rng,
) -> DesignResult {
    let start = env.evals_used();
    let mut state = PopulationState::init_uniform(env, p, rng);
    while env.evals_used() - start < t_design {
        de_generation(&mut state, env, rng, f, cr, DonorStrategy::Rand1, false);
    }
    let f_design_best = state.best_fitness();
    DesignResult {
        state,
        f_design_best,
        fes_used: env.evals_used() - start,
    }
}

/// Full-budget DE/rand/1/bin baseline: the same algorithm as the design
/// phase, run until at least `t` evaluations are spent. Records one trace
/// entry per generation.
pub fn de_baseline(env: &mut Environment, t: usize, rng: &mut ChaCha8Rng) -> RunTrace {
    de_baseline_with(env, t, DEFAULT_POPULATION, 0.7, 0.9, rng)
}

/// [`de_baseline`] with explicit population and control parameters.
pub fn de_baseline_with(
    env: &mut Environment,
    t: usize,
    p: usize,
    f: f64,
    cr: f64,
    rng: &mut ChaCha8Rng,
) -> RunTrace {
    let start = env.evals_used();
    let mut state = PopulationState::init_uniform(env, p, rng);
    let mut h_best = vec![state.best_fitness()];
    let mut h_fe = vec![env.evals_used() - start];
    while env.evals_used() - start < t {
        de_generation(&mut state, env, rng, f, cr, DonorStrategy::Rand1, false);
        let best = h_best.last().copied().unwrap_or(f64::INFINITY);
        h_best.push(best.min(state.best_fitness()));
        h_fe.push(env.evals_used() - start);
    }
    RunTrace {
        h_best,
        h_fe,
        final_state: state,
    }
}

/// Standalone global-best PSO baseline with linearly decaying inertia.
///
/// Population 50, acceleration `c1 = c2 = 2.0`, velocities clamped to
/// 20% of the domain range per coordinate, inertia decaying linearly from
/// 0.9 at zero evaluations to 0.4 at `t`. One trace entry per swarm step.
pub fn pso_baseline(env: &mut Environment, t: usize, rng: &mut ChaCha8Rng) -> RunTrace {
    const C1: f64 = 2.0;
    const C2: f64 = 2.0;
    const V_MAX_FRAC: f64 = 0.2;
    let p = DEFAULT_POPULATION;
    let d = env.dim();
    let start = env.evals_used();
    let mut state = PopulationState::init_uniform(env, p, rng);
    state.ensure_swarm_state();
    let vmax = env.range() * V_MAX_FRAC;
    let mut h_best = vec![state.best_fitness()];
    let mut h_fe = vec![env.evals_used() - start];
    while env.evals_used() - start < t {
        let used = env.evals_used() - start;
        let w = pso_inertia(used, t);
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
        for i in 0..p {
            let mut new_x = ndarray::Array1::zeros(d);
            {
                let v = state.velocities.as_mut().expect("swarm state");
                let pbx = state.pbest_x.as_ref().expect("swarm state");
                for j in 0..d {
                    let r1: f64 = rng.random();
                    let r2: f64 = rng.random();
                    let vel = w * v[[i, j]]
                        + C1 * r1 * (pbx[[i, j]] - state.x[[i, j]])
                        + C2 * r2 * (gbest[j] - state.x[[i, j]]);
                    v[[i, j]] = vel.clamp(-vmax[j], vmax[j]);
                    new_x[j] = state.x[[i, j]] + v[[i, j]];
                }
            }
            env.clip_in_place(new_x.as_slice_mut().expect("contiguous"));
            let fc = env.evaluate(new_x.as_slice().expect("contiguous"));
            state.x.row_mut(i).assign(&new_x);
            state.fitness[i] = fc;
            let pbf = state.pbest_f.as_mut().expect("swarm state");
            if fc < pbf[i] {
                pbf[i] = fc;
                state
                    .pbest_x
                    .as_mut()
                    .expect("swarm state")
                    .row_mut(i)
                    .assign(&new_x);
            }
        }
        state.recompute_best();
        let best = h_best.last().copied().unwrap_or(f64::INFINITY);
        h_best.push(best.min(state.best_fitness()));
        h_fe.push(env.evals_used() - start);
    }
    RunTrace {
        h_best,
        h_fe,
        final_state: state,
    }
}

/// Linear inertia schedule: 0.9 at zero used evaluations, 0.4 at the full
/// budget, clamped below at 0.4 during overshoot.
pub fn pso_inertia(used: usize, t: usize) -> f64 {
    if t == 0 {
        return 0.4;
    }
    let frac = (used as f64 / t as f64).min(1.0);
    0.9 - 0.5 * frac
}
