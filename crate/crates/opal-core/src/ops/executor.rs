//! Budget-accounted cyclic program execution.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::env::Environment;
use crate::error::Result;

use super::{apply_operator, OperatorProgram, PopulationState};

/// The convergence trace of one executed run.
#[derive(Debug, Clone)]
pub struct RunTrace {
    /// Best-so-far fitness after each operator application; entry 0 is the
    /// starting best. Nonincreasing.
    pub h_best: Vec<f64>,
    /// Cumulative evaluations charged after each application; entry 0 is 0.
    /// Strictly increasing past the first entry.
    pub h_fe: Vec<usize>,
    /// Population state after the final application.
    pub final_state: PopulationState,
}

impl RunTrace {
    /// Best fitness reached by the run.
    pub fn final_best(&self) -> f64 {
        *self.h_best.last().expect("traces are never empty")
    }

    /// Total evaluations charged against the run budget.
    pub fn total_fes(&self) -> usize {
        *self.h_fe.last().expect("traces are never empty")
    }

    /// Renders the trace as two-column CSV (`fe,best`).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fe,best\n");
        for (fe, best) in self.h_fe.iter().zip(&self.h_best) {
            out.push_str(&format!("{fe},{best}\n"));
        }
        out
    }

    /// Writes [`RunTrace::to_csv`] to a file.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

/// Runs `program` cyclically from `state` until at least `t_run` evaluations
/// have been charged, then returns the trace.
///
/// Each loop iteration applies the next call (wrapping at the end of the
/// program), adds its reported cost, and appends to the trace. The loop exits
/// once the accumulated cost reaches `t_run` — the final batch may overshoot
/// by less than one call's cost — or immediately if an application reports
/// zero cost (the environment ran dry). An empty program returns the starting
/// best with zero charged evaluations.
pub fn execute_program(
    env: &mut Environment,
    mut state: PopulationState,
    program: &OperatorProgram,
    t_run: usize,
    seed: u64,
) -> RunTrace {
    let mut h_best = vec![state.best_fitness()];
    let mut h_fe = vec![0usize];
    if program.is_empty() {
        return RunTrace {
            h_best,
            h_fe,
            final_state: state,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t_used = 0usize;
    let mut i = 0usize;
    while t_used < t_run {
        let call = &program.calls[i % program.len()];
        let cost = apply_operator(call, &mut state, env, &mut rng);
        if cost == 0 {
            // Environment exhausted (or a degenerate zero-work call): no
            // further progress is possible.
            break;
        }
        t_used += cost;
        let best = h_best.last().copied().unwrap_or(f64::INFINITY);
        h_best.push(best.min(state.best_fitness()));
        h_fe.push(t_used);
        i += 1;
    }
    RunTrace {
        h_best,
        h_fe,
        final_state: state,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{OperatorCall, OperatorToken, DEFAULT_POPULATION};
    use rand::SeedableRng;

    fn sphere_env(dim: usize, budget: usize) -> Environment {
        Environment::from_closure(dim, budget, |x| x.iter().map(|v| v * v).sum())
    }

    fn init_state(env: &mut Environment, p: usize, seed: u64) -> PopulationState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PopulationState::init_uniform(env, p, &mut rng)
    }

    #[test]
    fn empty_program_returns_the_starting_best() {
        let mut env = sphere_env(3, 1000);
        let state = init_state(&mut env, 10, 1);
        let best = state.best_fitness();
        let trace = execute_program(&mut env, state, &OperatorProgram::default(), 500, 0);
        assert_eq!(trace.h_best, vec![best]);
        assert_eq!(trace.h_fe, vec![0]);
        assert_eq!(env.evals_used(), 10);
    }

    #[test]
    fn restart_only_program_overshoots_by_less_than_one_call() {
        // restart(q = 0.2) with P = 50 costs 10 per call; T_run = 25 needs
        // 3 calls and charges 30.
        let mut env = sphere_env(3, 100_000);
        let state = init_state(&mut env, DEFAULT_POPULATION, 2);
        let program = OperatorProgram {
            calls: vec![OperatorCall::with_defaults(
                OperatorToken::RestartWorstFraction,
            )],
        };
        let trace = execute_program(&mut env, state, &program, 25, 7);
        assert_eq!(trace.total_fes(), 30);
        assert_eq!(trace.h_fe, vec![0, 10, 20, 30]);
    }

    #[test]
    fn traces_are_monotone() {
        let mut env = sphere_env(5, 100_000);
        let state = init_state(&mut env, 20, 3);
        let program = OperatorProgram::from_tokens(&[
            OperatorToken::DeRand1Bin,
            OperatorToken::RestartWorstFraction,
            OperatorToken::PsoGlobalStep,
        ]);
        let trace = execute_program(&mut env, state, &program, 500, 11);
        for w in trace.h_best.windows(2) {
            assert!(w[1] <= w[0], "best-so-far must be nonincreasing");
        }
        for w in trace.h_fe.windows(2) {
            assert!(w[1] > w[0], "charged evaluations must strictly increase");
        }
    }

    #[test]
    fn execution_is_deterministic_in_the_seed() {
        let program = OperatorProgram::from_tokens(&[
            OperatorToken::DeBest1Bin,
            OperatorToken::GaussianMutationSelf,
        ]);
        let run = |seed| {
            let mut env = sphere_env(4, 100_000);
            let state = init_state(&mut env, 15, 5);
            execute_program(&mut env, state, &program, 400, seed)
        };
        let a = run(9);
        let b = run(9);
        let c = run(10);
        assert_eq!(a.h_best, b.h_best);
        assert_eq!(a.h_fe, b.h_fe);
        assert_ne!(a.h_best, c.h_best);
    }

    #[test]
    fn executor_stops_when_the_environment_runs_dry() {
        let mut env = sphere_env(3, 60);
        let state = init_state(&mut env, 10, 4);
        // 50 evaluations remain but T_run asks for 500.
        let program = OperatorProgram::from_tokens(&[OperatorToken::DeRand1Bin]);
        let trace = execute_program(&mut env, state, &program, 500, 1);
        assert_eq!(trace.total_fes(), 50);
        assert_eq!(env.remaining(), 0);
    }

    #[test]
    fn trace_csv_has_two_columns() {
        let mut env = sphere_env(3, 1000);
        let state = init_state(&mut env, 10, 6);
        let program = OperatorProgram::from_tokens(&[OperatorToken::GaussianMutationBest]);
        let trace = execute_program(&mut env, state, &program, 20, 2);
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("fe,best"));
        for line in lines {
            assert_eq!(line.split(',').count(), 2);
        }
    }
}
