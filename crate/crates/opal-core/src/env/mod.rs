//! Black-box evaluation environments with budget accounting, trajectory
//! recording, and the seeded task generator.
//!
//! An [`Environment`] owns one objective, counts every function evaluation,
//! and records the full `(point, fitness)` trajectory that later feeds the
//! landscape graph. Budget discipline follows a batch-overshoot rule: loops
//! stop *issuing* work once their budget is spent, but an in-flight operator
//! batch may finish, so totals land within one batch of the nominal budget.
//! [`Environment::try_evaluate`] enforces the hard cap for callers that must
//! not overshoot.

mod functions;
mod task;

pub use functions::{BaseFn, CompositionComponent, NnWeights, ObjectiveKind};
pub use task::{
    sample_task, sample_task_filtered, seeded_stream, Family, LandscapeLabel, TaskPool, TaskSpec,
    DEFAULT_BUDGET_PER_DIM, GENERATOR_DIMS,
};

use ndarray::{Array1, Array2, ArrayView2};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CoreError, Result};

/// Half-width of the fixed search domain `[-100, 100]^d`.
pub const DOMAIN_HALF_WIDTH: f64 = 100.0;

/// Replacement value for non-finite objective outputs.
pub const NON_FINITE_PENALTY: f64 = 1e100;

/// The callable objective owned by an environment.
pub enum Objective {
    /// `kind(rotation * (x - shift))`, the generated-task form.
    Affine {
        /// Orthonormal rotation applied after the shift.
        rotation: Array2<f64>,
        /// Optimum-relocation shift.
        shift: Array1<f64>,
        /// Base objective evaluated in rotated coordinates.
        kind: ObjectiveKind,
    },
    /// An arbitrary closure, for tests and custom landscapes.
    Custom(Box<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl Objective {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Objective::Affine {
                rotation,
                shift,
                kind,
            } => {
                let centered = Array1::from_iter(x.iter().zip(shift.iter()).map(|(a, s)| a - s));
                let z = rotation.dot(&centered);
                kind.eval(z.as_slice().expect("contiguous"))
            }
            Objective::Custom(f) => f(x),
        }
    }
}

impl std::fmt::Debug for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Objective::Affine { kind, .. } => f.debug_struct("Affine").field("kind", kind).finish(),
            Objective::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// A budgeted black-box minimization instance.
///
/// Every call to [`Environment::evaluate`] increments the counter and appends
/// to the trajectory, so `trajectory_len() == evals_used()` always holds.
#[derive(Debug)]
pub struct Environment {
    dim: usize,
    lower: Array1<f64>,
    upper: Array1<f64>,
    budget: usize,
    evals_used: usize,
    objective: Objective,
    noise_sigma: f64,
    known_shift: Option<f64>,
    noise_rng: ChaCha8Rng,
    non_finite_evals: usize,
    // Flat row-major trajectory points (evals_used x dim) and fitnesses.
    traj_points: Vec<f64>,
    traj_fitness: Vec<f64>,
}

impl Environment {
    /// Creates an environment on the fixed domain `[-100, 100]^dim`.
    pub fn new(
        dim: usize,
        budget: usize,
        objective: Objective,
        noise_sigma: f64,
        known_shift: Option<f64>,
        noise_rng: ChaCha8Rng,
    ) -> Environment {
        assert!(dim > 0, "dimension must be positive");
        Environment {
            dim,
            lower: Array1::from_elem(dim, -DOMAIN_HALF_WIDTH),
            upper: Array1::from_elem(dim, DOMAIN_HALF_WIDTH),
            budget,
            evals_used: 0,
            objective,
            noise_sigma,
            known_shift,
            noise_rng,
            non_finite_evals: 0,
            traj_points: Vec::new(),
            traj_fitness: Vec::new(),
        }
    }

    /// Test/benchmark constructor wrapping a plain closure, noise-free.
    pub fn from_closure<F>(dim: usize, budget: usize, f: F) -> Environment
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        use rand::SeedableRng;
        Environment::new(
            dim,
            budget,
            Objective::Custom(Box::new(f)),
            0.0,
            None,
            ChaCha8Rng::seed_from_u64(0),
        )
    }

    /// Search-space dimensionality.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Per-coordinate lower bounds.
    pub fn lower(&self) -> &Array1<f64> {
        &self.lower
    }

    /// Per-coordinate upper bounds.
    pub fn upper(&self) -> &Array1<f64> {
        &self.upper
    }

    /// Per-coordinate domain widths.
    pub fn range(&self) -> Array1<f64> {
        &self.upper - &self.lower
    }

    /// Total evaluation budget.
    pub fn budget(&self) -> usize {
        self.budget
    }

    /// Evaluations consumed so far.
    pub fn evals_used(&self) -> usize {
        self.evals_used
    }

    /// Budget still available (saturating at zero during overshoot).
    pub fn remaining(&self) -> usize {
        self.budget.saturating_sub(self.evals_used)
    }

    /// Optimum-value offset making the shifted objective nonnegative, when
    /// the construction provides one.
    pub fn known_shift(&self) -> Option<f64> {
        self.known_shift
    }

    /// Standard deviation of additive evaluation noise.
    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    /// Number of evaluations whose raw objective value was non-finite and
    /// was replaced by [`NON_FINITE_PENALTY`].
    pub fn non_finite_evals(&self) -> usize {
        self.non_finite_evals
    }

    /// Evaluates `x`, counting one evaluation and recording it in the
    /// trajectory. Non-finite objective values are replaced by
    /// [`NON_FINITE_PENALTY`] and flagged. Callers are expected to clip `x`
    /// into the domain first. This permissive form supports the
    /// batch-overshoot rule; use [`Environment::try_evaluate`] to enforce the
    /// hard budget.
    pub fn evaluate(&mut self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim, "point dimension mismatch");
        let mut f = self.objective.eval(x);
        if !f.is_finite() {
            f = NON_FINITE_PENALTY;
            self.non_finite_evals += 1;
        }
        if self.noise_sigma > 0.0 {
            let n: f64 = StandardNormal.sample(&mut self.noise_rng);
            f += self.noise_sigma * n;
        }
        self.evals_used += 1;
        self.traj_points.extend_from_slice(x);
        self.traj_fitness.push(f);
        f
    }

    /// Budget-checked evaluation: errors once the budget is exhausted.
    pub fn try_evaluate(&mut self, x: &[f64]) -> Result<f64> {
        if self.evals_used >= self.budget {
            return Err(CoreError::BudgetExhausted {
                used: self.evals_used,
                budget: self.budget,
            });
        }
        Ok(self.evaluate(x))
    }

    /// Number of recorded trajectory entries (equals [`Self::evals_used`]).
    pub fn trajectory_len(&self) -> usize {
        self.traj_fitness.len()
    }

    /// View of all evaluated points, one row per evaluation in time order.
    pub fn trajectory_points(&self) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((self.traj_fitness.len(), self.dim), &self.traj_points)
            .expect("trajectory buffer is rectangular")
    }

    /// All recorded fitness values in evaluation order.
    pub fn trajectory_fitness(&self) -> &[f64] {
        &self.traj_fitness
    }

    /// Index and fitness of the best (lowest) evaluation so far.
    pub fn best(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &f) in self.traj_fitness.iter().enumerate() {
            if best.map_or(true, |(_, bf)| f < bf) {
                best = Some((i, f));
            }
        }
        best
    }

    /// Clips a point into the domain, coordinate-wise, in place.
    pub fn clip_in_place(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn sphere_env(budget: usize) -> Environment {
        Environment::from_closure(3, budget, |x| x.iter().map(|v| v * v).sum())
    }

    #[test]
    fn sphere_task_optimum_is_zero() {
        // Untransformed sphere: zero vector, no noise.
        let mut env = Environment::from_closure(10, 100, |x| x.iter().map(|v| v * v).sum());
        assert_eq!(env.evaluate(&[0.0; 10]), 0.0);
    }

    #[test]
    fn evaluation_counts_and_trajectory_grow_together() {
        let mut env = sphere_env(10);
        for i in 0..5 {
            env.evaluate(&[i as f64, 0.0, 0.0]);
            assert_eq!(env.evals_used(), i + 1);
            assert_eq!(env.trajectory_len(), i + 1);
        }
        assert_eq!(env.remaining(), 5);
        assert_eq!(env.trajectory_points().nrows(), 5);
    }

    #[test]
    fn try_evaluate_signals_exhaustion() {
        let mut env = sphere_env(2);
        env.try_evaluate(&[1.0, 0.0, 0.0]).unwrap();
        env.try_evaluate(&[2.0, 0.0, 0.0]).unwrap();
        let err = env.try_evaluate(&[3.0, 0.0, 0.0]).unwrap_err();
        assert!(matches!(
            err,
            CoreError::BudgetExhausted {
                used: 2,
                budget: 2
            }
        ));
        // The permissive form still works (overshoot explicitly permitted).
        env.evaluate(&[3.0, 0.0, 0.0]);
        assert_eq!(env.evals_used(), 3);
    }

    #[test]
    fn non_finite_values_are_replaced_and_flagged() {
        let mut env = Environment::from_closure(1, 10, |x| {
            if x[0] > 0.0 {
                f64::NAN
            } else {
                x[0]
            }
        });
        assert_eq!(env.evaluate(&[1.0]), NON_FINITE_PENALTY);
        assert_eq!(env.evaluate(&[-1.0]), -1.0);
        assert_eq!(env.non_finite_evals(), 1);
    }

    #[test]
    fn noise_free_evaluation_is_deterministic() {
        let spec = TaskSpec::new(Family::Ackley, 10, 31, 0.0, 1000);
        let mut a = spec.build();
        let mut b = spec.build();
        let x = [5.0; 10];
        for _ in 0..3 {
            assert_eq!(a.evaluate(&x), b.evaluate(&x));
        }
    }

    #[test]
    fn noisy_evaluation_streams_are_reproducible() {
        let spec = TaskSpec::new(Family::Sphere, 10, 8, 0.5, 1000);
        let mut a = spec.build();
        let mut b = spec.build();
        let x = [1.0; 10];
        // Same seed, same stream: identical noisy values in sequence.
        for _ in 0..5 {
            assert_eq!(a.evaluate(&x), b.evaluate(&x));
        }
        // And the noise actually perturbs the clean value.
        let clean = spec.with_noise(0.0).build().evaluate(&x);
        let mut c = TaskSpec::new(Family::Sphere, 10, 8, 0.5, 1000).build();
        assert_ne!(c.evaluate(&x), clean);
    }

    #[test]
    fn best_tracks_the_running_minimum() {
        let mut env = sphere_env(10);
        env.evaluate(&[2.0, 0.0, 0.0]);
        env.evaluate(&[1.0, 0.0, 0.0]);
        env.evaluate(&[3.0, 0.0, 0.0]);
        assert_eq!(env.best(), Some((1, 1.0)));
    }

    #[test]
    fn clip_respects_domain() {
        let env = sphere_env(1);
        let mut x = [150.0, -250.0, 0.5];
        env.clip_in_place(&mut x);
        assert_eq!(x, [100.0, -100.0, 0.5]);
    }

    #[test]
    fn known_shift_bounds_generated_tasks() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..30 {
            let spec = sample_task(&mut rng, TaskPool::Mixed).with_noise(0.0);
            let mut env = spec.build();
            let shift = env.known_shift().expect("synthetic tasks have a shift");
            for _ in 0..20 {
                use rand::Rng;
                let x: Vec<f64> = (0..spec.dim).map(|_| rng.random_range(-100.0..100.0)).collect();
                assert!(env.evaluate(&x) >= shift, "{spec:?}");
            }
        }
    }
}
