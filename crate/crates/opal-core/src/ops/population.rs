//! The population state operators transform.

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::env::Environment;

/// A population of candidate solutions plus the optional swarm state lazily
/// created by the particle-swarm operator.
///
/// Invariants: `x.nrows() == fitness.len()`, `best_index` is the argmin of
/// `fitness` (lowest index on ties), and on noise-free tasks `fitness[i]`
/// equals the objective at `x.row(i)`.
#[derive(Debug, Clone)]
pub struct PopulationState {
    /// Candidate positions, one row per individual.
    pub x: Array2<f64>,
    /// Fitness of each individual.
    pub fitness: Array1<f64>,
    /// Particle velocities, created on first PSO step.
    pub velocities: Option<Array2<f64>>,
    /// Personal-best positions, created on first PSO step.
    pub pbest_x: Option<Array2<f64>>,
    /// Personal-best fitnesses, created on first PSO step.
    pub pbest_f: Option<Array1<f64>>,
    /// Index of the best individual.
    pub best_index: usize,
}

impl PopulationState {
    /// Draws `p` uniform points in the domain and evaluates them.
    pub fn init_uniform(env: &mut Environment, p: usize, rng: &mut impl Rng) -> PopulationState {
        assert!(p > 0, "population must be nonempty");
        let d = env.dim();
        let lower = env.lower().clone();
        let upper = env.upper().clone();
        let mut x = Array2::zeros((p, d));
        let mut fitness = Array1::zeros(p);
        for i in 0..p {
            for j in 0..d {
                x[[i, j]] = rng.random_range(lower[j]..upper[j]);
            }
            fitness[i] = env.evaluate(x.row(i).as_slice().expect("contiguous"));
        }
        let mut state = PopulationState {
            x,
            fitness,
            velocities: None,
            pbest_x: None,
            pbest_f: None,
            best_index: 0,
        };
        state.recompute_best();
        state
    }

    /// Number of individuals.
    pub fn len(&self) -> usize {
        self.fitness.len()
    }

    /// Whether the population is empty (never true for constructed states).
    pub fn is_empty(&self) -> bool {
        self.fitness.is_empty()
    }

    /// Recomputes `best_index` (argmin of fitness, lowest index on ties).
    pub fn recompute_best(&mut self) {
        let mut best = 0;
        for i in 1..self.fitness.len() {
            if self.fitness[i] < self.fitness[best] {
                best = i;
            }
        }
        self.best_index = best;
    }

    /// Fitness of the best individual.
    pub fn best_fitness(&self) -> f64 {
        self.fitness[self.best_index]
    }

    /// Position of the best individual.
    pub fn best_point(&self) -> Array1<f64> {
        self.x.row(self.best_index).to_owned()
    }

    /// Index of the worst individual (argmax of fitness, lowest index on
    /// ties).
    pub fn worst_index(&self) -> usize {
        let mut worst = 0;
        for i in 1..self.fitness.len() {
            if self.fitness[i] > self.fitness[worst] {
                worst = i;
            }
        }
        worst
    }

    /// Ensures swarm state exists: zero velocities and personal bests equal
    /// to the current population.
    pub fn ensure_swarm_state(&mut self) {
        if self.velocities.is_none() {
            self.velocities = Some(Array2::zeros(self.x.raw_dim()));
        }
        if self.pbest_x.is_none() {
            self.pbest_x = Some(self.x.clone());
            self.pbest_f = Some(self.fitness.clone());
        }
    }

    /// Debug-time consistency check of the structural invariants.
    pub fn assert_consistent(&self) {
        assert_eq!(self.x.nrows(), self.fitness.len());
        assert!(self.best_index < self.fitness.len());
        let min = self.fitness.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(self.fitness[self.best_index], min);
        if let Some(v) = &self.velocities {
            assert_eq!(v.raw_dim(), self.x.raw_dim());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn init_uniform_evaluates_everyone_in_bounds() {
        let mut env = Environment::from_closure(4, 100, |x| x.iter().map(|v| v * v).sum());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let state = PopulationState::init_uniform(&mut env, 12, &mut rng);
        assert_eq!(env.evals_used(), 12);
        assert_eq!(state.len(), 12);
        state.assert_consistent();
        for i in 0..12 {
            for j in 0..4 {
                assert!(state.x[[i, j]].abs() <= 100.0);
            }
            let expect: f64 = state.x.row(i).iter().map(|v| v * v).sum();
            assert_eq!(state.fitness[i], expect);
        }
    }

    #[test]
    fn best_index_prefers_lowest_index_on_ties() {
        let mut state = PopulationState {
            x: Array2::zeros((3, 1)),
            fitness: Array1::from_vec(vec![2.0, 1.0, 1.0]),
            velocities: None,
            pbest_x: None,
            pbest_f: None,
            best_index: 0,
        };
        state.recompute_best();
        assert_eq!(state.best_index, 1);
        assert_eq!(state.worst_index(), 0);
    }
}
