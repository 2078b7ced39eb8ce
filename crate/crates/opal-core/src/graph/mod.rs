//! Trajectory-to-graph conversion: subsampling, node features, and
//! k-nearest-neighbor adjacency.
//!
//! The design-phase trajectory is reduced to at most
//! [`GraphConfig::m_max`] nodes, each carrying six features
//! ([`features::node_features`]), connected by a symmetric k-NN adjacency
//! with self-loops ([`knn::knn_adjacency`]). An identity-adjacency mode
//! supports the structure-free ablation.

mod features;
mod knn;
mod subsample;

pub use features::{col, node_features, FEATURE_COUNT};
pub use knn::{k_eff, knn_adjacency};
pub use subsample::{subsample, SubsampleStrategy};

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Configuration of the trajectory-graph builder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    /// Maximum node count after subsampling.
    pub m_max: usize,
    /// Requested neighbor count (effective count is `min(k, N - 1)`).
    pub k: usize,
    /// Subsampling strategy.
    pub strategy: SubsampleStrategy,
    /// Replace the k-NN adjacency with the identity (no structure).
    pub identity_adjacency: bool,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            m_max: 300,
            k: 10,
            strategy: SubsampleStrategy::Mixed,
            identity_adjacency: false,
        }
    }
}

impl GraphConfig {
    /// Validates the numeric fields.
    pub fn validate(&self) -> Result<()> {
        if self.m_max == 0 {
            return Err(CoreError::InvalidConfig {
                field: "m_max",
                message: "node cap must be positive".to_string(),
            });
        }
        if self.k == 0 {
            return Err(CoreError::InvalidConfig {
                field: "k",
                message: "neighbor count must be positive".to_string(),
            });
        }
        Ok(())
    }
}

/// A featurized trajectory graph ready for the encoder.
#[derive(Debug, Clone)]
pub struct TrajectoryGraph {
    /// `N x 6` node feature matrix.
    pub h: Array2<f64>,
    /// `N x N` binary adjacency with self-loops.
    pub a: Array2<f64>,
    /// Original trajectory indices of the nodes, ascending.
    pub selected: Vec<usize>,
    /// Selected points, one row per node.
    pub points: Array2<f64>,
    /// Fitness of each node.
    pub fitness: Vec<f64>,
}

impl TrajectoryGraph {
    /// Node count.
    pub fn len(&self) -> usize {
        self.selected.len()
    }

    /// Whether the graph has no nodes (construction forbids this).
    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    /// Effective neighbor count used during construction.
    pub fn k_eff(&self, k: usize) -> usize {
        k_eff(k, self.len())
    }
}

/// Builds the trajectory graph from a full evaluation trajectory.
///
/// Errors on an empty trajectory. The node count is
/// `min(trajectory length, m_max)`.
pub fn build_graph(
    points: ArrayView2<'_, f64>,
    fitness: &[f64],
    config: &GraphConfig,
    rng: &mut impl Rng,
) -> Result<TrajectoryGraph> {
    config.validate()?;
    let m = fitness.len();
    if m == 0 {
        return Err(CoreError::EmptyTrajectory);
    }
    assert_eq!(points.nrows(), m, "one point per fitness value");
    let selected = subsample(m, config.m_max, config.strategy, fitness, rng);
    let n = selected.len();
    let d = points.ncols();
    let mut sub_points = Array2::zeros((n, d));
    let mut sub_fitness = Vec::with_capacity(n);
    for (row, &idx) in selected.iter().enumerate() {
        sub_points.row_mut(row).assign(&points.row(idx));
        sub_fitness.push(fitness[idx]);
    }
    let h = node_features(sub_points.view(), &sub_fitness, &selected, m);
    let a = if config.identity_adjacency {
        Array2::eye(n)
    } else {
        knn_adjacency(sub_points.view(), config.k)
    };
    Ok(TrajectoryGraph {
        h,
        a,
        selected,
        points: sub_points,
        fitness: sub_fitness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fake_trajectory(m: usize, d: usize, seed: u64) -> (Array2<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = Array2::from_shape_fn((m, d), |_| rng.random_range(-100.0..100.0));
        let fitness = (0..m).map(|_| rng.random_range(-10.0..1000.0)).collect();
        (points, fitness)
    }

    #[test]
    fn long_trajectories_are_capped_at_m_max() {
        let (points, fitness) = fake_trajectory(2000, 10, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = build_graph(points.view(), &fitness, &GraphConfig::default(), &mut rng).unwrap();
        assert_eq!(g.len(), 300);
        assert_eq!(g.h.nrows(), 300);
        assert_eq!(g.h.ncols(), FEATURE_COUNT);
        assert_eq!(g.a.nrows(), 300);
        assert!(g.h.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn identity_mode_produces_the_identity_adjacency() {
        let (points, fitness) = fake_trajectory(50, 4, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let config = GraphConfig {
            identity_adjacency: true,
            ..GraphConfig::default()
        };
        let g = build_graph(points.view(), &fitness, &config, &mut rng).unwrap();
        assert_eq!(g.a, Array2::<f64>::eye(50));
    }

    #[test]
    fn empty_trajectory_is_an_error() {
        let points = Array2::zeros((0, 3));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let err = build_graph(points.view(), &[], &GraphConfig::default(), &mut rng).unwrap_err();
        assert!(matches!(err, CoreError::EmptyTrajectory));
    }

    #[test]
    fn zero_k_is_rejected() {
        let (points, fitness) = fake_trajectory(10, 2, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let config = GraphConfig {
            k: 0,
            ..GraphConfig::default()
        };
        assert!(build_graph(points.view(), &fitness, &config, &mut rng).is_err());
    }

    #[test]
    fn graph_nodes_carry_their_trajectory_data() {
        let (points, fitness) = fake_trajectory(120, 3, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = build_graph(points.view(), &fitness, &GraphConfig::default(), &mut rng).unwrap();
        for (row, &idx) in g.selected.iter().enumerate() {
            assert_eq!(g.fitness[row], fitness[idx]);
            assert_eq!(g.points.row(row), points.row(idx));
        }
    }
}
