//! Node feature construction.

use ndarray::{Array2, ArrayView2};

/// Number of node features.
pub const FEATURE_COUNT: usize = 6;

/// Column indices of the feature matrix.
pub mod col {
    /// Standardized fitness.
    pub const F_Z: usize = 0;
    /// Normalized fitness rank (0 = best).
    pub const R_NORM: usize = 1;
    /// Euclidean distance to the subset-best point.
    pub const D_BEST: usize = 2;
    /// Normalized trajectory time.
    pub const T_NORM: usize = 3;
    /// Standardized local fitness change along the subsampled trajectory.
    pub const DF_LOC: usize = 4;
    /// `ln(dimension + 1)`, constant across nodes.
    pub const D_FEAT: usize = 5;
}

const STD_EPS: f64 = 1e-12;

/// Builds the `N x 6` node feature matrix for the selected trajectory subset.
///
/// `points` holds the selected points (one row per node, in trajectory
/// order), `fitness` their fitness values, `selected` their original
/// trajectory indices (sorted ascending), and `m_total` the full trajectory
/// length.
///
/// Features per node: standardized fitness; fitness rank divided by
/// `max(N - 1, 1)` with rank 0 the best and ties broken by trajectory order;
/// Euclidean distance to the subset-best point; trajectory time
/// `index / (m_total - 1)` (zero for a single-point trajectory); local
/// fitness change `f(prev) - f(self)` between consecutive selected nodes
/// (zero for the earliest), standardized; and the constant `ln(d + 1)`.
/// Standardization uses the population standard deviation with a `1e-12`
/// guard, so constant columns standardize to zero.
pub fn node_features(
    points: ArrayView2<'_, f64>,
    fitness: &[f64],
    selected: &[usize],
    m_total: usize,
) -> Array2<f64> {
    let n = selected.len();
    let d = points.ncols();
    assert_eq!(points.nrows(), n, "one point row per selected node");
    assert_eq!(fitness.len(), n, "one fitness per selected node");
    debug_assert!(selected.windows(2).all(|w| w[0] < w[1]));
    let mut h = Array2::zeros((n, FEATURE_COUNT));
    if n == 0 {
        return h;
    }

    // Standardized fitness.
    let f_std = standardize(fitness);
    for i in 0..n {
        h[[i, col::F_Z]] = f_std[i];
    }

    // Normalized rank: stable sort keeps earlier nodes first among ties.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));
    let denom = (n - 1).max(1) as f64;
    for (rank, &node) in order.iter().enumerate() {
        h[[node, col::R_NORM]] = rank as f64 / denom;
    }

    // Distance to the subset-best point (earliest among exact ties).
    let best = order[0];
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..d {
            let diff = points[[i, j]] - points[[best, j]];
            acc += diff * diff;
        }
        h[[i, col::D_BEST]] = acc.sqrt();
    }

    // Normalized trajectory time.
    for i in 0..n {
        h[[i, col::T_NORM]] = if m_total > 1 {
            selected[i] as f64 / (m_total - 1) as f64
        } else {
            0.0
        };
    }

    // Local fitness change along the subsampled trajectory, standardized.
    let mut df = vec![0.0; n];
    for i in 1..n {
        df[i] = fitness[i - 1] - fitness[i];
    }
    let df_std = standardize(&df);
    for i in 0..n {
        h[[i, col::DF_LOC]] = df_std[i];
    }

    // Dimension feature, constant and deliberately not standardized.
    let d_feat = ((d + 1) as f64).ln();
    for i in 0..n {
        h[[i, col::D_FEAT]] = d_feat;
    }
    h
}

/// Z-scores `values` using the population standard deviation plus a small
/// guard; constant input maps to all zeros.
fn standardize(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let denom = var.sqrt() + STD_EPS;
    values.iter().map(|v| (v - mean) / denom).collect()
}
