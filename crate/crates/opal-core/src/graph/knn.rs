//! Symmetric k-nearest-neighbor adjacency construction.

use ndarray::{Array2, ArrayView2};

/// Effective neighbor count for `n` nodes: `min(k, n - 1)`.
pub fn k_eff(k: usize, n: usize) -> usize {
    k.min(n.saturating_sub(1))
}

/// Builds the binary adjacency matrix: each node links to its `min(k, N-1)`
/// nearest neighbors by Euclidean distance (ties broken toward the lower
/// node index), the directed result is symmetrized with an elementwise
/// maximum against its transpose, and self-loops fill the diagonal.
pub fn knn_adjacency(points: ArrayView2<'_, f64>, k: usize) -> Array2<f64> {
    let n = points.nrows();
    let keff = k_eff(k, n);
    let mut a = Array2::<f64>::zeros((n, n));

    // Pairwise squared distances (monotone in distance, so ordering and
    // tie-breaking are unchanged).
    let mut d2 = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let mut acc = 0.0;
            for c in 0..points.ncols() {
                let diff = points[[i, c]] - points[[j, c]];
                acc += diff * diff;
            }
            d2[[i, j]] = acc;
            d2[[j, i]] = acc;
        }
    }

    let mut candidates: Vec<usize> = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n {
        candidates.clear();
        candidates.extend((0..n).filter(|&j| j != i));
        candidates.sort_by(|&a_j, &b_j| {
            d2[[i, a_j]]
                .total_cmp(&d2[[i, b_j]])
                .then(a_j.cmp(&b_j))
        });
        for &j in candidates.iter().take(keff) {
            a[[i, j]] = 1.0;
        }
    }

    // Symmetrize by elementwise max with the transpose, then self-loops.
    for i in 0..n {
        for j in (i + 1)..n {
            let m = a[[i, j]].max(a[[j, i]]);
            a[[i, j]] = m;
            a[[j, i]] = m;
        }
        a[[i, i]] = 1.0;
    }
    a
}
