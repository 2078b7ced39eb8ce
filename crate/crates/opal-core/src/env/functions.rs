//! Analytic base landscapes and the seeded objective constructions built on
//! top of them.
//!
//! Every generated task evaluates `f(x) = kind(R · (x - c))` where `R` is a
//! random orthonormal rotation, `c` a random shift, and `kind` one of the
//! objective kinds below. All base functions are nonnegative with minimum
//! value zero, which keeps the constructed optimum value (`known_shift`)
//! computable for every synthetic task.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Analytic primitives used directly and inside blends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseFn {
    /// `sum(z_i^2)`, unimodal bowl.
    Sphere,
    /// `10 d + sum(z_i^2 - 10 cos(2 pi z_i))`, regular grid of local minima.
    Rastrigin,
    /// `20 + e - 20 exp(-0.2 sqrt(mean z^2)) - exp(mean cos(2 pi z))`.
    Ackley,
    /// `sum(100 (z_{i+1} - z_i^2)^2 + (1 - z_i)^2)`, curved narrow valley.
    Rosenbrock,
}

impl BaseFn {
    const ALL: [BaseFn; 4] = [
        BaseFn::Sphere,
        BaseFn::Rastrigin,
        BaseFn::Ackley,
        BaseFn::Rosenbrock,
    ];

    /// Evaluates the base function at `z`.
    pub fn eval(&self, z: &[f64]) -> f64 {
        match self {
            BaseFn::Sphere => z.iter().map(|v| v * v).sum(),
            BaseFn::Rastrigin => {
                let d = z.len() as f64;
                10.0 * d
                    + z.iter()
                        .map(|v| v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos())
                        .sum::<f64>()
            }
            BaseFn::Ackley => {
                let d = z.len() as f64;
                if z.is_empty() {
                    return 0.0;
                }
                let mean_sq = z.iter().map(|v| v * v).sum::<f64>() / d;
                let mean_cos = z
                    .iter()
                    .map(|v| (2.0 * std::f64::consts::PI * v).cos())
                    .sum::<f64>()
                    / d;
                20.0 + std::f64::consts::E
                    - 20.0 * (-0.2 * mean_sq.sqrt()).exp()
                    - mean_cos.exp()
            }
            BaseFn::Rosenbrock => z
                .windows(2)
                .map(|w| {
                    let a = w[1] - w[0] * w[0];
                    let b = 1.0 - w[0];
                    100.0 * a * a + b * b
                })
                .sum(),
        }
    }

    fn draw(rng: &mut impl Rng, min_dim: usize) -> BaseFn {
        loop {
            let f = Self::ALL[rng.random_range(0..Self::ALL.len())];
            // Rosenbrock needs at least two coordinates to couple.
            if f != BaseFn::Rosenbrock || min_dim >= 2 {
                return f;
            }
        }
    }
}

/// One component of a composition blend: `weight * base(z - offset) + bias`.
#[derive(Debug, Clone)]
pub struct CompositionComponent {
    /// Base landscape evaluated by this component.
    pub base: BaseFn,
    /// Offset of the component optimum in rotated coordinates.
    pub offset: Array1<f64>,
    /// Multiplicative scale applied to the base value.
    pub weight: f64,
    /// Additive bias; the smallest bias is the composite's minimum value.
    pub bias: f64,
}

/// Fixed random two-hidden-layer tanh network producing a scalar landscape.
#[derive(Debug, Clone)]
pub struct NnWeights {
    w1: Array2<f64>,
    b1: Array1<f64>,
    w2: Array2<f64>,
    b2: Array1<f64>,
    w3: Array1<f64>,
    b3: f64,
}

/// The concrete objective attached to a task, after the affine transform.
#[derive(Debug, Clone)]
pub enum ObjectiveKind {
    /// A single analytic base function.
    Plain(BaseFn),
    /// Disjoint coordinate groups, each scored by its own base function.
    Hybrid {
        /// `(base, coordinate indices)` per group; indices partition `0..d`.
        groups: Vec<(BaseFn, Vec<usize>)>,
    },
    /// Minimum over shifted, scaled, biased copies of base functions.
    Composition {
        /// The competing components.
        components: Vec<CompositionComponent>,
    },
    /// Scalar output of a fixed random tanh network over `z / 100`.
    Nn(NnWeights),
}

impl ObjectiveKind {
    /// Evaluates the objective in rotated coordinates `z`.
    pub fn eval(&self, z: &[f64]) -> f64 {
        match self {
            ObjectiveKind::Plain(f) => f.eval(z),
            ObjectiveKind::Hybrid { groups } => groups
                .iter()
                .map(|(f, idx)| {
                    let sub: Vec<f64> = idx.iter().map(|&i| z[i]).collect();
                    f.eval(&sub)
                })
                .sum(),
            ObjectiveKind::Composition { components } => components
                .iter()
                .map(|c| {
                    let shifted: Vec<f64> =
                        z.iter().zip(c.offset.iter()).map(|(a, o)| a - o).collect();
                    c.weight * c.base.eval(&shifted) + c.bias
                })
                .fold(f64::INFINITY, f64::min),
            ObjectiveKind::Nn(w) => {
                let x: Array1<f64> = z.iter().map(|v| v / 100.0).collect();
                let h1 = (w.w1.dot(&x) + &w.b1).mapv(f64::tanh);
                let h2 = (w.w2.dot(&h1) + &w.b2).mapv(f64::tanh);
                w.w3.dot(&h2) + w.b3
            }
        }
    }

    /// A value `s` with `eval(z) >= s` for all `z` (the constructed optimum
    /// value for plain/hybrid/composition kinds, a bound for networks).
    pub fn lower_bound(&self) -> f64 {
        match self {
            ObjectiveKind::Plain(_) | ObjectiveKind::Hybrid { .. } => 0.0,
            ObjectiveKind::Composition { components } => components
                .iter()
                .map(|c| c.bias)
                .fold(f64::INFINITY, f64::min),
            ObjectiveKind::Nn(w) => w.b3 - w.w3.iter().map(|v| v.abs()).sum::<f64>(),
        }
    }
}

/// Builds a hybrid blend: a seeded partition of the coordinates into two
/// groups, each assigned a distinct base function.
pub fn build_hybrid(dim: usize, rng: &mut ChaCha8Rng) -> ObjectiveKind {
    let mut perm: Vec<usize> = (0..dim).collect();
    for i in (1..perm.len()).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let cut = dim.div_ceil(2);
    let (g1, g2) = perm.split_at(cut);
    let min_len = g1.len().min(g2.len());
    let f1 = BaseFn::draw(rng, min_len);
    let f2 = loop {
        let f = BaseFn::draw(rng, min_len);
        if f != f1 {
            break f;
        }
    };
    ObjectiveKind::Hybrid {
        groups: vec![(f1, g1.to_vec()), (f2, g2.to_vec())],
    }
}

/// Builds a composition blend: the minimum over three shifted, scaled copies
/// of base functions with biases `{0, 100, 200}` in seeded order.
pub fn build_composition(dim: usize, rng: &mut ChaCha8Rng) -> ObjectiveKind {
    let mut biases = [0.0, 100.0, 200.0];
    for i in (1..biases.len()).rev() {
        biases.swap(i, rng.random_range(0..=i));
    }
    let components = biases
        .iter()
        .map(|&bias| {
            let base = BaseFn::draw(rng, dim);
            let offset = Array1::from_shape_fn(dim, |_| rng.random_range(-50.0..50.0));
            let weight = rng.random_range(0.5..2.0);
            CompositionComponent {
                base,
                offset,
                weight,
                bias,
            }
        })
        .collect();
    ObjectiveKind::Composition { components }
}

/// Builds a fixed random two-hidden-layer tanh network landscape.
pub fn build_nn(dim: usize, rng: &mut ChaCha8Rng) -> ObjectiveKind {
    const HIDDEN: usize = 16;
    let normal = |fan_in: usize, rng: &mut ChaCha8Rng| {
        let std = 1.0 / (fan_in as f64).sqrt();
        let v: f64 = rng.sample(StandardNormal);
        v * std
    };
    let w1 = Array2::from_shape_fn((HIDDEN, dim), |_| normal(dim, rng));
    let b1 = Array1::from_shape_fn(HIDDEN, |_| normal(dim, rng));
    let w2 = Array2::from_shape_fn((HIDDEN, HIDDEN), |_| normal(HIDDEN, rng));
    let b2 = Array1::from_shape_fn(HIDDEN, |_| normal(HIDDEN, rng));
    let w3 = Array1::from_shape_fn(HIDDEN, |_| normal(HIDDEN, rng));
    let b3 = normal(HIDDEN, rng);
    ObjectiveKind::Nn(NnWeights {
        w1,
        b1,
        w2,
        b2,
        w3,
        b3,
    })
}

/// Draws a random orthonormal `dim x dim` rotation by orthonormalizing a
/// Gaussian matrix with two modified Gram-Schmidt sweeps.
pub fn random_rotation(dim: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut q = Array2::from_shape_fn((dim, dim), |_| rng.sample::<f64, _>(StandardNormal));
    for _sweep in 0..2 {
        for j in 0..dim {
            for i in 0..j {
                let proj = q.column(i).dot(&q.column(j));
                let qi = q.column(i).to_owned();
                q.column_mut(j).scaled_add(-proj, &qi);
            }
            let norm = q.column(j).dot(&q.column(j)).sqrt();
            if norm < 1e-12 {
                // Degenerate draw (probability ~0); replace and redo column.
                for v in q.column_mut(j).iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                continue;
            }
            q.column_mut(j).mapv_inplace(|v| v / norm);
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn base_minima_are_zero() {
        assert_eq!(BaseFn::Sphere.eval(&[0.0; 10]), 0.0);
        assert_eq!(BaseFn::Rastrigin.eval(&[0.0; 10]), 0.0);
        assert!(BaseFn::Ackley.eval(&[0.0; 10]).abs() < 1e-12);
        assert_eq!(BaseFn::Rosenbrock.eval(&[1.0; 10]), 0.0);
    }

    #[test]
    fn sphere_matches_hand_value() {
        assert_eq!(BaseFn::Sphere.eval(&[1.0, 2.0]), 5.0);
    }

    #[test]
    fn base_functions_are_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let z: Vec<f64> = (0..8).map(|_| rng.random_range(-100.0..100.0)).collect();
            for f in BaseFn::ALL {
                assert!(f.eval(&z) >= 0.0, "{f:?} went negative at {z:?}");
            }
        }
    }

    #[test]
    fn rotation_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in [2, 10, 50] {
            let r = random_rotation(dim, &mut rng);
            let gram = r.t().dot(&r);
            for i in 0..dim {
                for j in 0..dim {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (gram[[i, j]] - expect).abs() < 1e-8,
                        "R^T R deviates at ({i},{j}) for dim {dim}"
                    );
                }
            }
        }
    }

    #[test]
    fn composition_lower_bound_is_smallest_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let kind = build_composition(6, &mut rng);
        assert_eq!(kind.lower_bound(), 0.0);
        // Every evaluation respects the bound.
        for _ in 0..100 {
            let z: Vec<f64> = (0..6).map(|_| rng.random_range(-100.0..100.0)).collect();
            assert!(kind.eval(&z) >= kind.lower_bound());
        }
    }

    #[test]
    fn nn_respects_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let kind = build_nn(5, &mut rng);
        let lb = kind.lower_bound();
        for _ in 0..200 {
            let z: Vec<f64> = (0..5).map(|_| rng.random_range(-200.0..200.0)).collect();
            assert!(kind.eval(&z) >= lb);
        }
    }

    #[test]
    fn hybrid_partitions_all_coordinates() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let kind = build_hybrid(9, &mut rng);
        if let ObjectiveKind::Hybrid { groups } = &kind {
            let mut seen: Vec<usize> = groups.iter().flat_map(|(_, g)| g.clone()).collect();
            seen.sort_unstable();
            assert_eq!(seen, (0..9).collect::<Vec<_>>());
            assert_ne!(groups[0].0, groups[1].0);
        } else {
            panic!("expected hybrid kind");
        }
    }
}
