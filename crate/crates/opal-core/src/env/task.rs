//! Task families, landscape labels, and the seeded task generator.

use std::fmt;
use std::str::FromStr;

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::functions::{
    build_composition, build_hybrid, build_nn, random_rotation, BaseFn, ObjectiveKind,
};
use super::{Environment, Objective, DOMAIN_HALF_WIDTH};
use crate::error::{CoreError, Result};

/// Benchmark problem families available to the task generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Rotated/shifted sphere bowl.
    Sphere,
    /// Rotated/shifted Rastrigin grid of local minima.
    Rastrigin,
    /// Rotated/shifted Ackley plateau-and-funnel.
    Ackley,
    /// Rotated/shifted Rosenbrock valley.
    Rosenbrock,
    /// Two base functions on disjoint coordinate groups.
    HybridBlend,
    /// Minimum over three shifted, scaled, biased base-function copies.
    CompositionBlend,
    /// Fixed random two-hidden-layer tanh network landscape.
    NnLandscape,
}

impl Family {
    /// All seven families, in stable order.
    pub const ALL: [Family; 7] = [
        Family::Sphere,
        Family::Rastrigin,
        Family::Ackley,
        Family::Rosenbrock,
        Family::HybridBlend,
        Family::CompositionBlend,
        Family::NnLandscape,
    ];

    /// The structural label the auxiliary head is trained to predict.
    pub fn label(&self) -> LandscapeLabel {
        match self {
            Family::Sphere | Family::Rosenbrock => LandscapeLabel::Unimodal,
            Family::Rastrigin | Family::Ackley | Family::NnLandscape => {
                LandscapeLabel::SimpleMultimodal
            }
            Family::HybridBlend => LandscapeLabel::Hybrid,
            Family::CompositionBlend => LandscapeLabel::Composition,
        }
    }

    /// Whether the family belongs to the rotated/shifted analytic-composite
    /// subset used by the restricted ("suite-only") training pool.
    pub fn is_analytic_composite(&self) -> bool {
        !matches!(self, Family::NnLandscape)
    }

    /// Canonical lowercase name.
    pub fn name(&self) -> &'static str {
        match self {
            Family::Sphere => "sphere",
            Family::Rastrigin => "rastrigin",
            Family::Ackley => "ackley",
            Family::Rosenbrock => "rosenbrock",
            Family::HybridBlend => "hybrid_blend",
            Family::CompositionBlend => "composition_blend",
            Family::NnLandscape => "nn_landscape",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| CoreError::InvalidConfig {
                field: "family",
                message: format!("unknown family `{s}`"),
            })
    }
}

/// Coarse landscape structure classes predicted by the auxiliary head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandscapeLabel {
    /// Single basin.
    Unimodal,
    /// Many regular local minima.
    SimpleMultimodal,
    /// Mixed per-coordinate-group structure.
    Hybrid,
    /// Competing shifted basins.
    Composition,
}

impl LandscapeLabel {
    /// Number of label classes.
    pub const COUNT: usize = 4;

    /// Class index used by the auxiliary head.
    pub fn index(&self) -> usize {
        match self {
            LandscapeLabel::Unimodal => 0,
            LandscapeLabel::SimpleMultimodal => 1,
            LandscapeLabel::Hybrid => 2,
            LandscapeLabel::Composition => 3,
        }
    }

    /// Inverse of [`LandscapeLabel::index`].
    pub fn from_index(i: usize) -> Option<LandscapeLabel> {
        match i {
            0 => Some(LandscapeLabel::Unimodal),
            1 => Some(LandscapeLabel::SimpleMultimodal),
            2 => Some(LandscapeLabel::Hybrid),
            3 => Some(LandscapeLabel::Composition),
            _ => None,
        }
    }

    /// Canonical lowercase name.
    pub fn name(&self) -> &'static str {
        match self {
            LandscapeLabel::Unimodal => "unimodal",
            LandscapeLabel::SimpleMultimodal => "simple_multimodal",
            LandscapeLabel::Hybrid => "hybrid",
            LandscapeLabel::Composition => "composition",
        }
    }
}

impl fmt::Display for LandscapeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Training pools for the task sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskPool {
    /// All seven families.
    Mixed,
    /// Only the rotated/shifted analytic-composite families.
    Restricted,
}

impl TaskPool {
    /// Families this pool draws from.
    pub fn families(&self) -> &'static [Family] {
        const MIXED: [Family; 7] = Family::ALL;
        const RESTRICTED: [Family; 6] = [
            Family::Sphere,
            Family::Rastrigin,
            Family::Ackley,
            Family::Rosenbrock,
            Family::HybridBlend,
            Family::CompositionBlend,
        ];
        match self {
            TaskPool::Mixed => &MIXED,
            TaskPool::Restricted => &RESTRICTED,
        }
    }
}

/// Problem dimensionalities the generator draws from.
pub const GENERATOR_DIMS: [usize; 3] = [10, 30, 50];

/// Evaluation budget per dimension used by generated training tasks.
pub const DEFAULT_BUDGET_PER_DIM: usize = 1000;

/// Fraction of generated tasks that are noise-free.
const NOISE_FREE_FRACTION: f64 = 0.7;

/// Relative magnitude of evaluation noise when present.
const NOISE_RELATIVE_SIGMA: f64 = 0.01;

/// A fully reproducible description of one benchmark task instance.
///
/// All per-instance randomness (rotation, shift, blend parameters, noise
/// stream) derives from `seed`, so the record `(family, dim, seed, noise,
/// label, budget)` reconstructs the exact environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    /// Problem family.
    pub family: Family,
    /// Search-space dimensionality.
    pub dim: usize,
    /// Seed from which every instance detail derives.
    pub seed: u64,
    /// Standard deviation of additive Gaussian evaluation noise (0 = clean).
    pub noise_sigma: f64,
    /// Structural label implied by the family.
    pub label: LandscapeLabel,
    /// Total function-evaluation budget for one run.
    pub budget: usize,
}

// Sub-stream identifiers for deriving independent RNG streams from a seed.
const STREAM_AFFINE: u64 = 1;
const STREAM_KIND: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_RANGE: u64 = 4;

/// A ChaCha generator seeded by `seed` on independent sub-stream `stream`.
///
/// Distinct streams from the same seed are statistically independent, which
/// lets one master seed drive several reproducible random processes without
/// their draws interfering.
pub fn seeded_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl TaskSpec {
    /// Creates a spec with the label implied by the family.
    pub fn new(family: Family, dim: usize, seed: u64, noise_sigma: f64, budget: usize) -> TaskSpec {
        TaskSpec {
            family,
            dim,
            seed,
            noise_sigma,
            label: family.label(),
            budget,
        }
    }

    /// Checks internal consistency (label table, positive dimensions).
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(CoreError::InvalidConfig {
                field: "dim",
                message: format!("dimension must be at least 2, got {}", self.dim),
            });
        }
        if self.label != self.family.label() {
            return Err(CoreError::InvalidConfig {
                field: "label",
                message: format!(
                    "label `{}` does not match family `{}`",
                    self.label, self.family
                ),
            });
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(CoreError::InvalidConfig {
                field: "noise_sigma",
                message: format!("noise must be finite and nonnegative, got {}", self.noise_sigma),
            });
        }
        Ok(())
    }

    /// Returns a copy with a different evaluation budget.
    pub fn with_budget(mut self, budget: usize) -> TaskSpec {
        self.budget = budget;
        self
    }

    /// Returns a copy with a different noise level.
    pub fn with_noise(mut self, noise_sigma: f64) -> TaskSpec {
        self.noise_sigma = noise_sigma;
        self
    }

    fn build_kind(&self) -> ObjectiveKind {
        let mut rng = seeded_stream(self.seed, STREAM_KIND);
        match self.family {
            Family::Sphere => ObjectiveKind::Plain(BaseFn::Sphere),
            Family::Rastrigin => ObjectiveKind::Plain(BaseFn::Rastrigin),
            Family::Ackley => ObjectiveKind::Plain(BaseFn::Ackley),
            Family::Rosenbrock => ObjectiveKind::Plain(BaseFn::Rosenbrock),
            Family::HybridBlend => build_hybrid(self.dim, &mut rng),
            Family::CompositionBlend => build_composition(self.dim, &mut rng),
            Family::NnLandscape => build_nn(self.dim, &mut rng),
        }
    }

    /// Reconstructs the runnable environment for this instance.
    pub fn build(&self) -> Environment {
        let mut affine_rng = seeded_stream(self.seed, STREAM_AFFINE);
        let rotation = random_rotation(self.dim, &mut affine_rng);
        let shift = Array1::from_shape_fn(self.dim, |_| affine_rng.random_range(-80.0..80.0));
        let kind = self.build_kind();
        let known_shift = kind.lower_bound();
        let objective = Objective::Affine {
            rotation,
            shift,
            kind,
        };
        Environment::new(
            self.dim,
            self.budget,
            objective,
            self.noise_sigma,
            Some(known_shift),
            seeded_stream(self.seed, STREAM_NOISE),
        )
    }

    /// Estimates the objective's value range from a small seeded sample of
    /// uniform points; used to scale evaluation noise. Does not consume any
    /// budgeted evaluations.
    pub fn estimate_value_range(&self) -> f64 {
        let mut rng = seeded_stream(self.seed, STREAM_RANGE);
        let clean = TaskSpec {
            noise_sigma: 0.0,
            ..self.clone()
        };
        let mut probe = clean.build();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for _ in 0..16 {
            let x: Vec<f64> = (0..self.dim)
                .map(|_| rng.random_range(-DOMAIN_HALF_WIDTH..DOMAIN_HALF_WIDTH))
                .collect();
            let f = probe.evaluate(&x);
            if f.is_finite() {
                lo = lo.min(f);
                hi = hi.max(f);
            }
        }
        if lo.is_finite() && hi.is_finite() && hi > lo {
            hi - lo
        } else {
            1.0
        }
    }
}

/// Draws one task from the given pool: family uniform over the pool,
/// dimension uniform over `{10, 30, 50}`, budget `1000 * dim`, and noise
/// zero with probability 0.7, else `0.01 *` (estimated value range).
pub fn sample_task(rng: &mut impl Rng, pool: TaskPool) -> TaskSpec {
    sample_task_filtered(rng, pool.families(), &GENERATOR_DIMS, DEFAULT_BUDGET_PER_DIM)
}

/// [`sample_task`] with explicit family and dimension pools, used by smoke
/// configurations and ablations.
pub fn sample_task_filtered(
    rng: &mut impl Rng,
    families: &[Family],
    dims: &[usize],
    budget_per_dim: usize,
) -> TaskSpec {
    assert!(!families.is_empty(), "family pool must be nonempty");
    assert!(!dims.is_empty(), "dimension pool must be nonempty");
    let family = families[rng.random_range(0..families.len())];
    let dim = dims[rng.random_range(0..dims.len())];
    let seed = rng.random::<u64>();
    let mut spec = TaskSpec::new(family, dim, seed, 0.0, budget_per_dim * dim);
    if rng.random::<f64>() >= NOISE_FREE_FRACTION {
        spec.noise_sigma = NOISE_RELATIVE_SIGMA * spec.estimate_value_range().abs();
    }
    spec
}
