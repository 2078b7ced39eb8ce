//! Trajectory subsampling strategies.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Number of quantile bins used by fitness-stratified sampling.
const STRATA: usize = 10;

/// How trajectory points are chosen as graph nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SubsampleStrategy {
    /// Approximately equally spaced in time, always keeping the first and
    /// last evaluation.
    TimeUniform,
    /// Uniform without replacement.
    Random,
    /// Equal draws from ten fitness-quantile bins, with shortfalls
    /// redistributed round-robin.
    FitnessStratified,
    /// Half time-uniform, half fitness-stratified over the remainder.
    #[default]
    Mixed,
}

impl SubsampleStrategy {
    /// Canonical lowercase name.
    pub fn name(&self) -> &'static str {
        match self {
            SubsampleStrategy::TimeUniform => "time_uniform",
            SubsampleStrategy::Random => "random",
            SubsampleStrategy::FitnessStratified => "fitness_stratified",
            SubsampleStrategy::Mixed => "mixed",
        }
    }
}

impl fmt::Display for SubsampleStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SubsampleStrategy {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, CoreError> {
        [
            SubsampleStrategy::TimeUniform,
            SubsampleStrategy::Random,
            SubsampleStrategy::FitnessStratified,
            SubsampleStrategy::Mixed,
        ]
        .into_iter()
        .find(|v| v.name() == s)
        .ok_or_else(|| CoreError::InvalidConfig {
            field: "strategy",
            message: format!("unknown subsample strategy `{s}`"),
        })
    }
}

/// Selects `min(m, m_max)` distinct trajectory indices in `0..m`, sorted
/// ascending. `fitness` must have length `m`; it is consulted only by the
/// stratified strategies.
pub fn subsample(
    m: usize,
    m_max: usize,
    strategy: SubsampleStrategy,
    fitness: &[f64],
    rng: &mut impl Rng,
) -> Vec<usize> {
    assert_eq!(fitness.len(), m, "fitness length must equal m");
    let n = m.min(m_max);
    if n == 0 {
        return Vec::new();
    }
    let mut out = match strategy {
        SubsampleStrategy::TimeUniform => time_uniform(m, n),
        SubsampleStrategy::Random => {
            let mut v = rand::seq::index::sample(rng, m, n).into_vec();
            v.sort_unstable();
            v
        }
        SubsampleStrategy::FitnessStratified => {
            let mut v = stratified_excluding(m, n, fitness, &HashSet::new(), rng);
            v.sort_unstable();
            v
        }
        SubsampleStrategy::Mixed => {
            // Ceil-half time-uniform, then stratified draws over what is
            // left, so the union is exactly n distinct indices.
            let q_time = n - n / 2;
            let q_fit = n / 2;
            let mut picked = time_uniform(m, q_time);
            let exclude: HashSet<usize> = picked.iter().copied().collect();
            picked.extend(stratified_excluding(m, q_fit, fitness, &exclude, rng));
            picked.sort_unstable();
            picked
        }
    };
    out.dedup();
    debug_assert_eq!(out.len(), n, "subsample must return exactly n indices");
    out
}

/// `n` approximately equally spaced indices including 0 and `m - 1`.
fn time_uniform(m: usize, n: usize) -> Vec<usize> {
    if n >= m {
        return (0..m).collect();
    }
    if n == 1 {
        return vec![0];
    }
    let step = (m - 1) as f64 / (n - 1) as f64;
    (0..n).map(|j| (j as f64 * step).round() as usize).collect()
}

/// Draws `n` indices by fitness-quantile strata, skipping `exclude`.
///
/// Bins are ten contiguous slices of the fitness-sorted order (stable sort,
/// so trajectory order breaks ties). Each bin gets an equal quota, the
/// remainder spread round-robin from the lowest bin; quotas that exceed a
/// bin's available points are redistributed round-robin to bins with spare
/// capacity. Requires `m - exclude.len() >= n`.
fn stratified_excluding(
    m: usize,
    n: usize,
    fitness: &[f64],
    exclude: &HashSet<usize>,
    rng: &mut impl Rng,
) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));

    // Available (non-excluded) indices per contiguous quantile bin.
    let bins: Vec<Vec<usize>> = (0..STRATA)
        .map(|b| {
            let lo = b * m / STRATA;
            let hi = (b + 1) * m / STRATA;
            order[lo..hi]
                .iter()
                .copied()
                .filter(|i| !exclude.contains(i))
                .collect()
        })
        .collect();
    let available: usize = bins.iter().map(Vec::len).sum();
    assert!(available >= n, "not enough unexcluded points to draw from");

    // Equal quotas plus round-robin remainder, then push overflow from
    // short bins round-robin into bins with spare capacity.
    let mut quota = vec![n / STRATA; STRATA];
    for b in quota.iter_mut().take(n % STRATA) {
        *b += 1;
    }
    loop {
        let mut overflow = 0;
        for b in 0..STRATA {
            if quota[b] > bins[b].len() {
                overflow += quota[b] - bins[b].len();
                quota[b] = bins[b].len();
            }
        }
        if overflow == 0 {
            break;
        }
        let mut b = 0;
        while overflow > 0 {
            if quota[b] < bins[b].len() {
                quota[b] += 1;
                overflow -= 1;
            }
            b = (b + 1) % STRATA;
        }
    }

    let mut out = Vec::with_capacity(n);
    for (bin, &q) in bins.iter().zip(&quota) {
        if q == 0 {
            continue;
        }
        for pick in rand::seq::index::sample(rng, bin.len(), q) {
            out.push(bin[pick]);
        }
    }
    out
}
