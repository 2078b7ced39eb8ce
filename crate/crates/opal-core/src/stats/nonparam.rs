//! Nonparametric tests: average ranks, the Friedman test, the paired
//! Wilcoxon signed-rank test, and Holm's step-down adjustment.

use ndarray::ArrayView2;

use crate::error::{CoreError, Result};
use crate::stats::special::{chi_square_sf, standard_normal_sf};

/// Ranks `values` ascending from 1, assigning tied entries the average of
/// the positions they occupy.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start+1 ..= end share the average rank.
        let average = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = average;
        }
        start = end;
    }
    ranks
}

/// Friedman test outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FriedmanResult {
    /// The χ²_F statistic.
    pub statistic: f64,
    /// Survival probability of the statistic under k−1 df.
    pub p_value: f64,
    /// Degrees of freedom (k − 1).
    pub df: usize,
}

/// Friedman test over an `n x k` rank matrix (problems × algorithms,
/// average-rank ties already applied).
pub fn friedman_test(ranks: ArrayView2<f64>) -> Result<FriedmanResult> {
    let (n, k) = ranks.dim();
    if n < 2 {
        return Err(CoreError::InvalidConfig {
            field: "ranks",
            message: format!("need at least 2 problems, got {n}"),
        });
    }
    if k < 2 {
        return Err(CoreError::InvalidConfig {
            field: "ranks",
            message: format!("need at least 2 algorithms, got {k}"),
        });
    }
    let nf = n as f64;
    let kf = k as f64;
    let sum_sq: f64 = (0..k)
        .map(|j| {
            let mean = ranks.column(j).sum() / nf;
            mean * mean
        })
        .sum();
    let statistic = 12.0 * nf / (kf * (kf + 1.0)) * sum_sq - 3.0 * nf * (kf + 1.0);
    // Exact symmetry can land a hair below zero in floating point.
    let statistic = statistic.max(0.0);
    let df = k - 1;
    Ok(FriedmanResult {
        statistic,
        p_value: chi_square_sf(statistic, df as f64),
        df,
    })
}

/// Wilcoxon signed-rank outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// W⁺: the rank sum of positive differences `a − b`.
    pub statistic: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    /// Pairs remaining after zero differences are dropped.
    pub effective_n: usize,
    /// True when every difference was zero (no evidence either way).
    pub all_zero: bool,
    /// True when the p-value came from exact enumeration.
    pub exact: bool,
}

/// Largest m for which all 2^m sign assignments are enumerated exactly.
pub const WILCOXON_EXACT_LIMIT: usize = 12;

/// Paired two-sided Wilcoxon signed-rank test of `a` against `b`.
///
/// Zero differences are dropped. With at most [`WILCOXON_EXACT_LIMIT`]
/// remaining pairs the null distribution is enumerated exactly; beyond
/// that a normal approximation with tie and continuity corrections is
/// used. All-zero differences yield `p = 1` with the `all_zero` flag set.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    wilcoxon_signed_rank_with_limit(a, b, WILCOXON_EXACT_LIMIT)
}

/// [`wilcoxon_signed_rank`] with an explicit exact-enumeration cutoff.
///
/// `exact_limit = 0` forces the normal approximation at every size, which
/// is how the approximation is cross-checked against enumeration.
pub fn wilcoxon_signed_rank_with_limit(
    a: &[f64],
    b: &[f64],
    exact_limit: usize,
) -> Result<WilcoxonResult> {
    if exact_limit > 25 {
        return Err(CoreError::InvalidConfig {
            field: "exact_limit",
            message: format!("enumerating 2^m sign assignments past m = 25 is infeasible, got limit {exact_limit}"),
        });
    }
    if a.len() != b.len() {
        return Err(CoreError::PairingMismatch(format!(
            "sample lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(CoreError::InvalidConfig {
            field: "pairs",
            message: "need at least one pair".into(),
        });
    }
    let differences: Vec<f64> = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    let m = differences.len();
    if m == 0 {
        return Ok(WilcoxonResult {
            statistic: 0.0,
            p_value: 1.0,
            effective_n: 0,
            all_zero: true,
            exact: true,
        });
    }

    let magnitudes: Vec<f64> = differences.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&magnitudes);
    let w_plus: f64 = differences
        .iter()
        .zip(ranks.iter())
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();
    let total = m as f64 * (m as f64 + 1.0) / 2.0;
    let w_minus = total - w_plus;
    let w_low = w_plus.min(w_minus);
    let w_high = total - w_low;

    let (p_value, exact) = if m <= exact_limit {
        (exact_two_sided_p(&ranks, w_low, w_high), true)
    } else {
        let mf = m as f64;
        let mean = total / 2.0;
        let tie_correction: f64 = tie_group_sizes(&magnitudes)
            .into_iter()
            .map(|t| {
                let t = t as f64;
                (t * t * t - t) / 48.0
            })
            .sum();
        let variance = mf * (mf + 1.0) * (2.0 * mf + 1.0) / 24.0 - tie_correction;
        let sigma = variance.sqrt();
        // Continuity correction pulls the statistic half a step toward
        // the mean before the tail probability is doubled.
        let z = (mean - w_low - 0.5) / sigma;
        ((2.0 * standard_normal_sf(z)).min(1.0), false)
    };

    Ok(WilcoxonResult {
        statistic: w_plus,
        p_value,
        effective_n: m,
        all_zero: false,
        exact,
    })
}

/// Sizes of tied groups among the difference magnitudes.
fn tie_group_sizes(magnitudes: &[f64]) -> Vec<usize> {
    let mut sorted = magnitudes.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).expect("finite magnitudes"));
    let mut groups = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && sorted[end] == sorted[start] {
            end += 1;
        }
        groups.push(end - start);
        start = end;
    }
    groups
}

/// Exact two-sided p over all 2^m sign assignments:
/// P(W ≤ w_low) + P(W ≥ w_high), clamped to 1.
fn exact_two_sided_p(ranks: &[f64], w_low: f64, w_high: f64) -> f64 {
    let m = ranks.len();
    // Work in doubled-rank integers so average ranks (halves) stay exact.
    let doubled: Vec<u64> = ranks.iter().map(|r| (2.0 * r).round() as u64).collect();
    let w_low2 = (2.0 * w_low).round() as u64;
    let w_high2 = (2.0 * w_high).round() as u64;
    let mut low_count = 0u64;
    let mut high_count = 0u64;
    for mask in 0u64..(1u64 << m) {
        let mut w2 = 0u64;
        for (bit, &r2) in doubled.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                w2 += r2;
            }
        }
        if w2 <= w_low2 {
            low_count += 1;
        }
        if w2 >= w_high2 {
            high_count += 1;
        }
    }
    let denom = (1u64 << m) as f64;
    (((low_count + high_count) as f64) / denom).min(1.0)
}

/// Holm's step-down multiple-comparison adjustment. Output order matches
/// input order.
pub fn holm_adjust(p_values: &[f64]) -> Result<Vec<f64>> {
    let m = p_values.len();
    if m == 0 {
        return Err(CoreError::InvalidConfig {
            field: "p_values",
            message: "need at least one p-value".into(),
        });
    }
    for &p in p_values {
        if !(0.0..=1.0).contains(&p) {
            return Err(CoreError::InvalidConfig {
                field: "p_values",
                message: format!("p-value {p} outside [0, 1]"),
            });
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| p_values[i].partial_cmp(&p_values[j]).expect("valid p"));
    let mut adjusted = vec![0.0; m];
    let mut running_max = 0.0f64;
    for (position, &idx) in order.iter().enumerate() {
        let factor = (m - position) as f64;
        let candidate = (factor * p_values[idx]).min(1.0);
        running_max = running_max.max(candidate);
        adjusted[idx] = running_max;
    }
    Ok(adjusted)
}
