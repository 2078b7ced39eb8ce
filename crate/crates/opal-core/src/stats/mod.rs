//! Benchmark bookkeeping and nonparametric comparison: run records,
//! per-cell summaries, rank matrices, the Friedman omnibus test,
//! Holm-adjusted pairwise Wilcoxon tests, win/tie/loss counts, and
//! operator-usage aggregation.

mod nonparam;
mod special;

pub use nonparam::{
    average_ranks, friedman_test, holm_adjust, wilcoxon_signed_rank,
    wilcoxon_signed_rank_with_limit, FriedmanResult, WilcoxonResult, WILCOXON_EXACT_LIMIT,
};
pub use special::{
    chi_square_sf, ln_gamma, regularized_gamma_p, regularized_gamma_q, standard_normal_sf,
};

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::ops::{OperatorToken, OPERATOR_COUNT};

/// One benchmark run: an algorithm's final best value on one seeded
/// problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Algorithm name.
    pub algorithm: String,
    /// Problem identifier (family/instance).
    pub function: String,
    /// Problem dimension.
    pub dim: usize,
    /// Instance seed; pairing across algorithms matches on it.
    pub seed: u64,
    /// Best objective value at budget exhaustion.
    pub final_best: f64,
    /// Optional path to the run's convergence trace.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_path: Option<String>,
}

/// Writes records as CSV.
pub fn write_records(records: &[RunRecord], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["algorithm", "function", "dim", "seed", "final_best", "trace_path"])?;
    for r in records {
        writer.write_record([
            r.algorithm.clone(),
            r.function.clone(),
            r.dim.to_string(),
            r.seed.to_string(),
            r.final_best.to_string(),
            r.trace_path.clone().unwrap_or_default(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads records written by [`write_records`].
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let field = |i: usize| row.get(i).unwrap_or("").to_string();
        let parse_err = |what: &'static str, value: &str| CoreError::InvalidConfig {
            field: what,
            message: format!("unparseable value {value:?}"),
        };
        let dim: usize = field(2).parse().map_err(|_| parse_err("dim", &field(2)))?;
        let seed: u64 = field(3).parse().map_err(|_| parse_err("seed", &field(3)))?;
        let final_best: f64 = field(4)
            .parse()
            .map_err(|_| parse_err("final_best", &field(4)))?;
        let trace = field(5);
        records.push(RunRecord {
            algorithm: field(0),
            function: field(1),
            dim,
            seed,
            final_best,
            trace_path: (!trace.is_empty()).then_some(trace),
        });
    }
    Ok(records)
}

/// Median of a nonempty sample (average of the middle two when even).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Aggregate statistics for one (algorithm, function, dim) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Algorithm name.
    pub algorithm: String,
    /// Problem identifier.
    pub function: String,
    /// Problem dimension.
    pub dim: usize,
    /// Number of runs in the cell.
    pub count: usize,
    /// Median final best (the ranking statistic).
    pub median: f64,
    /// Mean final best.
    pub mean: f64,
    /// Population standard deviation of the final bests.
    pub std: f64,
}

/// Groups records into per-(algorithm, function, dim) summaries, in
/// deterministic key order.
pub fn summarize(records: &[RunRecord]) -> Vec<Summary> {
    let mut cells: BTreeMap<(String, String, usize), Vec<f64>> = BTreeMap::new();
    for r in records {
        cells
            .entry((r.algorithm.clone(), r.function.clone(), r.dim))
            .or_default()
            .push(r.final_best);
    }
    cells
        .into_iter()
        .map(|((algorithm, function, dim), values)| {
            let count = values.len();
            let mean = values.iter().sum::<f64>() / count as f64;
            let variance =
                values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count as f64;
            Summary {
                algorithm,
                function,
                dim,
                count,
                median: median(&values),
                mean,
                std: variance.sqrt(),
            }
        })
        .collect()
}

/// Per-problem ranks of a fixed algorithm list.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    /// Column order of the ranks.
    pub algorithms: Vec<String>,
    /// Row order: (function, dim), ascending.
    pub problems: Vec<(String, usize)>,
    /// `problems x algorithms` ranks (1 = best median), ties averaged.
    pub ranks: Array2<f64>,
    /// Column means of `ranks`.
    pub mean_ranks: Vec<f64>,
}

/// Ranks every algorithm on every problem by median final best.
///
/// Every (problem, algorithm) cell must contain at least one record.
pub fn rank_table(records: &[RunRecord], algorithms: &[String]) -> Result<RankTable> {
    if algorithms.is_empty() {
        return Err(CoreError::InvalidConfig {
            field: "algorithms",
            message: "need at least one algorithm".into(),
        });
    }
    let mut cells: BTreeMap<(String, usize), BTreeMap<&str, Vec<f64>>> = BTreeMap::new();
    for r in records {
        if let Some(pos) = algorithms.iter().position(|a| *a == r.algorithm) {
            cells
                .entry((r.function.clone(), r.dim))
                .or_default()
                .entry(&algorithms[pos])
                .or_default()
                .push(r.final_best);
        }
    }
    if cells.is_empty() {
        return Err(CoreError::InvalidConfig {
            field: "records",
            message: "no records for the requested algorithms".into(),
        });
    }
    let problems: Vec<(String, usize)> = cells.keys().cloned().collect();
    let mut ranks = Array2::zeros((problems.len(), algorithms.len()));
    for (row, problem) in problems.iter().enumerate() {
        let by_algorithm = &cells[problem];
        let mut medians = Vec::with_capacity(algorithms.len());
        for algorithm in algorithms {
            let values = by_algorithm.get(algorithm.as_str()).ok_or_else(|| {
                CoreError::PairingMismatch(format!(
                    "algorithm {algorithm:?} has no runs on {}/d{}",
                    problem.0, problem.1
                ))
            })?;
            medians.push(median(values));
        }
        for (col, rank) in average_ranks(&medians).into_iter().enumerate() {
            ranks[[row, col]] = rank;
        }
    }
    let n = problems.len() as f64;
    let mean_ranks = (0..algorithms.len())
        .map(|j| ranks.column(j).sum() / n)
        .collect();
    Ok(RankTable {
        algorithms: algorithms.to_vec(),
        problems,
        ranks,
        mean_ranks,
    })
}

/// Win/tie/loss counts of the reference against one opponent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WtlRow {
    /// Opponent algorithm.
    pub opponent: String,
    /// Dimension the counts cover (`None` = all dimensions).
    pub dim: Option<usize>,
    /// Problems where the reference is significantly better.
    pub wins: usize,
    /// Problems with no significant difference.
    pub ties: usize,
    /// Problems where the reference is significantly worse.
    pub losses: usize,
}

/// Per-problem paired significance comparison of `reference` against
/// every other algorithm, aggregated overall and per dimension.
///
/// Each problem's runs are paired by seed; a seed present for one
/// algorithm but not the other is an error.
pub fn win_tie_loss(records: &[RunRecord], reference: &str, alpha: f64) -> Result<Vec<WtlRow>> {
    let mut by_problem: BTreeMap<(String, usize), BTreeMap<String, BTreeMap<u64, f64>>> =
        BTreeMap::new();
    let mut opponents: BTreeSet<String> = BTreeSet::new();
    let mut reference_seen = false;
    for r in records {
        if r.algorithm == reference {
            reference_seen = true;
        } else {
            opponents.insert(r.algorithm.clone());
        }
        let slot = by_problem
            .entry((r.function.clone(), r.dim))
            .or_default()
            .entry(r.algorithm.clone())
            .or_default();
        if slot.insert(r.seed, r.final_best).is_some() {
            return Err(CoreError::PairingMismatch(format!(
                "duplicate record for {} on {}/d{} seed {}",
                r.algorithm, r.function, r.dim, r.seed
            )));
        }
    }
    if !reference_seen {
        return Err(CoreError::InvalidConfig {
            field: "reference",
            message: format!("no records for reference algorithm {reference:?}"),
        });
    }

    let mut counts: BTreeMap<(String, Option<usize>), (usize, usize, usize)> = BTreeMap::new();
    for ((function, dim), algorithms) in &by_problem {
        let reference_runs = algorithms.get(reference).ok_or_else(|| {
            CoreError::PairingMismatch(format!("{reference:?} missing on {function}/d{dim}"))
        })?;
        for opponent in &opponents {
            let opponent_runs = algorithms.get(opponent).ok_or_else(|| {
                CoreError::PairingMismatch(format!("{opponent:?} missing on {function}/d{dim}"))
            })?;
            let ref_seeds: Vec<u64> = reference_runs.keys().copied().collect();
            let opp_seeds: Vec<u64> = opponent_runs.keys().copied().collect();
            if ref_seeds != opp_seeds {
                return Err(CoreError::PairingMismatch(format!(
                    "seed sets differ between {reference:?} and {opponent:?} on {function}/d{dim}"
                )));
            }
            let a: Vec<f64> = reference_runs.values().copied().collect();
            let b: Vec<f64> = opponent_runs.values().copied().collect();
            let test = wilcoxon_signed_rank(&a, &b)?;
            let reference_median = median(&a);
            let opponent_median = median(&b);
            let outcome = if test.p_value < alpha && reference_median < opponent_median {
                0
            } else if test.p_value < alpha && reference_median > opponent_median {
                2
            } else {
                1
            };
            for key in [(opponent.clone(), None), (opponent.clone(), Some(*dim))] {
                let entry = counts.entry(key).or_insert((0, 0, 0));
                match outcome {
                    0 => entry.0 += 1,
                    1 => entry.1 += 1,
                    _ => entry.2 += 1,
                }
            }
        }
    }
    Ok(counts
        .into_iter()
        .map(|((opponent, dim), (wins, ties, losses))| WtlRow {
            opponent,
            dim,
            wins,
            ties,
            losses,
        })
        .collect())
}

/// One decoded program attributed to a landscape family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramLogEntry {
    /// Landscape family name.
    pub family: String,
    /// Program tokens in phase order.
    pub tokens: Vec<OperatorToken>,
}

/// Token-usage aggregate for one landscape family.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorUsage {
    /// Landscape family name.
    pub family: String,
    /// Number of programs observed.
    pub programs: usize,
    /// Empirical frequency per token index; sums to 1.
    pub frequencies: [f64; OPERATOR_COUNT],
    /// Number of distinct token sequences.
    pub unique_programs: usize,
    /// Fraction of emitted tokens outside the two DE generation operators.
    pub non_de_fraction: f64,
}

/// Aggregates token frequencies, program diversity, and the non-DE token
/// share per landscape family.
pub fn operator_usage(logs: &[ProgramLogEntry]) -> Vec<OperatorUsage> {
    let mut by_family: BTreeMap<&str, Vec<&ProgramLogEntry>> = BTreeMap::new();
    for entry in logs {
        by_family.entry(&entry.family).or_default().push(entry);
    }
    by_family
        .into_iter()
        .map(|(family, entries)| {
            let mut counts = [0usize; OPERATOR_COUNT];
            let mut non_de = 0usize;
            let mut total = 0usize;
            let mut distinct: BTreeSet<Vec<OperatorToken>> = BTreeSet::new();
            for entry in &entries {
                distinct.insert(entry.tokens.clone());
                for token in &entry.tokens {
                    counts[token.index()] += 1;
                    total += 1;
                    if !token.is_de() {
                        non_de += 1;
                    }
                }
            }
            let mut frequencies = [0.0; OPERATOR_COUNT];
            if total > 0 {
                for (f, c) in frequencies.iter_mut().zip(counts.iter()) {
                    *f = *c as f64 / total as f64;
                }
            }
            OperatorUsage {
                family: family.to_string(),
                programs: entries.len(),
                frequencies,
                unique_programs: distinct.len(),
                non_de_fraction: if total > 0 {
                    non_de as f64 / total as f64
                } else {
                    0.0
                },
            }
        })
        .collect()
}

/// One reference-vs-opponent Wilcoxon comparison over per-problem medians.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseComparison {
    /// Opponent algorithm.
    pub opponent: String,
    /// W⁺ statistic of `reference − opponent` medians.
    pub statistic: f64,
    /// Raw two-sided p.
    pub p_value: f64,
    /// Holm-adjusted p across all opponents.
    pub holm_p: f64,
    /// Whether the p-value came from exact enumeration.
    pub exact: bool,
    /// Whether every per-problem median pair was tied.
    pub all_zero: bool,
}

/// The full comparison report over one set of benchmark records.
#[derive(Debug, Clone)]
pub struct BenchReport {
    /// Reference algorithm the pairwise sections compare against.
    pub reference: String,
    /// All algorithms, reference first.
    pub algorithms: Vec<String>,
    /// Per-cell summaries.
    pub summaries: Vec<Summary>,
    /// Per-problem ranks and mean ranks.
    pub rank_table: RankTable,
    /// Friedman omnibus test (needs ≥ 2 problems and ≥ 2 algorithms).
    pub friedman: Option<FriedmanResult>,
    /// Holm-adjusted pairwise Wilcoxon tests against the reference.
    pub pairwise: Vec<PairwiseComparison>,
    /// Win/tie/loss rows (overall and per dimension).
    pub wtl: Vec<WtlRow>,
    /// Operator usage per landscape family (empty without program logs).
    pub usage: Vec<OperatorUsage>,
    /// Significance level used for W/T/L.
    pub alpha: f64,
}

impl BenchReport {
    /// Builds every table from raw records (plus optional program logs).
    pub fn build(
        records: &[RunRecord],
        reference: &str,
        alpha: f64,
        program_logs: &[ProgramLogEntry],
    ) -> Result<BenchReport> {
        if records.is_empty() {
            return Err(CoreError::InvalidConfig {
                field: "records",
                message: "no run records to report on".into(),
            });
        }
        let mut names: BTreeSet<String> = records.iter().map(|r| r.algorithm.clone()).collect();
        if !names.remove(reference) {
            return Err(CoreError::InvalidConfig {
                field: "reference",
                message: format!("reference algorithm {reference:?} has no records"),
            });
        }
        let mut algorithms = vec![reference.to_string()];
        algorithms.extend(names);

        let summaries = summarize(records);
        let table = rank_table(records, &algorithms)?;
        let friedman = if table.problems.len() >= 2 && algorithms.len() >= 2 {
            Some(friedman_test(table.ranks.view())?)
        } else {
            None
        };

        // Pairwise tests pair the per-problem medians of the reference
        // with each opponent's.
        let mut medians: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for (row, _) in table.problems.iter().enumerate() {
            let _ = row;
        }
        for (col, algorithm) in algorithms.iter().enumerate() {
            let mut values = Vec::with_capacity(table.problems.len());
            for problem in &table.problems {
                let cell: Vec<f64> = records
                    .iter()
                    .filter(|r| {
                        r.algorithm == *algorithm && r.function == problem.0 && r.dim == problem.1
                    })
                    .map(|r| r.final_best)
                    .collect();
                values.push(median(&cell));
            }
            let _ = col;
            medians.insert(algorithm, values);
        }
        let reference_medians = &medians[reference];
        let mut pairwise = Vec::new();
        let mut raw_ps = Vec::new();
        for opponent in algorithms.iter().skip(1) {
            let test = wilcoxon_signed_rank(reference_medians, &medians[opponent.as_str()])?;
            raw_ps.push(test.p_value);
            pairwise.push(PairwiseComparison {
                opponent: opponent.clone(),
                statistic: test.statistic,
                p_value: test.p_value,
                holm_p: test.p_value,
                exact: test.exact,
                all_zero: test.all_zero,
            });
        }
        if !raw_ps.is_empty() {
            for (comparison, holm_p) in pairwise.iter_mut().zip(holm_adjust(&raw_ps)?) {
                comparison.holm_p = holm_p;
            }
        }

        let wtl = win_tie_loss(records, reference, alpha)?;
        let usage = operator_usage(program_logs);
        Ok(BenchReport {
            reference: reference.to_string(),
            algorithms,
            summaries,
            rank_table: table,
            friedman,
            pairwise,
            wtl,
            usage,
            alpha,
        })
    }

    /// Renders the report as human-readable text.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let push = |out: &mut String, line: String| {
            out.push_str(&line);
            out.push('\n');
        };
        push(
            &mut out,
            format!(
                "Benchmark report: {} algorithms, {} problems, reference = {}",
                self.algorithms.len(),
                self.rank_table.problems.len(),
                self.reference
            ),
        );
        push(&mut out, String::new());
        push(&mut out, "Mean ranks (lower is better):".to_string());
        for (algorithm, rank) in self
            .rank_table
            .algorithms
            .iter()
            .zip(self.rank_table.mean_ranks.iter())
        {
            push(&mut out, format!("  {algorithm:<24} {rank:.3}"));
        }
        push(&mut out, String::new());
        match &self.friedman {
            Some(f) => push(
                &mut out,
                format!(
                    "Friedman test: chi2 = {:.4}, df = {}, p = {:.6}",
                    f.statistic, f.df, f.p_value
                ),
            ),
            None => push(
                &mut out,
                "Friedman test: skipped (needs >= 2 problems and >= 2 algorithms)".to_string(),
            ),
        }
        if !self.pairwise.is_empty() {
            push(&mut out, String::new());
            push(
                &mut out,
                format!("Pairwise Wilcoxon vs {} (Holm-adjusted):", self.reference),
            );
            for c in &self.pairwise {
                push(
                    &mut out,
                    format!(
                        "  vs {:<20} W+ = {:>8.1}  p = {:.6}  holm p = {:.6}{}",
                        c.opponent,
                        c.statistic,
                        c.p_value,
                        c.holm_p,
                        if c.all_zero { "  (all tied)" } else { "" }
                    ),
                );
            }
        }
        let overall: Vec<&WtlRow> = self.wtl.iter().filter(|row| row.dim.is_none()).collect();
        if !overall.is_empty() {
            push(&mut out, String::new());
            push(
                &mut out,
                format!("Win/Tie/Loss at alpha = {} (reference wins):", self.alpha),
            );
            for row in overall {
                push(
                    &mut out,
                    format!(
                        "  vs {:<20} {}/{}/{}",
                        row.opponent, row.wins, row.ties, row.losses
                    ),
                );
            }
        }
        if !self.usage.is_empty() {
            push(&mut out, String::new());
            push(&mut out, "Operator usage by landscape family:".to_string());
            for usage in &self.usage {
                push(
                    &mut out,
                    format!(
                        "  {:<20} programs = {:<4} unique = {:<4} non-DE fraction = {:.3}",
                        usage.family, usage.programs, usage.unique_programs, usage.non_de_fraction
                    ),
                );
                for (index, frequency) in usage.frequencies.iter().enumerate() {
                    if *frequency > 0.0 {
                        let token = OperatorToken::from_index(index).expect("valid index");
                        push(
                            &mut out,
                            format!("    {:<28} {:.3}", token.name(), frequency),
                        );
                    }
                }
            }
        }
        out
    }

    /// Writes the rank, Holm, W/T/L, usage, and summary tables as CSV
    /// files under `dir`, returning the written paths.
    pub fn write_csv_tables(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();

        let summary_path = dir.join("summary.csv");
        let mut writer = csv::Writer::from_path(&summary_path)?;
        writer.write_record(["algorithm", "function", "dim", "count", "median", "mean", "std"])?;
        for s in &self.summaries {
            writer.write_record([
                s.algorithm.clone(),
                s.function.clone(),
                s.dim.to_string(),
                s.count.to_string(),
                s.median.to_string(),
                s.mean.to_string(),
                s.std.to_string(),
            ])?;
        }
        writer.flush()?;
        written.push(summary_path);

        let ranks_path = dir.join("ranks.csv");
        let mut writer = csv::Writer::from_path(&ranks_path)?;
        let mut header = vec!["function".to_string(), "dim".to_string()];
        header.extend(self.rank_table.algorithms.iter().cloned());
        writer.write_record(&header)?;
        for (row, (function, dim)) in self.rank_table.problems.iter().enumerate() {
            let mut fields = vec![function.clone(), dim.to_string()];
            for col in 0..self.rank_table.algorithms.len() {
                fields.push(self.rank_table.ranks[[row, col]].to_string());
            }
            writer.write_record(&fields)?;
        }
        let mut fields = vec!["mean_rank".to_string(), String::new()];
        fields.extend(self.rank_table.mean_ranks.iter().map(|r| r.to_string()));
        writer.write_record(&fields)?;
        writer.flush()?;
        written.push(ranks_path);

        let holm_path = dir.join("holm.csv");
        let mut writer = csv::Writer::from_path(&holm_path)?;
        writer.write_record(["opponent", "statistic", "p_value", "holm_p", "exact", "all_zero"])?;
        for c in &self.pairwise {
            writer.write_record([
                c.opponent.clone(),
                c.statistic.to_string(),
                c.p_value.to_string(),
                c.holm_p.to_string(),
                c.exact.to_string(),
                c.all_zero.to_string(),
            ])?;
        }
        writer.flush()?;
        written.push(holm_path);

        let wtl_path = dir.join("wtl.csv");
        let mut writer = csv::Writer::from_path(&wtl_path)?;
        writer.write_record(["opponent", "dim", "wins", "ties", "losses"])?;
        for row in &self.wtl {
            writer.write_record([
                row.opponent.clone(),
                row.dim.map_or_else(|| "all".to_string(), |d| d.to_string()),
                row.wins.to_string(),
                row.ties.to_string(),
                row.losses.to_string(),
            ])?;
        }
        writer.flush()?;
        written.push(wtl_path);

        let usage_path = dir.join("usage.csv");
        let mut writer = csv::Writer::from_path(&usage_path)?;
        let mut header = vec![
            "family".to_string(),
            "programs".to_string(),
            "unique_programs".to_string(),
            "non_de_fraction".to_string(),
        ];
        for index in 0..OPERATOR_COUNT {
            header.push(OperatorToken::from_index(index).expect("valid index").name().to_string());
        }
        writer.write_record(&header)?;
        for usage in &self.usage {
            let mut fields = vec![
                usage.family.clone(),
                usage.programs.to_string(),
                usage.unique_programs.to_string(),
                usage.non_de_fraction.to_string(),
            ];
            fields.extend(usage.frequencies.iter().map(|f| f.to_string()));
            writer.write_record(&fields)?;
        }
        writer.flush()?;
        written.push(usage_path);

        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(algorithm: &str, function: &str, dim: usize, seed: u64, value: f64) -> RunRecord {
        RunRecord {
            algorithm: algorithm.to_string(),
            function: function.to_string(),
            dim,
            seed,
            final_best: value,
            trace_path: None,
        }
    }

    #[test]
    fn median_handles_odd_even_and_singleton() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&[7.0]), 7.0);
    }

    #[test]
    fn summarize_matches_hand_arithmetic() {
        let records = vec![
            record("a", "f", 10, 0, 1.0),
            record("a", "f", 10, 1, 1.0),
            record("a", "f", 10, 2, 100.0),
            record("b", "f", 10, 0, 5.0),
        ];
        let summaries = summarize(&records);
        assert_eq!(summaries.len(), 2);
        let a = &summaries[0];
        assert_eq!(a.algorithm, "a");
        assert_eq!(a.median, 1.0);
        assert_eq!(a.mean, 34.0);
        assert_eq!(a.count, 3);
        let b = &summaries[1];
        assert_eq!(b.count, 1);
        assert_eq!(b.median, 5.0);
        assert_eq!(b.mean, 5.0);
        assert_eq!(b.std, 0.0);
    }

    #[test]
    fn rank_rows_sum_to_the_triangular_number() {
        let records = vec![
            record("a", "f1", 10, 0, 1.0),
            record("b", "f1", 10, 0, 2.0),
            record("c", "f1", 10, 0, 2.0),
            record("a", "f2", 10, 0, 9.0),
            record("b", "f2", 10, 0, 5.0),
            record("c", "f2", 10, 0, 1.0),
        ];
        let algorithms = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let table = rank_table(&records, &algorithms).unwrap();
        for row in table.ranks.rows() {
            assert!((row.sum() - 6.0).abs() < 1e-12);
        }
        // f1: a=1, b and c tie for 2.5.
        assert_eq!(table.ranks[[0, 0]], 1.0);
        assert_eq!(table.ranks[[0, 1]], 2.5);
        assert_eq!(table.ranks[[0, 2]], 2.5);
    }

    #[test]
    fn rank_table_rejects_missing_cells() {
        let records = vec![record("a", "f1", 10, 0, 1.0)];
        let algorithms = vec!["a".to_string(), "b".to_string()];
        let err = rank_table(&records, &algorithms).unwrap_err();
        assert!(matches!(err, CoreError::PairingMismatch(_)));
    }

    #[test]
    fn identical_records_give_all_ties() {
        let mut records = Vec::new();
        for problem in ["f1", "f2", "f3"] {
            for seed in 0..6u64 {
                records.push(record("ref", problem, 10, seed, seed as f64));
                records.push(record("opp", problem, 10, seed, seed as f64));
            }
        }
        let rows = win_tie_loss(&records, "ref", 0.05).unwrap();
        for row in rows {
            assert_eq!(row.wins, 0);
            assert_eq!(row.losses, 0);
            assert_eq!(
                row.ties,
                if row.dim.is_none() { 3 } else { 3 },
                "row {row:?}"
            );
        }
    }

    #[test]
    fn dominant_reference_wins_every_problem() {
        // 12 seeds so the exact test reaches p = 2/4096 < 0.05.
        let mut records = Vec::new();
        for problem in ["f1", "f2", "f3", "f4"] {
            for seed in 0..12u64 {
                records.push(record("ref", problem, 10, seed, seed as f64));
                records.push(record("opp", problem, 10, seed, seed as f64 + 10.0));
            }
        }
        let rows = win_tie_loss(&records, "ref", 0.05).unwrap();
        let overall = rows.iter().find(|r| r.dim.is_none()).unwrap();
        assert_eq!(overall.wins, 4);
        assert_eq!(overall.ties, 0);
        assert_eq!(overall.losses, 0);
        // Partition property.
        assert_eq!(overall.wins + overall.ties + overall.losses, 4);
    }

    #[test]
    fn seed_misalignment_is_an_error() {
        let records = vec![
            record("ref", "f1", 10, 0, 1.0),
            record("opp", "f1", 10, 1, 2.0),
        ];
        let err = win_tie_loss(&records, "ref", 0.05).unwrap_err();
        assert!(matches!(err, CoreError::PairingMismatch(_)));
    }

    #[test]
    fn operator_usage_counts_match_the_hand_example() {
        let de_best = OperatorToken::from_index(1).unwrap();
        let de_rand = OperatorToken::from_index(0).unwrap();
        let logs = vec![
            ProgramLogEntry {
                family: "sphere".to_string(),
                tokens: vec![de_best, de_best, de_rand],
            };
            5
        ];
        let usage = operator_usage(&logs);
        assert_eq!(usage.len(), 1);
        let u = &usage[0];
        assert_eq!(u.programs, 5);
        assert_eq!(u.unique_programs, 1);
        assert!((u.frequencies[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!((u.frequencies[0] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(u.non_de_fraction, 0.0);
        let total: f64 = u.frequencies.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn a_restart_token_raises_the_non_de_fraction() {
        let de = OperatorToken::from_index(0).unwrap();
        let restart = OperatorToken::from_index(6).unwrap();
        let mut logs = vec![ProgramLogEntry {
            family: "sphere".to_string(),
            tokens: vec![de, de, de],
        }];
        let before = operator_usage(&logs)[0].non_de_fraction;
        logs.push(ProgramLogEntry {
            family: "sphere".to_string(),
            tokens: vec![de, restart, de],
        });
        let after = operator_usage(&logs)[0].non_de_fraction;
        assert!(after > before);
        assert_eq!(operator_usage(&logs)[0].unique_programs, 2);
    }

    #[test]
    fn records_round_trip_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.csv");
        let records = vec![
            RunRecord {
                trace_path: Some("trace/a.csv".to_string()),
                ..record("a", "sphere/0", 10, 3, 0.125)
            },
            record("b", "rastrigin/1", 30, 4, 17.5),
        ];
        write_records(&records, &path).unwrap();
        let loaded = read_records(&path).unwrap();
        assert_eq!(loaded, records);
    }

    #[test]
    fn report_build_produces_consistent_tables() {
        let mut records = Vec::new();
        for (problem, offsets) in [("f1", [0.0, 1.0, 2.0]), ("f2", [0.5, 0.0, 1.0])] {
            for seed in 0..12u64 {
                records.push(record("opal", problem, 10, seed, seed as f64 + offsets[0]));
                records.push(record("de", problem, 10, seed, seed as f64 + offsets[1]));
                records.push(record("pso", problem, 10, seed, seed as f64 + offsets[2]));
            }
        }
        let report = BenchReport::build(&records, "opal", 0.05, &[]).unwrap();
        assert_eq!(report.algorithms[0], "opal");
        assert_eq!(report.algorithms.len(), 3);
        assert_eq!(report.pairwise.len(), 2);
        assert!(report.friedman.is_some());
        for c in &report.pairwise {
            assert!(c.holm_p >= c.p_value - 1e-15);
        }
        let text = report.to_text();
        assert!(text.contains("Friedman"));
        assert!(text.contains("Mean ranks"));

        let dir = tempfile::tempdir().unwrap();
        let written = report.write_csv_tables(dir.path()).unwrap();
        assert_eq!(written.len(), 5);
        for path in written {
            assert!(path.exists(), "{path:?} missing");
        }
    }

    #[test]
    fn report_requires_the_reference_to_exist() {
        let records = vec![record("a", "f", 10, 0, 1.0)];
        assert!(BenchReport::build(&records, "missing", 0.05, &[]).is_err());
    }
}
