//! The operator vocabulary, population state, budget-accounted executor, and
//! baseline optimizers.
//!
//! An optimizer program is a short list of [`OperatorCall`]s. The executor
//! applies the calls cyclically, charging each application's
//! function-evaluation cost against the run budget, until the budget is
//! spent. Each operator is a population transition `(state, env) -> state'`
//! that clips every candidate into the domain before evaluating it and
//! reports the evaluations it actually performed.

mod apply;
mod executor;
mod population;
mod probes;

pub use apply::apply_operator;
pub use executor::{execute_program, RunTrace};
pub use population::PopulationState;
pub use probes::{de_baseline, design_phase, pso_baseline, DesignResult};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Default population size used by the design phase, executor operators, and
/// baselines.
pub const DEFAULT_POPULATION: usize = 50;

/// Default differential-evolution scale factor.
pub const DEFAULT_DE_F: f64 = 0.7;

/// Default differential-evolution crossover rate.
pub const DEFAULT_DE_CR: f64 = 0.9;

/// Number of operators in the vocabulary.
pub const OPERATOR_COUNT: usize = 8;

/// The eight-operator vocabulary the policy decodes programs from.
///
/// Token order is fixed; it defines the index layout of the policy's
/// categorical heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorToken {
    /// DE/rand/1 mutation with binomial crossover and greedy selection.
    DeRand1Bin,
    /// DE/best/1 mutation with binomial crossover and greedy selection.
    DeBest1Bin,
    /// Uniform crossover over random disjoint pairs; children replace their
    /// parents greedily.
    UniformCrossoverPairs,
    /// One global-best particle-swarm step with velocity clamping.
    PsoGlobalStep,
    /// Per-individual Gaussian perturbation with greedy selection.
    GaussianMutationSelf,
    /// Gaussian samples around the best; each replaces the current worst on
    /// strict improvement.
    GaussianMutationBest,
    /// Reinitializes the worst fraction of the population uniformly.
    RestartWorstFraction,
    /// Axis-wise probe pair around the best with first-improvement moves.
    LocalSearchBestAxis,
}

impl OperatorToken {
    /// All tokens in head-index order.
    pub const ALL: [OperatorToken; OPERATOR_COUNT] = [
        OperatorToken::DeRand1Bin,
        OperatorToken::DeBest1Bin,
        OperatorToken::UniformCrossoverPairs,
        OperatorToken::PsoGlobalStep,
        OperatorToken::GaussianMutationSelf,
        OperatorToken::GaussianMutationBest,
        OperatorToken::RestartWorstFraction,
        OperatorToken::LocalSearchBestAxis,
    ];

    /// Canonical lowercase name used in program text and logs.
    pub fn name(&self) -> &'static str {
        match self {
            OperatorToken::DeRand1Bin => "de_rand_1_bin",
            OperatorToken::DeBest1Bin => "de_best_1_bin",
            OperatorToken::UniformCrossoverPairs => "uniform_crossover_pairs",
            OperatorToken::PsoGlobalStep => "pso_global_step",
            OperatorToken::GaussianMutationSelf => "gaussian_mutation_self",
            OperatorToken::GaussianMutationBest => "gaussian_mutation_best",
            OperatorToken::RestartWorstFraction => "restart_worst_fraction",
            OperatorToken::LocalSearchBestAxis => "local_search_best_axis",
        }
    }

    /// Head index of this token.
    pub fn index(&self) -> usize {
        Self::ALL.iter().position(|t| t == self).expect("in table")
    }

    /// Token at a head index.
    pub fn from_index(i: usize) -> Option<OperatorToken> {
        Self::ALL.get(i).copied()
    }

    /// Whether the token is one of the two differential-evolution moves.
    pub fn is_de(&self) -> bool {
        matches!(self, OperatorToken::DeRand1Bin | OperatorToken::DeBest1Bin)
    }

    /// Hyperparameter names this token reads from its `theta` map.
    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            OperatorToken::DeRand1Bin | OperatorToken::DeBest1Bin => &["F", "CR"],
            OperatorToken::UniformCrossoverPairs => &["q_pair"],
            OperatorToken::PsoGlobalStep => &["w", "c1", "c2", "v_max_frac"],
            OperatorToken::GaussianMutationSelf => &["sigma"],
            OperatorToken::GaussianMutationBest => &["sigma", "n_samp"],
            OperatorToken::RestartWorstFraction => &["q_restart"],
            OperatorToken::LocalSearchBestAxis => &["delta"],
        }
    }

    /// Default hyperparameters. `n_samp` for [`OperatorToken::GaussianMutationBest`]
    /// is intentionally absent: it resolves to the population size at
    /// application time.
    pub fn default_theta(&self) -> BTreeMap<String, f64> {
        let pairs: &[(&str, f64)] = match self {
            OperatorToken::DeRand1Bin | OperatorToken::DeBest1Bin => {
                &[("F", DEFAULT_DE_F), ("CR", DEFAULT_DE_CR)]
            }
            OperatorToken::UniformCrossoverPairs => &[("q_pair", 0.5)],
            OperatorToken::PsoGlobalStep => {
                &[("w", 0.7), ("c1", 1.5), ("c2", 1.5), ("v_max_frac", 0.2)]
            }
            OperatorToken::GaussianMutationSelf => &[("sigma", 0.1)],
            OperatorToken::GaussianMutationBest => &[("sigma", 0.05)],
            OperatorToken::RestartWorstFraction => &[("q_restart", 0.2)],
            OperatorToken::LocalSearchBestAxis => &[("delta", 0.01)],
        };
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }
}

impl fmt::Display for OperatorToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorToken {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|t| t.name() == s)
            .ok_or_else(|| CoreError::UnknownToken(s.to_string()))
    }
}

/// One operator application: a token plus its hyperparameter overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorCall {
    /// Which operator to apply.
    pub token: OperatorToken,
    /// Hyperparameters; keys must be a subset of
    /// [`OperatorToken::param_names`]. Missing keys use defaults.
    pub theta: BTreeMap<String, f64>,
}

impl OperatorCall {
    /// A call with the token's default hyperparameters.
    pub fn with_defaults(token: OperatorToken) -> OperatorCall {
        OperatorCall {
            token,
            theta: token.default_theta(),
        }
    }

    /// Reads a hyperparameter, falling back to `default`.
    pub fn theta_or(&self, key: &str, default: f64) -> f64 {
        self.theta.get(key).copied().unwrap_or(default)
    }

    /// Checks that every theta key is declared by the token.
    pub fn validate(&self) -> Result<()> {
        for key in self.theta.keys() {
            if !self.token.param_names().contains(&key.as_str()) {
                return Err(CoreError::InvalidConfig {
                    field: "theta",
                    message: format!("operator `{}` has no parameter `{key}`", self.token),
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for OperatorCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.token)?;
        for (k, v) in &self.theta {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

impl FromStr for OperatorCall {
    type Err = CoreError;

    fn from_str(line: &str) -> Result<Self> {
        let mut parts = line.split_whitespace();
        let token: OperatorToken = parts
            .next()
            .ok_or_else(|| CoreError::UnknownToken(String::new()))?
            .parse()?;
        let mut theta = BTreeMap::new();
        for kv in parts {
            let (k, v) = kv.split_once('=').ok_or_else(|| CoreError::InvalidConfig {
                field: "theta",
                message: format!("expected key=value, got `{kv}`"),
            })?;
            let value: f64 = v.parse().map_err(|_| CoreError::InvalidConfig {
                field: "theta",
                message: format!("invalid number `{v}` for `{k}`"),
            })?;
            theta.insert(k.to_string(), value);
        }
        let call = OperatorCall { token, theta };
        call.validate()?;
        Ok(call)
    }
}

/// An optimizer program: an ordered list of operator calls, applied
/// cyclically by the executor.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OperatorProgram {
    /// The calls in application order.
    pub calls: Vec<OperatorCall>,
}

impl OperatorProgram {
    /// A program from bare tokens with default hyperparameters.
    pub fn from_tokens(tokens: &[OperatorToken]) -> OperatorProgram {
        OperatorProgram {
            calls: tokens.iter().map(|&t| OperatorCall::with_defaults(t)).collect(),
        }
    }

    /// Number of calls.
    pub fn len(&self) -> usize {
        self.calls.len()
    }

    /// Whether the program has no calls.
    pub fn is_empty(&self) -> bool {
        self.calls.is_empty()
    }

    /// Token sequence, without hyperparameters.
    pub fn tokens(&self) -> Vec<OperatorToken> {
        self.calls.iter().map(|c| c.token).collect()
    }

    /// Renders the one-call-per-line text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for call in &self.calls {
            out.push_str(&call.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses the one-call-per-line text format (blank lines ignored).
    pub fn from_text(text: &str) -> Result<OperatorProgram> {
        let calls = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(OperatorCall::from_str)
            .collect::<Result<Vec<_>>>()?;
        Ok(OperatorProgram { calls })
    }
}

impl fmt::Display for OperatorProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
