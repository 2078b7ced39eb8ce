//! Turning phase distributions into a concrete three-call operator
//! program, by categorical sampling (training) or argmax (evaluation).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ops::{OperatorProgram, OperatorToken};
use crate::policy::forward::ForwardPass;
use crate::policy::params::PHASE_COUNT;

/// How tokens are chosen from the per-phase distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    /// Draw one token per phase from its categorical distribution.
    Sample,
    /// Take the most probable token per phase (lowest index on ties).
    Greedy,
}

/// A decoded program together with the quantities the training loop needs.
#[derive(Debug, Clone)]
pub struct PolicyOutput {
    /// One operator call per phase, with default parameters attached.
    pub program: OperatorProgram,
    /// The chosen tokens in phase order.
    pub tokens: Vec<OperatorToken>,
    /// Sum over phases of the chosen token's log probability (≤ 0).
    pub log_prob: f64,
    /// Sum of per-phase categorical entropies, in [0, 3·ln 8].
    pub entropy: f64,
    /// Pooled trajectory embedding.
    pub embedding: Vec<f64>,
    /// Raw auxiliary-classifier logits.
    pub aux_logits: Vec<f64>,
}

/// Inverse-CDF draw from a probability row.
fn sample_index(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return i;
        }
    }
    probs.len() - 1
}

/// Argmax with ties resolved toward the lowest index.
fn greedy_index(probs: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// Chooses one token per phase from a completed forward pass.
pub fn decode(pass: &ForwardPass, mode: DecodeMode, rng: &mut impl Rng) -> PolicyOutput {
    debug_assert_eq!(pass.phase_log_probs.len(), PHASE_COUNT);
    let mut tokens = Vec::with_capacity(PHASE_COUNT);
    let mut log_prob = 0.0;
    let mut entropy = 0.0;
    for &lp_var in &pass.phase_log_probs {
        let log_probs = pass.tape.value(lp_var);
        let probs: Vec<f64> = log_probs.row(0).iter().map(|&lp| lp.exp()).collect();
        let choice = match mode {
            DecodeMode::Sample => sample_index(&probs, rng),
            DecodeMode::Greedy => greedy_index(&probs),
        };
        tokens.push(OperatorToken::from_index(choice).expect("phase head width"));
        log_prob += log_probs[[0, choice]];
        entropy -= log_probs
            .row(0)
            .iter()
            .map(|&lp| lp.exp() * lp)
            .sum::<f64>();
    }
    PolicyOutput {
        program: OperatorProgram::from_tokens(&tokens),
        tokens,
        log_prob,
        entropy,
        embedding: pass.embedding_values(),
        aux_logits: pass.aux_logit_values(),
    }
}
