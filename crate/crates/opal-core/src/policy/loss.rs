//! Scalar training loss and its reverse-mode gradient.
//!
//! The loss treats the decoded tokens as fixed choices (a score-function
//! estimator): only the log-probabilities, entropies, and auxiliary
//! cross-entropy are differentiated, each analytically through its
//! softmax. The combined objective is
//! `-advantage * log_prob - entropy_weight * entropy + aux_weight * cross_entropy`.

use ndarray::ArrayView2;

use crate::env::LandscapeLabel;
use crate::error::{CoreError, Result};
use crate::ops::OperatorToken;
use crate::policy::forward::{forward, ForwardPass};
use crate::policy::params::{PolicyParams, PHASE_COUNT};
use crate::policy::tape::Var;

const PICK_LABELS: [&str; PHASE_COUNT] = ["chosen_lp_0", "chosen_lp_1", "chosen_lp_2"];
const PROB_LABELS: [&str; PHASE_COUNT] = ["probs_0", "probs_1", "probs_2"];
const PLOGP_LABELS: [&str; PHASE_COUNT] = ["p_log_p_0", "p_log_p_1", "p_log_p_2"];
const NEG_ENT_LABELS: [&str; PHASE_COUNT] = ["neg_entropy_0", "neg_entropy_1", "neg_entropy_2"];

/// Appends the loss nodes for fixed `tokens` to a completed forward pass
/// and returns the scalar loss node.
pub fn attach_loss(
    pass: &mut ForwardPass,
    tokens: &[OperatorToken],
    advantage: f64,
    entropy_weight: f64,
    aux_weight: f64,
    label: Option<LandscapeLabel>,
) -> Result<Var> {
    if tokens.len() != PHASE_COUNT {
        return Err(CoreError::InvalidConfig {
            field: "tokens",
            message: format!("expected {PHASE_COUNT} tokens, got {}", tokens.len()),
        });
    }
    if !advantage.is_finite() {
        return Err(CoreError::NonFinite { tensor: "advantage" });
    }

    // Σ_p log π_p(chosen token).
    let mut log_prob: Option<Var> = None;
    for (phase, token) in tokens.iter().enumerate() {
        let lp = pass.phase_log_probs[phase];
        let picked = pass.tape.pick(lp, token.index(), PICK_LABELS[phase])?;
        log_prob = Some(match log_prob {
            None => picked,
            Some(acc) => pass.tape.add(acc, picked, "log_prob_total")?,
        });
    }
    let log_prob = log_prob.expect("at least one phase");

    // Σ_p H(π_p) with H = -Σ_o π(o)·log π(o).
    let mut entropy: Option<Var> = None;
    for phase in 0..PHASE_COUNT {
        let lp = pass.phase_log_probs[phase];
        let probs = pass.tape.exp(lp, PROB_LABELS[phase])?;
        let p_log_p = pass.tape.mul(probs, lp, PLOGP_LABELS[phase])?;
        let neg_entropy = pass.tape.sum(p_log_p, NEG_ENT_LABELS[phase])?;
        let h = pass.tape.scale(neg_entropy, -1.0, "phase_entropy")?;
        entropy = Some(match entropy {
            None => h,
            Some(acc) => pass.tape.add(acc, h, "entropy_total")?,
        });
    }
    let entropy = entropy.expect("at least one phase");

    let reinforce = pass.tape.scale(log_prob, -advantage, "reinforce_term")?;
    let exploration = pass.tape.scale(entropy, -entropy_weight, "entropy_term")?;
    let mut loss = pass.tape.add(reinforce, exploration, "policy_loss")?;

    if let Some(label) = label {
        let aux_lp = pass.tape.log_softmax(pass.aux_logits, "aux_log_probs")?;
        let picked = pass.tape.pick(aux_lp, label.index(), "aux_chosen_lp")?;
        let cross_entropy = pass.tape.scale(picked, -1.0, "aux_cross_entropy")?;
        let weighted = pass.tape.scale(cross_entropy, aux_weight, "aux_term")?;
        loss = pass.tape.add(loss, weighted, "total_loss")?;
    }
    Ok(loss)
}

/// Runs a forward pass over node features `h` and adjacency `a`, attaches
/// the loss for fixed `tokens`, and returns the loss value with its
/// gradient in [`PolicyParams::flatten`] order.
#[allow(clippy::too_many_arguments)]
pub fn loss_and_gradient(
    h: ArrayView2<f64>,
    a: ArrayView2<f64>,
    params: &PolicyParams,
    tokens: &[OperatorToken],
    advantage: f64,
    entropy_weight: f64,
    aux_weight: f64,
    label: Option<LandscapeLabel>,
) -> Result<(f64, Vec<f64>)> {
    let mut pass = forward(h, a, params)?;
    let loss = attach_loss(
        &mut pass,
        tokens,
        advantage,
        entropy_weight,
        aux_weight,
        label,
    )?;
    let grads = pass.tape.backward(loss)?;
    Ok((pass.tape.scalar(loss), pass.parameter_gradient(&grads)))
}
