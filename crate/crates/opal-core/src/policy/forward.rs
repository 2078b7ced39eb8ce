//! Tape-recorded forward pass: message-passing encoder, mean pooling,
//! per-phase categorical heads, and the auxiliary landscape classifier.

use ndarray::{Array2, ArrayView2};

use crate::error::{CoreError, Result};
use crate::policy::params::{PolicyParams, ENCODER_LAYERS, PHASE_COUNT};
use crate::policy::tape::{Tape, Var};

const ENC_W_LABELS: [&str; ENCODER_LAYERS] = ["encoder_w0", "encoder_w1", "encoder_w2"];
const ENC_B_LABELS: [&str; ENCODER_LAYERS] = ["encoder_b0", "encoder_b1", "encoder_b2"];
const ENC_MSG_LABELS: [&str; ENCODER_LAYERS] = ["messages_0", "messages_1", "messages_2"];
const ENC_LIN_LABELS: [&str; ENCODER_LAYERS] = ["linear_0", "linear_1", "linear_2"];
const ENC_PRE_LABELS: [&str; ENCODER_LAYERS] = ["pre_act_0", "pre_act_1", "pre_act_2"];
const ENC_ACT_LABELS: [&str; ENCODER_LAYERS] = ["hidden_0", "hidden_1", "hidden_2"];
const HEAD_W_LABELS: [&str; PHASE_COUNT] = ["head_w0", "head_w1", "head_w2"];
const HEAD_B_LABELS: [&str; PHASE_COUNT] = ["head_b0", "head_b1", "head_b2"];
const HEAD_LIN_LABELS: [&str; PHASE_COUNT] = ["phase_linear_0", "phase_linear_1", "phase_linear_2"];
const HEAD_LOGIT_LABELS: [&str; PHASE_COUNT] = ["phase_logits_0", "phase_logits_1", "phase_logits_2"];
const HEAD_LP_LABELS: [&str; PHASE_COUNT] =
    ["phase_log_probs_0", "phase_log_probs_1", "phase_log_probs_2"];

/// A completed forward pass whose tape can be extended with loss nodes.
pub struct ForwardPass {
    /// The recording; loss construction appends to it.
    pub tape: Tape,
    /// Parameter leaves in flat order, for gradient extraction.
    param_vars: Vec<Var>,
    param_sizes: Vec<usize>,
    /// Per-phase log-probability rows (`1 x OPERATOR_COUNT`).
    pub phase_log_probs: Vec<Var>,
    /// Raw auxiliary-classifier logits (`1 x AUX_CLASSES`).
    pub aux_logits: Var,
    /// Pooled trajectory embedding (`1 x hidden_dim`).
    pub embedding: Var,
}

/// Row-normalizes an adjacency matrix so each row averages over the
/// closed neighborhood. Requires self-loops (every row degree positive).
pub fn normalized_adjacency(a: ArrayView2<f64>) -> Result<Array2<f64>> {
    let mut out = a.to_owned();
    for mut row in out.rows_mut() {
        let degree = row.sum();
        if degree <= 0.0 {
            return Err(CoreError::InvalidConfig {
                field: "adjacency",
                message: "every node needs a self-loop (zero row degree found)".into(),
            });
        }
        row /= degree;
    }
    Ok(out)
}

/// Runs the encoder, phase heads, and auxiliary head over node features
/// `h` (`N x input_dim`) under adjacency `a` (`N x N`), recording every
/// step on a fresh tape.
pub fn forward(h: ArrayView2<f64>, a: ArrayView2<f64>, params: &PolicyParams) -> Result<ForwardPass> {
    let n = h.nrows();
    if a.dim() != (n, n) {
        return Err(CoreError::InvalidConfig {
            field: "adjacency",
            message: format!("adjacency is {:?} but features have {n} rows", a.dim()),
        });
    }
    if h.ncols() != params.arch.input_dim {
        return Err(CoreError::InvalidConfig {
            field: "features",
            message: format!(
                "features have {} columns, architecture expects {}",
                h.ncols(),
                params.arch.input_dim
            ),
        });
    }
    if n == 0 {
        return Err(CoreError::EmptyTrajectory);
    }

    let mut tape = Tape::new();
    let mut param_vars = Vec::new();
    let mut param_sizes = Vec::new();
    let mut track = |tape: &mut Tape, value: Array2<f64>, label: &'static str| -> Result<Var> {
        let var = tape.leaf(value, label)?;
        param_vars.push(var);
        param_sizes.push(tape.value(var).len());
        Ok(var)
    };

    // Parameter leaves, registered in flat order.
    let mut enc_w = Vec::with_capacity(ENCODER_LAYERS);
    let mut enc_b = Vec::with_capacity(ENCODER_LAYERS);
    for layer in 0..ENCODER_LAYERS {
        enc_w.push(track(&mut tape, params.encoder_w[layer].clone(), ENC_W_LABELS[layer])?);
        enc_b.push(track(&mut tape, params.encoder_b[layer].clone(), ENC_B_LABELS[layer])?);
    }
    let mut head_w = Vec::with_capacity(PHASE_COUNT);
    let mut head_b = Vec::with_capacity(PHASE_COUNT);
    for phase in 0..PHASE_COUNT {
        head_w.push(track(&mut tape, params.head_w[phase].clone(), HEAD_W_LABELS[phase])?);
        head_b.push(track(&mut tape, params.head_b[phase].clone(), HEAD_B_LABELS[phase])?);
    }
    let aux_w1 = track(&mut tape, params.aux_w1.clone(), "aux_w1")?;
    let aux_b1 = track(&mut tape, params.aux_b1.clone(), "aux_b1")?;
    let aux_w2 = track(&mut tape, params.aux_w2.clone(), "aux_w2")?;
    let aux_b2 = track(&mut tape, params.aux_b2.clone(), "aux_b2")?;

    // Encoder: per layer, average neighbor states, project, shift, relu.
    let a_hat = tape.leaf(normalized_adjacency(a)?, "normalized_adjacency")?;
    let mut hidden = tape.leaf(h.to_owned(), "node_features")?;
    for layer in 0..ENCODER_LAYERS {
        let messages = tape.matmul(a_hat, hidden, ENC_MSG_LABELS[layer])?;
        let linear = tape.matmul(messages, enc_w[layer], ENC_LIN_LABELS[layer])?;
        let pre = tape.add_row(linear, enc_b[layer], ENC_PRE_LABELS[layer])?;
        hidden = tape.relu(pre, ENC_ACT_LABELS[layer])?;
    }
    let embedding = tape.mean_rows(hidden, "embedding")?;

    // Phase heads: linear map on the embedding, then log-softmax.
    let mut phase_log_probs = Vec::with_capacity(PHASE_COUNT);
    for phase in 0..PHASE_COUNT {
        let linear = tape.matmul(embedding, head_w[phase], HEAD_LIN_LABELS[phase])?;
        let logits = tape.add_row(linear, head_b[phase], HEAD_LOGIT_LABELS[phase])?;
        phase_log_probs.push(tape.log_softmax(logits, HEAD_LP_LABELS[phase])?);
    }

    // Auxiliary classifier: one hidden relu layer, then raw class logits.
    let aux_lin1 = tape.matmul(embedding, aux_w1, "aux_linear_1")?;
    let aux_pre1 = tape.add_row(aux_lin1, aux_b1, "aux_pre_act")?;
    let aux_hidden = tape.relu(aux_pre1, "aux_hidden")?;
    let aux_lin2 = tape.matmul(aux_hidden, aux_w2, "aux_linear_2")?;
    let aux_logits = tape.add_row(aux_lin2, aux_b2, "aux_logits")?;

    Ok(ForwardPass {
        tape,
        param_vars,
        param_sizes,
        phase_log_probs,
        aux_logits,
        embedding,
    })
}

impl ForwardPass {
    /// Flattens a backward-pass result into a gradient vector aligned with
    /// [`PolicyParams::flatten`].
    pub fn parameter_gradient(&self, grads: &[Array2<f64>]) -> Vec<f64> {
        let total: usize = self.param_sizes.iter().sum();
        let mut flat = Vec::with_capacity(total);
        for &var in &self.param_vars {
            flat.extend(self.tape.grad_of(grads, var).iter().copied());
        }
        flat
    }

    /// The embedding as a plain row.
    pub fn embedding_values(&self) -> Vec<f64> {
        self.tape.value(self.embedding).row(0).to_vec()
    }

    /// The raw auxiliary logits as a plain row.
    pub fn aux_logit_values(&self) -> Vec<f64> {
        self.tape.value(self.aux_logits).row(0).to_vec()
    }

    /// Per-phase probability rows (softmax of the recorded log-probs).
    pub fn phase_probabilities(&self) -> Vec<Vec<f64>> {
        self.phase_log_probs
            .iter()
            .map(|&lp| self.tape.value(lp).row(0).mapv(f64::exp).to_vec())
            .collect()
    }

    /// Index of the auxiliary head's most probable class (lowest index on
    /// ties).
    pub fn aux_prediction(&self) -> usize {
        let logits = self.tape.value(self.aux_logits);
        let mut best = 0usize;
        for i in 1..logits.ncols() {
            if logits[[0, i]] > logits[[0, best]] {
                best = i;
            }
        }
        best
    }
}

/// Convenience: mean-pooled embedding without keeping the tape around.
pub fn embed(h: ArrayView2<f64>, a: ArrayView2<f64>, params: &PolicyParams) -> Result<Vec<f64>> {
    Ok(forward(h, a, params)?.embedding_values())
}
