//! Policy parameter container: shapes, initialization, and flat-vector
//! round-tripping for the optimizer and checkpoint formats.

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::graph::FEATURE_COUNT;
use crate::ops::OPERATOR_COUNT;

/// Number of scheduling phases a decoded program covers.
pub const PHASE_COUNT: usize = 3;
/// Hidden width of the auxiliary classification head.
pub const AUX_HIDDEN: usize = 32;
/// Number of classes predicted by the auxiliary head.
pub const AUX_CLASSES: usize = 4;
/// Number of stacked message-passing layers in the encoder.
pub const ENCODER_LAYERS: usize = 3;

/// Structural hyperparameters of the policy network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyArch {
    /// Node-feature dimension fed to the first encoder layer.
    pub input_dim: usize,
    /// Hidden width shared by the encoder layers and the embedding.
    pub hidden_dim: usize,
}

impl PolicyArch {
    /// Architecture with the default 64-wide hidden layers.
    pub fn with_hidden(hidden_dim: usize) -> PolicyArch {
        PolicyArch {
            input_dim: FEATURE_COUNT,
            hidden_dim,
        }
    }

    /// Rejects degenerate shapes.
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(CoreError::InvalidConfig {
                field: "input_dim",
                message: "node feature dimension must be positive".into(),
            });
        }
        if self.hidden_dim == 0 {
            return Err(CoreError::InvalidConfig {
                field: "hidden_dim",
                message: "hidden width must be positive".into(),
            });
        }
        Ok(())
    }

    /// Total number of scalar parameters for this architecture.
    pub fn param_count(&self) -> usize {
        let (i, h) = (self.input_dim, self.hidden_dim);
        let encoder = (i * h + h) + (ENCODER_LAYERS - 1) * (h * h + h);
        let heads = PHASE_COUNT * (h * OPERATOR_COUNT + OPERATOR_COUNT);
        let aux = h * AUX_HIDDEN + AUX_HIDDEN + AUX_HIDDEN * AUX_CLASSES + AUX_CLASSES;
        encoder + heads + aux
    }
}

impl Default for PolicyArch {
    fn default() -> Self {
        PolicyArch::with_hidden(64)
    }
}

/// All learnable weights of the policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    /// Structural shapes the weights conform to.
    pub arch: PolicyArch,
    /// Encoder layer weights, one `in x hidden` matrix per layer.
    pub encoder_w: Vec<Array2<f64>>,
    /// Encoder layer biases, one `1 x hidden` row per layer.
    pub encoder_b: Vec<Array2<f64>>,
    /// Per-phase head weights, `hidden x OPERATOR_COUNT`.
    pub head_w: Vec<Array2<f64>>,
    /// Per-phase head biases, `1 x OPERATOR_COUNT`.
    pub head_b: Vec<Array2<f64>>,
    /// First auxiliary layer weight, `hidden x AUX_HIDDEN`.
    pub aux_w1: Array2<f64>,
    /// First auxiliary layer bias, `1 x AUX_HIDDEN`.
    pub aux_b1: Array2<f64>,
    /// Second auxiliary layer weight, `AUX_HIDDEN x AUX_CLASSES`.
    pub aux_w2: Array2<f64>,
    /// Second auxiliary layer bias, `1 x AUX_CLASSES`.
    pub aux_b2: Array2<f64>,
}

/// Uniform Glorot draw for a `rows x cols` weight matrix.
fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-limit..limit))
}

impl PolicyParams {
    /// Glorot-initialized weights with zero biases.
    pub fn init(arch: PolicyArch, rng: &mut impl Rng) -> Result<PolicyParams> {
        arch.validate()?;
        let (i, h) = (arch.input_dim, arch.hidden_dim);
        let mut encoder_w = Vec::with_capacity(ENCODER_LAYERS);
        let mut encoder_b = Vec::with_capacity(ENCODER_LAYERS);
        for layer in 0..ENCODER_LAYERS {
            let fan_in = if layer == 0 { i } else { h };
            encoder_w.push(glorot(fan_in, h, rng));
            encoder_b.push(Array2::zeros((1, h)));
        }
        let mut head_w = Vec::with_capacity(PHASE_COUNT);
        let mut head_b = Vec::with_capacity(PHASE_COUNT);
        for _ in 0..PHASE_COUNT {
            head_w.push(glorot(h, OPERATOR_COUNT, rng));
            head_b.push(Array2::zeros((1, OPERATOR_COUNT)));
        }
        Ok(PolicyParams {
            arch,
            encoder_w,
            encoder_b,
            head_w,
            head_b,
            aux_w1: glorot(h, AUX_HIDDEN, rng),
            aux_b1: Array2::zeros((1, AUX_HIDDEN)),
            aux_w2: glorot(AUX_HIDDEN, AUX_CLASSES, rng),
            aux_b2: Array2::zeros((1, AUX_CLASSES)),
        })
    }

    /// Visits every tensor in the fixed flattening order.
    fn tensors(&self) -> Vec<&Array2<f64>> {
        let mut out: Vec<&Array2<f64>> = Vec::new();
        for layer in 0..ENCODER_LAYERS {
            out.push(&self.encoder_w[layer]);
            out.push(&self.encoder_b[layer]);
        }
        for phase in 0..PHASE_COUNT {
            out.push(&self.head_w[phase]);
            out.push(&self.head_b[phase]);
        }
        out.push(&self.aux_w1);
        out.push(&self.aux_b1);
        out.push(&self.aux_w2);
        out.push(&self.aux_b2);
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut out: Vec<&mut Array2<f64>> = Vec::new();
        for pair in self.encoder_w.iter_mut().zip(self.encoder_b.iter_mut()) {
            out.push(pair.0);
            out.push(pair.1);
        }
        for pair in self.head_w.iter_mut().zip(self.head_b.iter_mut()) {
            out.push(pair.0);
            out.push(pair.1);
        }
        out.push(&mut self.aux_w1);
        out.push(&mut self.aux_b1);
        out.push(&mut self.aux_w2);
        out.push(&mut self.aux_b2);
        out
    }

    /// Serializes all parameters into one flat vector (row-major within
    /// each tensor, tensors in a fixed order).
    pub fn flatten(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.arch.param_count());
        for tensor in self.tensors() {
            flat.extend(tensor.iter().copied());
        }
        flat
    }

    /// Reconstructs parameters from [`PolicyParams::flatten`] output.
    pub fn from_flat(arch: PolicyArch, flat: &[f64]) -> Result<PolicyParams> {
        arch.validate()?;
        if flat.len() != arch.param_count() {
            return Err(CoreError::InvalidConfig {
                field: "params",
                message: format!(
                    "expected {} parameters, got {}",
                    arch.param_count(),
                    flat.len()
                ),
            });
        }
        let mut zero_rng = crate::env::seeded_stream(0, 0);
        let mut params = PolicyParams::init(arch, &mut zero_rng)?;
        let mut cursor = 0usize;
        for tensor in params.tensors_mut() {
            let n = tensor.len();
            for (slot, &v) in tensor.iter_mut().zip(&flat[cursor..cursor + n]) {
                *slot = v;
            }
            cursor += n;
        }
        debug_assert_eq!(cursor, flat.len());
        Ok(params)
    }

    /// Adds `delta` (a flat vector in flattening order) in place.
    pub fn add_flat(&mut self, delta: &[f64]) -> Result<()> {
        if delta.len() != self.arch.param_count() {
            return Err(CoreError::InvalidConfig {
                field: "delta",
                message: format!(
                    "expected {} entries, got {}",
                    self.arch.param_count(),
                    delta.len()
                ),
            });
        }
        let mut cursor = 0usize;
        for tensor in self.tensors_mut() {
            let n = tensor.len();
            for (slot, &v) in tensor.iter_mut().zip(&delta[cursor..cursor + n]) {
                *slot += v;
            }
            cursor += n;
        }
        Ok(())
    }

    /// Total number of scalars held.
    pub fn param_count(&self) -> usize {
        self.arch.param_count()
    }
}
