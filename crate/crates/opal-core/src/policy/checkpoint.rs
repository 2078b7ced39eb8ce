//! Versioned JSON checkpoints: architecture descriptor, flat parameters,
//! seed, and episode counter, with validation on load.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::ops::OPERATOR_COUNT;
use crate::policy::params::{
    PolicyArch, PolicyParams, AUX_CLASSES, AUX_HIDDEN, ENCODER_LAYERS, PHASE_COUNT,
};

/// Current checkpoint format version.
pub const CHECKPOINT_VERSION: u32 = 1;

/// Structural description stored alongside the parameters so a loader can
/// verify the flat vector before reshaping it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchDescriptor {
    /// Node-feature dimension.
    pub input_dim: usize,
    /// Encoder/embedding width.
    pub hidden_dim: usize,
    /// Number of encoder layers.
    pub layers: usize,
    /// Number of program phases.
    pub phases: usize,
    /// Operator vocabulary size per phase head.
    pub operator_count: usize,
    /// Auxiliary head hidden width.
    pub aux_hidden: usize,
    /// Auxiliary head class count.
    pub aux_classes: usize,
}

impl ArchDescriptor {
    /// Descriptor for an architecture under the compiled-in head shapes.
    pub fn from_arch(arch: PolicyArch) -> ArchDescriptor {
        ArchDescriptor {
            input_dim: arch.input_dim,
            hidden_dim: arch.hidden_dim,
            layers: ENCODER_LAYERS,
            phases: PHASE_COUNT,
            operator_count: OPERATOR_COUNT,
            aux_hidden: AUX_HIDDEN,
            aux_classes: AUX_CLASSES,
        }
    }

    /// Converts back to an architecture, rejecting descriptors whose fixed
    /// dimensions disagree with this build.
    pub fn to_arch(self) -> Result<PolicyArch> {
        let expected = ArchDescriptor::from_arch(PolicyArch {
            input_dim: self.input_dim,
            hidden_dim: self.hidden_dim,
        });
        if self != expected {
            return Err(CoreError::Checkpoint(format!(
                "architecture descriptor {self:?} does not match this build's fixed shapes \
                 (layers={ENCODER_LAYERS}, phases={PHASE_COUNT}, operators={OPERATOR_COUNT}, \
                 aux={AUX_HIDDEN}x{AUX_CLASSES})"
            )));
        }
        let arch = PolicyArch {
            input_dim: self.input_dim,
            hidden_dim: self.hidden_dim,
        };
        arch.validate()?;
        Ok(arch)
    }
}

/// Extra trainer state a resumed run needs beyond the parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainerState {
    /// Exponential-moving-average reward baseline.
    pub baseline: f64,
    /// Whether the baseline has been initialized by a first episode.
    pub baseline_initialized: bool,
}

/// A saved policy: everything needed to restore inference or resume
/// training at an episode boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    /// Format version, for forward compatibility.
    pub version: u32,
    /// Shapes of the stored parameter vector.
    pub arch: ArchDescriptor,
    /// Flat parameter vector in [`PolicyParams::flatten`] order.
    pub params: Vec<f64>,
    /// Master seed of the run that produced these weights.
    pub seed: u64,
    /// Number of completed episodes.
    pub episode: usize,
    /// Optional trainer state for resuming.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trainer: Option<TrainerState>,
    /// Free-form run metadata (e.g. ablation-variant switches).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<BTreeMap<String, String>>,
}

impl Checkpoint {
    /// Snapshot of `params` after `episode` completed episodes.
    pub fn new(params: &PolicyParams, seed: u64, episode: usize) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            arch: ArchDescriptor::from_arch(params.arch),
            params: params.flatten(),
            seed,
            episode,
            trainer: None,
            metadata: None,
        }
    }

    /// Attaches trainer state for resumable checkpoints.
    pub fn with_trainer(mut self, trainer: TrainerState) -> Checkpoint {
        self.trainer = Some(trainer);
        self
    }

    /// Attaches free-form metadata entries.
    pub fn with_metadata(mut self, metadata: BTreeMap<String, String>) -> Checkpoint {
        self.metadata = Some(metadata);
        self
    }

    /// Validates version and shapes, then reconstructs the parameters.
    pub fn restore_params(&self) -> Result<PolicyParams> {
        if self.version != CHECKPOINT_VERSION {
            return Err(CoreError::Checkpoint(format!(
                "unsupported checkpoint version {} (this build reads {CHECKPOINT_VERSION})",
                self.version
            )));
        }
        let arch = self.arch.to_arch()?;
        if self.params.len() != arch.param_count() {
            return Err(CoreError::Checkpoint(format!(
                "descriptor implies {} parameters but {} are stored",
                arch.param_count(),
                self.params.len()
            )));
        }
        if !self.params.iter().all(|p| p.is_finite()) {
            return Err(CoreError::Checkpoint(
                "stored parameters contain non-finite values".into(),
            ));
        }
        PolicyParams::from_flat(arch, &self.params)
    }

    /// Writes pretty-printed JSON to `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json)?;
        Ok(())
    }

    /// Reads and parses a checkpoint; shape validation happens in
    /// [`Checkpoint::restore_params`].
    pub fn load(path: &Path) -> Result<Checkpoint> {
        let text = fs::read_to_string(path)?;
        let ckpt: Checkpoint = serde_json::from_str(&text)?;
        Ok(ckpt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::seeded_stream;

    fn params(hidden: usize) -> PolicyParams {
        let mut rng = seeded_stream(42, 0);
        PolicyParams::init(PolicyArch::with_hidden(hidden), &mut rng).unwrap()
    }

    #[test]
    fn save_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy.json");
        let original = params(8);
        let ckpt = Checkpoint::new(&original, 99, 1500).with_trainer(TrainerState {
            baseline: 0.25,
            baseline_initialized: true,
        });
        ckpt.save(&path).unwrap();
        let loaded = Checkpoint::load(&path).unwrap();
        assert_eq!(loaded, ckpt);
        assert_eq!(loaded.restore_params().unwrap(), original);
        assert_eq!(loaded.episode, 1500);
        assert_eq!(loaded.seed, 99);
    }

    #[test]
    fn wrong_version_is_rejected() {
        let mut ckpt = Checkpoint::new(&params(8), 1, 0);
        ckpt.version = 2;
        let err = ckpt.restore_params().unwrap_err();
        assert!(matches!(err, CoreError::Checkpoint(_)));
    }

    #[test]
    fn truncated_parameter_vector_is_rejected() {
        let mut ckpt = Checkpoint::new(&params(8), 1, 0);
        ckpt.params.pop();
        let err = ckpt.restore_params().unwrap_err();
        assert!(matches!(err, CoreError::Checkpoint(_)));
    }

    #[test]
    fn mismatched_descriptor_is_rejected() {
        let mut ckpt = Checkpoint::new(&params(8), 1, 0);
        ckpt.arch.operator_count = 9;
        let err = ckpt.restore_params().unwrap_err();
        assert!(matches!(err, CoreError::Checkpoint(_)));
    }

    #[test]
    fn non_finite_parameters_are_rejected() {
        let mut ckpt = Checkpoint::new(&params(8), 1, 0);
        ckpt.params[3] = f64::NAN;
        let err = ckpt.restore_params().unwrap_err();
        assert!(matches!(err, CoreError::Checkpoint(_)));
    }

    #[test]
    fn missing_file_reports_io_error() {
        let err = Checkpoint::load(Path::new("/nonexistent/never/policy.json")).unwrap_err();
        assert!(matches!(err, CoreError::Io(_)));
    }
}
