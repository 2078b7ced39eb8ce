//! The trajectory-conditioned policy: a message-passing encoder over the
//! probe graph, three categorical heads that pick one operator per
//! scheduling phase, and an auxiliary head that classifies the landscape.
//!
//! All differentiable pieces run on a small reverse-mode tape
//! ([`tape::Tape`]), so the training loss exposes exact gradients with
//! respect to the flat parameter vector.

mod checkpoint;
mod decode;
mod forward;
mod loss;
mod params;
pub mod tape;

pub use checkpoint::{ArchDescriptor, Checkpoint, TrainerState, CHECKPOINT_VERSION};
pub use decode::{decode, DecodeMode, PolicyOutput};
pub use forward::{embed, forward, normalized_adjacency, ForwardPass};
pub use loss::{attach_loss, loss_and_gradient};
pub use params::{
    PolicyArch, PolicyParams, AUX_CLASSES, AUX_HIDDEN, ENCODER_LAYERS, PHASE_COUNT,
};
