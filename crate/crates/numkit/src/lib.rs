//! Minimal dense-tensor math with reverse-mode automatic differentiation,
//! small fully connected networks, and an Adam optimizer.
//!
//! Everything is 64-bit: the networks in this workspace have at most a few
//! hundred parameters, so precision is worth far more than speed. Tensors are
//! immutable values and are safe to share read-only across threads; training
//! runs are single-threaded by construction.

pub mod adam;
pub mod error;
pub mod mlp;
pub mod rng;
pub mod tape;
pub mod tensor;

pub use adam::AdamState;
pub use error::{NumkitError, Result};
pub use mlp::{Activation, Mlp, MlpHandle, MlpSpec};
pub use rng::{derive_seed, seeded_rng, SeededRng};
pub use tape::{Gradients, OpKind, Tape, ValueId};
pub use tensor::Tensor;
