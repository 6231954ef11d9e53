//! Minimal dense-network engine.
//!
//! The crate provides exactly what unsupervised operator training needs:
//!
//! - [`Matrix`]: row-major `f64` storage with GEMM helpers.
//! - [`Tape`]: a reverse-mode graph over dense layers, elementwise ops and
//!   reductions. Nodes hold whole matrices, so a batch of samples or a full
//!   spatial grid flows through one node.
//! - [`NetParams`]: a multilayer perceptron with Xavier initialization, plain
//!   (tape-free) inference and tape construction, including forward tangents
//!   for input derivatives.
//! - [`AdamState`]: the Adam optimizer with bias correction.
//!
//! All arithmetic is 64-bit. Nothing here spawns threads, so a fixed seed and
//! configuration always reproduce the same parameter trajectory bit for bit.

mod adam;
mod error;
mod matrix;
mod mlp;
mod tape;

pub use adam::{AdamConfig, AdamState};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use mlp::{loss_gradient, Activation, Layer, LayerShape, NetParams, NetVars};
pub use tape::{Gradients, Tape, Var};
