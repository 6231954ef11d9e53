//! Operator learning for gradient-flow PDEs driven by a discrete Rayleighian.

pub mod basis;
pub mod config;
pub mod dlam;
pub mod error;
pub mod inverse;
pub mod models;
pub mod operator;
pub mod pipeline;
pub mod reference;
pub mod stepper;
pub mod train;

pub use error::{Error, Result};

/// Version tag written into every JSON artifact and accepted in configs.
pub const SCHEMA_VERSION: u32 = 1;
