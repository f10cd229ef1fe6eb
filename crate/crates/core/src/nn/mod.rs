//! Minimal feed-forward network engine: dense layers with reverse-mode
//! gradients, Adam, a seeded random stream, and a finite-difference checker.

mod adam;
mod gradcheck;
mod layer;
mod matrix;
mod network;
pub mod rng;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::grad_check;
pub use layer::{sigmoid, Activation, DenseLayer, LayerGrads};
pub use matrix::Matrix;
pub use network::{ForwardTrace, Mlp, MlpGrads};
pub use rng::{sample_standard_normal, streams, RngStream};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("network must contain at least one layer")]
    EmptyNetwork,
    #[error("forward trace does not match this network: {0}")]
    TraceMismatch(String),
    #[error("non-finite gradient at parameter {index}")]
    NonFiniteGradient { index: usize },
    #[error("non-finite loss while probing parameter {index}")]
    NonFiniteLoss { index: usize },
    #[error("finite-difference step must be positive, got {0}")]
    InvalidStep(f64),
}
