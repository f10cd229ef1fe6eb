//! The autoencoder family: conditional encoder/decoder with a Gaussian
//! latent, a latent-space discriminator, the loss terms, and training.

mod checkpoint;
mod config;
mod faae;
mod losses;
mod train;

pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{ModelConfig, Variant};
pub use faae::{AeLoss, AeTerms, Batch, FaaeModel, LossComponents};
pub use losses::{
    focal_loss, kl_term, reconstruction_loss, reparameterize, reparameterize_with,
    GaussianLatent, LOG_VAR_MAX, LOG_VAR_MIN, PROB_CLAMP,
};
pub use train::{batch_from_samples, train, EpochLosses, TrainOutcome};

use thiserror::Error;

use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    Dimension {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("empty batch")]
    EmptyBatch,
    #[error("normative model must train on HC only (subject {subject_id} is not HC)")]
    NonNormativeTraining { subject_id: String },
    #[error("non-finite {component} loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss {
        component: &'static str,
        epoch: usize,
        batch: usize,
    },
    #[error("training aborted at epoch {epoch}, batch {batch}: {source}")]
    Optimizer {
        epoch: usize,
        batch: usize,
        #[source]
        source: NnError,
    },
    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
