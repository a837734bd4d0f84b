//! Local representation distillation.
//!
//! The task party trains an autoencoder on all of its rows. For rows it shares
//! with a data party, the loss also pulls the encoder output toward the
//! federated representation, so `Enc` learns to produce federated-like
//! features for private rows too.

pub mod adam;
pub mod autoencoder;
pub mod enrich;
pub mod network;

pub use adam::{Adam, AdamConfig};
pub use autoencoder::{
    autoencoder_widths, lrd_gradient, lrd_loss, train_autoencoder, train_distilled_encoder, DistillConfig,
    DistillNorm, EncoderParams, EpochLoss, LossParts, TrainedEncoder, ENCODER_FORMAT_VERSION,
};
pub use enrich::{enrich, ColumnSource, EnrichedRepresentation, PartyEncoder};
pub use network::{Activation, Dense, Gradients, Network};

use thiserror::Error;

use crate::linalg::LinalgError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LrdError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("shape: {0}")]
    Shape(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("loss became non-finite at epoch {epoch}, batch {batch}")]
    NonFinite { epoch: usize, batch: usize },
    #[error("encoder document: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, LrdError>;
