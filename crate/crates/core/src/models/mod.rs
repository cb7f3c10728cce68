//! Trainable models: Wasserstein GAN (generator + critic), dice-loss
//! autoencoder, generation, decodability screening and checkpoints.

pub mod arch;
mod autoencoder;
pub mod checkpoint;
mod loss;
mod wgan;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::composition::{encode_composition, CodecError, Composition, ROWS};
use crate::element_data::ElementVocabulary;
use crate::nn::NnError;

pub use arch::{Architecture, ArchitectureFile};
pub use autoencoder::{
    reconstruct, screen_decodable, train_autoencoder, train_autoencoder_with, AutoencoderConfig, AutoencoderOutcome,
    AutoencoderTrainer, DecodabilityPartition,
};
pub use checkpoint::{load_checkpoint, load_checkpoint_as, save_checkpoint, Checkpoint, ModelKind, RngState};
pub use loss::{critic_loss, dice_loss, generator_loss, mean_score};
pub use wgan::{
    critic_loss_on, generate_batch, generator_gradients, train_wgan, train_wgan_with, CriticConfig, GeneratedBatch,
    GeneratorConfig, TrainConfig, WganOutcome, WganTrainer,
};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error(transparent)]
    Network(#[from] NnError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("non-finite loss at epoch {epoch}")]
    NonFinite {
        epoch: usize,
        /// Checkpoints from the last epoch whose losses were all finite.
        last_good: Option<Box<Vec<Checkpoint>>>,
    },
    #[error("checkpoint integrity error: {0}")]
    Integrity(String),
    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    Version { expected: u32, found: String },
    #[error("expected a {expected} checkpoint, found {found}")]
    Kind { expected: ModelKind, found: ModelKind },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-epoch mean losses.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loss_g: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loss_d: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loss_ae: Vec<f64>,
}

/// Encodes a dataset into row-major `8 × s` sample vectors.
pub(crate) fn encode_dataset(
    dataset: &[Composition],
    vocabulary: &ElementVocabulary,
) -> Result<Vec<Vec<f32>>, ModelError> {
    if dataset.is_empty() {
        return Err(ModelError::Config("empty dataset".into()));
    }
    if !vocabulary.is_usable() {
        return Err(ModelError::Config("empty vocabulary".into()));
    }
    dataset
        .iter()
        .map(|c| {
            let m = encode_composition(c, vocabulary)?;
            Ok(m.cells().iter().map(|&v| v as f32).collect())
        })
        .collect()
}

pub(crate) fn matrix_shape(vocabulary: &ElementVocabulary) -> Vec<usize> {
    vec![1, ROWS, vocabulary.len()]
}
