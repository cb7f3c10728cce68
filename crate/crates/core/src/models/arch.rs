//! Named architecture plans and architecture config files.
//!
//! `small` plans are fully connected and fast; `paperlike` plans use one
//! fully connected layer plus seven transposed convolutions for generators
//! and decoders, and seven convolutions plus one fully connected layer for
//! critics and encoders, sized to land exactly on `1 × 8 × s`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::composition::ROWS;
use crate::nn::LayerSpec;

use super::ModelError;

/// Deconvolution output channels for the paperlike generator.
pub const PAPERLIKE_CHANNELS: [usize; 7] = [256, 128, 128, 64, 64, 32, 1];
/// Feature-map width produced by the paperlike generator's dense layer.
pub const PAPERLIKE_SEED_WIDTH: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Small,
    Paperlike,
    /// Explicit layer list, e.g. loaded from a config file.
    Custom(Vec<LayerSpec>),
}

impl Architecture {
    /// Parses a preset name (`small`, `paperlike`).
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "small" => Some(Architecture::Small),
            "paperlike" => Some(Architecture::Paperlike),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Architecture::Small => "small",
            Architecture::Paperlike => "paperlike",
            Architecture::Custom(_) => "custom",
        }
    }
}

/// Architecture config file: either a JSON list of layer specs or an object
/// with `generator` / `critic` (or `autoencoder`) lists.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureFile {
    #[serde(default)]
    pub generator: Option<Vec<LayerSpec>>,
    #[serde(default)]
    pub critic: Option<Vec<LayerSpec>>,
    #[serde(default)]
    pub autoencoder: Option<Vec<LayerSpec>>,
}

impl ArchitectureFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ModelError::Config(format!("architecture file: {e}")))?;
        if value.is_array() {
            let layers: Vec<LayerSpec> =
                serde_json::from_value(value).map_err(|e| ModelError::Config(format!("architecture file: {e}")))?;
            return Ok(ArchitectureFile {
                generator: Some(layers.clone()),
                critic: None,
                autoencoder: Some(layers),
            });
        }
        serde_json::from_value(value).map_err(|e| ModelError::Config(format!("architecture file: {e}")))
    }
}

fn widths(s: usize) -> (usize, [usize; 7]) {
    let start = PAPERLIKE_SEED_WIDTH.min(s);
    let growth = s - start;
    let mut kernels = [1usize; 7];
    for (i, k) in kernels.iter_mut().enumerate() {
        *k += growth / 7 + usize::from(i < growth % 7);
    }
    (start, kernels)
}

/// Generator plan: latent `[latent_dim]` to `[1, 8, s]`, sigmoid output.
pub fn generator_layers(arch: &Architecture, latent_dim: usize, s: usize) -> Vec<LayerSpec> {
    match arch {
        Architecture::Small => vec![
            LayerSpec::dense(128),
            LayerSpec::batch_norm(),
            LayerSpec::Relu,
            LayerSpec::dense(256),
            LayerSpec::batch_norm(),
            LayerSpec::Relu,
            LayerSpec::dense_shaped(vec![1, ROWS, s]),
            LayerSpec::Sigmoid,
        ],
        Architecture::Paperlike => {
            let _ = latent_dim;
            let (start, kernels) = widths(s);
            let mut layers = vec![
                LayerSpec::dense_shaped(vec![PAPERLIKE_CHANNELS[0], 1, start]),
                LayerSpec::batch_norm(),
                LayerSpec::Relu,
            ];
            for (i, (&ch, &kw)) in PAPERLIKE_CHANNELS.iter().zip(&kernels).enumerate() {
                layers.push(LayerSpec::deconv(ch, [2, kw], [1, 1], [0, 0]));
                if i + 1 < PAPERLIKE_CHANNELS.len() {
                    layers.push(LayerSpec::batch_norm());
                    layers.push(LayerSpec::Relu);
                }
            }
            layers.push(LayerSpec::Sigmoid);
            layers
        }
        Architecture::Custom(layers) => layers.clone(),
    }
}

/// Critic plan: `[1, 8, s]` to one unbounded score.
pub fn critic_layers(arch: &Architecture, s: usize) -> Vec<LayerSpec> {
    match arch {
        Architecture::Small => vec![
            LayerSpec::dense(256),
            LayerSpec::Relu,
            LayerSpec::dense(128),
            LayerSpec::Relu,
            LayerSpec::dense(1),
        ],
        Architecture::Paperlike => {
            let mut layers = encoder_convs(s);
            layers.push(LayerSpec::dense(1));
            layers
        }
        Architecture::Custom(layers) => layers.clone(),
    }
}

fn encoder_convs(s: usize) -> Vec<LayerSpec> {
    let (_, kernels) = widths(s);
    let mut channels: Vec<usize> = PAPERLIKE_CHANNELS[..6].iter().rev().copied().collect();
    channels.push(PAPERLIKE_CHANNELS[0]);
    let mut layers = Vec::new();
    for (&ch, &kw) in channels.iter().zip(kernels.iter().rev()) {
        layers.push(LayerSpec::conv(ch, [2, kw], [1, 1], [0, 0]));
        layers.push(LayerSpec::batch_norm());
        layers.push(LayerSpec::Relu);
    }
    layers
}

/// Autoencoder plan: encoder to a `code_dim` bottleneck, decoder back to `[1, 8, s]`.
pub fn autoencoder_layers(arch: &Architecture, code_dim: usize, s: usize) -> Vec<LayerSpec> {
    match arch {
        Architecture::Small => vec![
            LayerSpec::dense(256),
            LayerSpec::batch_norm(),
            LayerSpec::Relu,
            LayerSpec::dense(code_dim),
            LayerSpec::batch_norm(),
            LayerSpec::Relu,
            LayerSpec::dense(256),
            LayerSpec::batch_norm(),
            LayerSpec::Relu,
            LayerSpec::dense_shaped(vec![1, ROWS, s]),
            LayerSpec::Sigmoid,
        ],
        Architecture::Paperlike => {
            let mut layers = encoder_convs(s);
            layers.push(LayerSpec::dense(code_dim));
            layers.push(LayerSpec::batch_norm());
            layers.push(LayerSpec::Relu);
            layers.extend(generator_layers(&Architecture::Paperlike, code_dim, s));
            layers
        }
        Architecture::Custom(layers) => layers.clone(),
    }
}
