//! Checkpoint files: one line of JSON manifest followed by a blob of
//! little-endian binary32 values.
//!
//! The manifest lists every tensor (name, shape, offset and length in values)
//! in blob order together with the vocabulary, architecture, optimizer step,
//! RNG position, training history and a SHA-256 checksum of the blob.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::composition::ROWS;
use crate::element_data::ElementVocabulary;
use crate::nn::{AdamConfig, AdamState, LayerSpec, Network, Tensor};

use super::{ModelError, TrainHistory};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Generator,
    Critic,
    Autoencoder,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Generator => "generator",
            ModelKind::Critic => "critic",
            ModelKind::Autoencoder => "autoencoder",
        })
    }
}

/// Position of a ChaCha8 stream.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: String,
    pub stream: u64,
    /// Decimal string; the word position is a 128-bit counter.
    pub word_pos: String,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        RngState {
            seed: hex::encode(rng.get_seed()),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    pub fn restore(&self) -> Result<ChaCha8Rng, ModelError> {
        use rand::SeedableRng;
        let bad = |m: &str| ModelError::Integrity(format!("rng state: {m}"));
        let bytes = hex::decode(&self.seed).map_err(|_| bad("seed is not hex"))?;
        let seed: [u8; 32] = bytes.try_into().map_err(|_| bad("seed must be 32 bytes"))?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos.parse().map_err(|_| bad("word position"))?);
        Ok(rng)
    }
}

/// Model-specific settings carried alongside the weights.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latent_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_critic: Option<usize>,
    #[serde(default)]
    pub train: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub kind: ModelKind,
    pub vocabulary: ElementVocabulary,
    pub architecture_name: String,
    pub network: Network<f32>,
    pub settings: ModelSettings,
    pub optimizer: Option<AdamState<f32>>,
    pub rng: Option<RngState>,
    pub history: TrainHistory,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
    len: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct OptimizerManifest {
    config: AdamConfig,
    step: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    model_kind: ModelKind,
    vocabulary: Vec<String>,
    d: usize,
    architecture: ArchitectureManifest,
    settings: ModelSettings,
    seed: u64,
    tensors: Vec<TensorEntry>,
    optimizer: Option<OptimizerManifest>,
    rng: Option<RngState>,
    history: TrainHistory,
    blob_values: usize,
    checksum: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ArchitectureManifest {
    name: String,
    input_shape: Vec<usize>,
    layers: Vec<LayerSpec>,
}

impl Checkpoint {
    pub fn s(&self) -> usize {
        self.vocabulary.len()
    }

    /// Fails with a kind error unless this checkpoint holds `expected`.
    pub fn expect_kind(self, expected: ModelKind) -> Result<Self, ModelError> {
        if self.kind == expected {
            Ok(self)
        } else {
            Err(ModelError::Kind {
                expected,
                found: self.kind,
            })
        }
    }

    /// Serializes to the on-disk byte layout.
    pub fn to_bytes(&self) -> Result<Vec<u8>, ModelError> {
        let mut tensors = Vec::new();
        let mut blob: Vec<u8> = Vec::new();
        let mut offset = 0;
        let mut push = |name: String, t: &Tensor<f32>, blob: &mut Vec<u8>| {
            for v in t.data() {
                blob.extend_from_slice(&v.to_le_bytes());
            }
            tensors.push(TensorEntry {
                name,
                shape: t.shape().to_vec(),
                offset,
                len: t.len(),
            });
            offset += t.len();
        };
        for (name, t) in self.network.named_tensors() {
            push(name, t, &mut blob);
        }
        if let Some(opt) = &self.optimizer {
            for (i, t) in opt.m.iter().enumerate() {
                push(format!("adam.m.{i}"), t, &mut blob);
            }
            for (i, t) in opt.v.iter().enumerate() {
                push(format!("adam.v.{i}"), t, &mut blob);
            }
        }
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            model_kind: self.kind,
            vocabulary: self.vocabulary.symbols().iter().map(|s| s.to_string()).collect(),
            d: ROWS,
            architecture: ArchitectureManifest {
                name: self.architecture_name.clone(),
                input_shape: self.network.input_shape().to_vec(),
                layers: self.network.specs(),
            },
            settings: self.settings.clone(),
            seed: self.network.seed(),
            tensors,
            optimizer: self.optimizer.as_ref().map(|o| OptimizerManifest {
                config: o.config,
                step: o.step,
            }),
            rng: self.rng.clone(),
            history: self.history.clone(),
            blob_values: blob.len() / 4,
            checksum: hex::encode(Sha256::digest(&blob)),
        };
        let mut out = serde_json::to_vec(&manifest).map_err(|e| ModelError::Integrity(e.to_string()))?;
        out.push(b'\n');
        out.extend_from_slice(&blob);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        let integrity = |m: String| ModelError::Integrity(m);
        let newline = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| integrity("missing manifest terminator".into()))?;
        let header: serde_json::Value =
            serde_json::from_slice(&bytes[..newline]).map_err(|e| integrity(format!("manifest: {e}")))?;
        let version = header.get("format_version").and_then(|v| v.as_u64());
        if version != Some(FORMAT_VERSION as u64) {
            return Err(ModelError::Version {
                expected: FORMAT_VERSION,
                found: version.map(|v| v.to_string()).unwrap_or_else(|| "none".into()),
            });
        }
        let manifest: Manifest = serde_json::from_value(header).map_err(|e| integrity(format!("manifest: {e}")))?;
        let blob = &bytes[newline + 1..];
        if blob.len() != manifest.blob_values * 4 {
            return Err(integrity(format!(
                "blob holds {} bytes, manifest expects {}",
                blob.len(),
                manifest.blob_values * 4
            )));
        }
        if hex::encode(Sha256::digest(blob)) != manifest.checksum {
            return Err(integrity("checksum mismatch".into()));
        }
        if manifest.d != ROWS {
            return Err(integrity(format!("unsupported row count d = {}", manifest.d)));
        }
        let symbols: Vec<&str> = manifest.vocabulary.iter().map(String::as_str).collect();
        let vocabulary = ElementVocabulary::from_symbols(&symbols).map_err(|e| integrity(e.to_string()))?;

        let read = |entry: &TensorEntry| -> Result<Tensor<f32>, ModelError> {
            let end = entry
                .offset
                .checked_add(entry.len)
                .filter(|&e| e <= manifest.blob_values);
            let end = end.ok_or_else(|| integrity(format!("tensor {} out of range", entry.name)))?;
            let data = blob[entry.offset * 4..end * 4]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            Tensor::new(entry.shape.clone(), data).map_err(|e| integrity(e.to_string()))
        };

        let mut network = Network::<f32>::new(
            manifest.architecture.input_shape.clone(),
            &manifest.architecture.layers,
            manifest.seed,
        )
        .map_err(|e| integrity(format!("architecture: {e}")))?;
        let names: Vec<String> = network.named_tensors().into_iter().map(|(n, _)| n).collect();
        let mut entries = manifest.tensors.iter();
        {
            let slots = network.tensors_mut();
            for (slot, name) in slots.into_iter().zip(&names) {
                let entry = entries
                    .next()
                    .ok_or_else(|| integrity(format!("missing tensor {name}")))?;
                if &entry.name != name || entry.shape != slot.shape() {
                    return Err(integrity(format!("tensor {} does not match {name}", entry.name)));
                }
                *slot = read(entry)?;
            }
        }
        let optimizer = match &manifest.optimizer {
            Some(opt) => {
                let n = network.params().len();
                let m = (0..n)
                    .map(|_| {
                        entries
                            .next()
                            .ok_or_else(|| integrity("missing adam moment".into()))
                            .and_then(read)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let v = (0..n)
                    .map(|_| {
                        entries
                            .next()
                            .ok_or_else(|| integrity("missing adam moment".into()))
                            .and_then(read)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Some(AdamState {
                    config: opt.config,
                    m,
                    v,
                    step: opt.step,
                })
            }
            None => None,
        };
        if entries.next().is_some() {
            return Err(integrity("unexpected extra tensors".into()));
        }
        Ok(Checkpoint {
            kind: manifest.model_kind,
            vocabulary,
            architecture_name: manifest.architecture.name,
            network,
            settings: manifest.settings,
            optimizer,
            rng: manifest.rng,
            history: manifest.history,
        })
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let bytes = ckpt.to_bytes()?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    f.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, ModelError> {
    Checkpoint::from_bytes(&fs::read(path)?)
}

/// Loads and checks the model kind.
pub fn load_checkpoint_as(path: impl AsRef<Path>, kind: ModelKind) -> Result<Checkpoint, ModelError> {
    load_checkpoint(path)?.expect_kind(kind)
}
