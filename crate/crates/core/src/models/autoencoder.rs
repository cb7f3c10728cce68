//! Dice-loss autoencoder over composition matrices and decodability screening.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::composition::{decode_values, encode_composition, Composition, DEFAULT_THRESHOLD};
use crate::element_data::ElementVocabulary;
use crate::nn::{AdamConfig, AdamState, LayerSpec, Mode, Network, Tensor};

use super::arch::{autoencoder_layers, Architecture};
use super::checkpoint::{Checkpoint, ModelKind, ModelSettings, RngState};
use super::loss::{dice_grad_wrt_second, dice_slices};
use super::{encode_dataset, matrix_shape, ModelError, TrainHistory};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderConfig {
    pub architecture: Architecture,
    pub code_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        AutoencoderConfig {
            architecture: Architecture::Paperlike,
            code_dim: 128,
            epochs: 1000,
            learning_rate: 1e-3,
            batch_size: 1024,
            seed: 0,
        }
    }
}

pub struct AutoencoderOutcome {
    pub checkpoint: Checkpoint,
    pub history: TrainHistory,
}

pub struct AutoencoderTrainer {
    vocabulary: ElementVocabulary,
    data: Vec<Vec<f32>>,
    pub network: Network<f32>,
    opt: AdamState<f32>,
    rng: ChaCha8Rng,
    cfg: AutoencoderConfig,
    batch: usize,
    pub history: TrainHistory,
}

impl AutoencoderTrainer {
    pub fn new(
        dataset: &[Composition],
        vocabulary: &ElementVocabulary,
        cfg: &AutoencoderConfig,
    ) -> Result<Self, ModelError> {
        if !(cfg.learning_rate > 0.0) || cfg.code_dim == 0 {
            return Err(ModelError::Config("learning rate and code_dim must be positive".into()));
        }
        if cfg.batch_size < 2 {
            return Err(ModelError::Config("batch size must be at least 2".into()));
        }
        let data = encode_dataset(dataset, vocabulary)?;
        if data.len() < 2 {
            return Err(ModelError::Config("dataset must hold at least two samples".into()));
        }
        let shape = matrix_shape(vocabulary);
        let network = Network::new(
            shape.clone(),
            &autoencoder_layers(&cfg.architecture, cfg.code_dim, vocabulary.len()),
            cfg.seed,
        )?;
        if network.output_shape() != shape.as_slice() || !matches!(network.specs().last(), Some(LayerSpec::Sigmoid)) {
            return Err(ModelError::Config(format!(
                "autoencoder must end in sigmoid with output {shape:?}, got {:?}",
                network.output_shape()
            )));
        }
        let opt = AdamState::for_network(AdamConfig::with_learning_rate(cfg.learning_rate), &network);
        Ok(AutoencoderTrainer {
            vocabulary: vocabulary.clone(),
            batch: cfg.batch_size.min(data.len()),
            data,
            network,
            opt,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1)),
            cfg: cfg.clone(),
            history: TrainHistory::default(),
        })
    }

    /// One update on the given sample indices; returns the mean dice loss.
    pub fn step(&mut self, indices: &[usize]) -> Result<f64, ModelError> {
        let rows: Vec<&[f32]> = indices.iter().map(|&i| self.data[i].as_slice()).collect();
        let x = Tensor::stack(&rows, &matrix_shape(&self.vocabulary))?;
        let pass = self.network.forward(&x, Mode::Training)?;
        let n = indices.len();
        let mut upstream = Tensor::zeros(pass.output.shape().to_vec());
        let mut loss = 0.0;
        let len = x.sample_len();
        for i in 0..n {
            let a = x.sample(i);
            let b = pass.output.sample(i);
            loss += dice_slices(a, b);
            dice_grad_wrt_second(a, b, 1.0 / n as f64, &mut upstream.data_mut()[i * len..(i + 1) * len]);
        }
        let grads = self.network.backward(&pass, &upstream)?;
        self.network.apply_adam(&grads.params, &mut self.opt)?;
        Ok(loss / n as f64)
    }

    /// One pass over a fresh shuffle. A trailing batch of one sample is
    /// skipped since batch statistics are undefined for it.
    pub fn run_epoch(&mut self) -> Result<f64, ModelError> {
        let mut order: Vec<usize> = (0..self.data.len()).collect();
        order.shuffle(&mut self.rng);
        let (mut total, mut count) = (0.0, 0usize);
        for chunk in order.chunks(self.batch) {
            if chunk.len() < 2 {
                continue;
            }
            total += self.step(chunk)? * chunk.len() as f64;
            count += chunk.len();
        }
        let mean = total / count as f64;
        self.history.loss_ae.push(mean);
        Ok(mean)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            kind: ModelKind::Autoencoder,
            vocabulary: self.vocabulary.clone(),
            architecture_name: self.cfg.architecture.name().to_string(),
            network: self.network.clone(),
            settings: ModelSettings {
                latent_dim: Some(self.cfg.code_dim),
                clip: None,
                n_critic: None,
                train: serde_json::to_value(&self.cfg).unwrap_or_default(),
            },
            optimizer: Some(self.opt.clone()),
            rng: Some(RngState::capture(&self.rng)),
            history: self.history.clone(),
        }
    }
}

pub fn train_autoencoder(
    dataset: &[Composition],
    vocabulary: &ElementVocabulary,
    cfg: &AutoencoderConfig,
) -> Result<AutoencoderOutcome, ModelError> {
    train_autoencoder_with(dataset, vocabulary, cfg, |_, _| {})
}

/// Trains for `cfg.epochs`, calling `observer(epoch, trainer)` after each epoch.
pub fn train_autoencoder_with(
    dataset: &[Composition],
    vocabulary: &ElementVocabulary,
    cfg: &AutoencoderConfig,
    mut observer: impl FnMut(usize, &AutoencoderTrainer),
) -> Result<AutoencoderOutcome, ModelError> {
    let mut trainer = AutoencoderTrainer::new(dataset, vocabulary, cfg)?;
    let mut last_good = (trainer.network.clone(), trainer.history.clone());
    for epoch in 1..=cfg.epochs {
        let finite = match trainer.run_epoch() {
            Ok(l) => l.is_finite(),
            Err(ModelError::Network(crate::nn::NnError::Numeric(_))) => false,
            Err(e) => return Err(e),
        };
        if !finite {
            trainer.network = last_good.0;
            trainer.history = last_good.1;
            return Err(ModelError::NonFinite {
                epoch,
                last_good: Some(Box::new(vec![trainer.checkpoint()])),
            });
        }
        last_good = (trainer.network.clone(), trainer.history.clone());
        observer(epoch, &trainer);
    }
    Ok(AutoencoderOutcome {
        history: trainer.history.clone(),
        checkpoint: trainer.checkpoint(),
    })
}

/// Encodes and reconstructs each composition in inference mode and returns
/// the discretized reconstructions.
pub fn reconstruct(
    ckpt: &Checkpoint,
    compositions: &[Composition],
    threshold: Option<f64>,
) -> Result<Vec<Composition>, ModelError> {
    if ckpt.kind != ModelKind::Autoencoder {
        return Err(ModelError::Kind {
            expected: ModelKind::Autoencoder,
            found: ckpt.kind,
        });
    }
    let threshold = threshold.unwrap_or(DEFAULT_THRESHOLD);
    let vocab = &ckpt.vocabulary;
    let shape = matrix_shape(vocab);
    let chunks: Vec<Result<Vec<Composition>, ModelError>> = compositions
        .par_chunks(512)
        .map(|chunk| {
            let encoded: Vec<Vec<f32>> = chunk
                .iter()
                .map(|c| encode_composition(c, vocab).map(|m| m.to_values::<f32>()))
                .collect::<Result<_, _>>()?;
            let rows: Vec<&[f32]> = encoded.iter().map(|v| v.as_slice()).collect();
            let y = ckpt.network.infer(&Tensor::stack(&rows, &shape)?)?;
            (0..chunk.len())
                .map(|i| decode_values(y.sample(i), vocab, threshold).map_err(ModelError::from))
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(compositions.len());
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Split of a candidate list by exact reconstruction.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DecodabilityPartition {
    pub decodable: Vec<Composition>,
    pub non_decodable: Vec<Composition>,
}

impl DecodabilityPartition {
    pub fn decodable_fraction(&self) -> f64 {
        let n = self.decodable.len() + self.non_decodable.len();
        if n == 0 {
            0.0
        } else {
            self.decodable.len() as f64 / n as f64
        }
    }
}

/// Keeps candidates whose discretized reconstruction equals the input.
pub fn screen_decodable(
    ckpt: &Checkpoint,
    candidates: &[Composition],
    threshold: Option<f64>,
) -> Result<DecodabilityPartition, ModelError> {
    let recon = reconstruct(ckpt, candidates, threshold)?;
    let mut part = DecodabilityPartition::default();
    for (c, r) in candidates.iter().zip(recon) {
        if *c == r {
            part.decodable.push(c.clone());
        } else {
            part.non_decodable.push(c.clone());
        }
    }
    Ok(part)
}
