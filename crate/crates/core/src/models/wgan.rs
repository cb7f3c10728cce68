//! Weight-clipped Wasserstein GAN over composition matrices.
//!
//! Each generator iteration is preceded by `n_critic` critic updates. A critic
//! update minimizes `E_g[f(x)] - E_r[f(x)]` and then clamps every critic
//! parameter into `[-c, c]`; a generator update minimizes `-E_g[f(G(z))]`.
//! An epoch is `ceil(N / batch)` generator iterations.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::composition::{decode_values, Composition, DEFAULT_THRESHOLD};
use crate::element_data::ElementVocabulary;
use crate::nn::{AdamConfig, AdamState, Gradients, Mode, Network, Tensor};

use super::arch::{critic_layers, generator_layers, Architecture};
use super::checkpoint::{Checkpoint, ModelKind, ModelSettings, RngState};
use super::loss::{critic_loss, generator_loss};
use super::{encode_dataset, matrix_shape, ModelError, TrainHistory};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub latent_dim: usize,
    pub architecture: Architecture,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            latent_dim: 128,
            architecture: Architecture::Paperlike,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticConfig {
    pub architecture: Architecture,
    pub clip: f64,
    pub n_critic: usize,
}

impl Default for CriticConfig {
    fn default() -> Self {
        CriticConfig {
            architecture: Architecture::Paperlike,
            clip: 0.01,
            n_critic: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub generator_lr: f64,
    pub critic_lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Observer cadence in epochs; `None` reports only the final epoch.
    pub checkpoint_every: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1000,
            generator_lr: 1e-3,
            critic_lr: 1e-2,
            batch_size: 32,
            seed: 0,
            checkpoint_every: None,
        }
    }
}

impl TrainConfig {
    /// Batch size used for the largest corpus.
    pub fn large_corpus() -> Self {
        TrainConfig {
            batch_size: 512,
            ..TrainConfig::default()
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        if !(self.generator_lr > 0.0 && self.critic_lr > 0.0) {
            return Err(ModelError::Config("learning rates must be positive".into()));
        }
        if self.batch_size < 2 {
            return Err(ModelError::Config("batch size must be at least 2".into()));
        }
        Ok(())
    }
}

pub struct WganOutcome {
    pub generator: Checkpoint,
    pub critic: Checkpoint,
    pub history: TrainHistory,
}

/// Training state; exposes single steps so the loop can be driven or inspected.
pub struct WganTrainer {
    vocabulary: ElementVocabulary,
    data: Vec<Vec<f32>>,
    pub generator: Network<f32>,
    pub critic: Network<f32>,
    generator_opt: AdamState<f32>,
    critic_opt: AdamState<f32>,
    rng: ChaCha8Rng,
    gcfg: GeneratorConfig,
    ccfg: CriticConfig,
    tcfg: TrainConfig,
    order: Vec<usize>,
    cursor: usize,
    batch: usize,
    pub history: TrainHistory,
}

/// Critic loss on explicit real and fake batches (training-mode forward).
pub fn critic_loss_on(critic: &mut Network<f32>, real: &Tensor<f32>, fake: &Tensor<f32>) -> Result<f64, ModelError> {
    let r = critic.forward(real, Mode::Training)?;
    let f = critic.forward(fake, Mode::Training)?;
    Ok(critic_loss(&f.output, &r.output))
}

/// Generator loss and its gradients for latent batch `z` through `critic`.
pub fn generator_gradients(
    generator: &mut Network<f32>,
    critic: &mut Network<f32>,
    z: &Tensor<f32>,
) -> Result<(f64, Gradients<f32>), ModelError> {
    let n = z.batch();
    let g_pass = generator.forward(z, Mode::Training)?;
    let c_pass = critic.forward(&g_pass.output, Mode::Training)?;
    let loss = generator_loss(&c_pass.output);
    let upstream = Tensor::filled(c_pass.output.shape().to_vec(), -1.0 / n as f32);
    let c_grads = critic.backward(&c_pass, &upstream)?;
    let dx = c_grads.input.reshaped(g_pass.output.shape().to_vec())?;
    let g_grads = generator.backward(&g_pass, &dx)?;
    Ok((loss, g_grads))
}

impl WganTrainer {
    pub fn new(
        dataset: &[Composition],
        vocabulary: &ElementVocabulary,
        gcfg: &GeneratorConfig,
        ccfg: &CriticConfig,
        tcfg: &TrainConfig,
    ) -> Result<Self, ModelError> {
        tcfg.validate()?;
        if !(ccfg.clip > 0.0) || ccfg.n_critic == 0 || gcfg.latent_dim == 0 {
            return Err(ModelError::Config(
                "clip, n_critic and latent_dim must be positive".into(),
            ));
        }
        let data = encode_dataset(dataset, vocabulary)?;
        let batch = tcfg.batch_size.min(data.len());
        if batch < 2 {
            return Err(ModelError::Config("dataset must hold at least two samples".into()));
        }
        let s = vocabulary.len();
        let generator = Network::new(
            vec![gcfg.latent_dim],
            &generator_layers(&gcfg.architecture, gcfg.latent_dim, s),
            gcfg.seed,
        )?;
        if generator.output_shape() != matrix_shape(vocabulary).as_slice()
            || !matches!(generator.specs().last(), Some(crate::nn::LayerSpec::Sigmoid))
        {
            return Err(ModelError::Config(format!(
                "generator must end in sigmoid with output {:?}, got {:?}",
                matrix_shape(vocabulary),
                generator.output_shape()
            )));
        }
        let critic = Network::new(
            matrix_shape(vocabulary),
            &critic_layers(&ccfg.architecture, s),
            tcfg.seed.wrapping_add(0x9E37_79B9_7F4A_7C15),
        )?;
        if critic.output_len() != 1 {
            return Err(ModelError::Config("critic must produce one score per sample".into()));
        }
        let generator_opt = AdamState::for_network(AdamConfig::with_learning_rate(tcfg.generator_lr), &generator);
        let critic_opt = AdamState::for_network(AdamConfig::with_learning_rate(tcfg.critic_lr), &critic);
        let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut rng);
        let mut trainer = WganTrainer {
            vocabulary: vocabulary.clone(),
            data,
            generator,
            critic,
            generator_opt,
            critic_opt,
            rng,
            gcfg: gcfg.clone(),
            ccfg: ccfg.clone(),
            tcfg: tcfg.clone(),
            order,
            cursor: 0,
            batch,
            history: TrainHistory::default(),
        };
        // Start within the clip box.
        trainer.critic.clip_weights(ccfg.clip as f32);
        Ok(trainer)
    }

    pub fn batch_size(&self) -> usize {
        self.batch
    }

    pub fn iterations_per_epoch(&self) -> usize {
        self.data.len().div_ceil(self.batch)
    }

    pub fn sample_latent(&mut self, n: usize) -> Tensor<f32> {
        let zs: Vec<f32> = (0..n * self.gcfg.latent_dim)
            .map(|_| self.rng.sample::<f32, _>(StandardNormal))
            .collect();
        Tensor::new(vec![n, self.gcfg.latent_dim], zs).expect("latent shape")
    }

    pub fn next_real_batch(&mut self) -> Tensor<f32> {
        let mut rows: Vec<&[f32]> = Vec::with_capacity(self.batch);
        let mut idx = Vec::with_capacity(self.batch);
        for _ in 0..self.batch {
            if self.cursor == self.order.len() {
                self.order.shuffle(&mut self.rng);
                self.cursor = 0;
            }
            idx.push(self.order[self.cursor]);
            self.cursor += 1;
        }
        for &i in &idx {
            rows.push(&self.data[i]);
        }
        Tensor::stack(&rows, &matrix_shape(&self.vocabulary)).expect("matrix shape")
    }

    /// One critic update followed by weight clipping; returns Loss_D.
    pub fn critic_step(&mut self) -> Result<f64, ModelError> {
        let real = self.next_real_batch();
        let z = self.sample_latent(self.batch);
        let fake = self.generator.forward(&z, Mode::Training)?.output;
        let n = self.batch as f32;
        let r = self.critic.forward(&real, Mode::Training)?;
        let f = self.critic.forward(&fake, Mode::Training)?;
        let loss = critic_loss(&f.output, &r.output);
        let gr = self
            .critic
            .backward(&r, &Tensor::filled(r.output.shape().to_vec(), -1.0 / n))?;
        let gf = self
            .critic
            .backward(&f, &Tensor::filled(f.output.shape().to_vec(), 1.0 / n))?;
        let grads: Vec<Tensor<f32>> = gr
            .params
            .into_iter()
            .zip(gf.params)
            .map(|(mut a, b)| {
                for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
                    *x += *y;
                }
                a
            })
            .collect();
        self.critic.apply_adam(&grads, &mut self.critic_opt)?;
        self.critic.clip_weights(self.ccfg.clip as f32);
        Ok(loss)
    }

    /// One generator update; returns Loss_G.
    pub fn generator_step(&mut self) -> Result<f64, ModelError> {
        let z = self.sample_latent(self.batch);
        let (loss, grads) = generator_gradients(&mut self.generator, &mut self.critic, &z)?;
        self.generator.apply_adam(&grads.params, &mut self.generator_opt)?;
        Ok(loss)
    }

    /// Runs one epoch and returns the mean (Loss_G, Loss_D).
    pub fn run_epoch(&mut self) -> Result<(f64, f64), ModelError> {
        let iters = self.iterations_per_epoch();
        let (mut sum_g, mut sum_d) = (0.0, 0.0);
        for _ in 0..iters {
            for _ in 0..self.ccfg.n_critic {
                sum_d += self.critic_step()?;
            }
            sum_g += self.generator_step()?;
        }
        let loss_g = sum_g / iters as f64;
        let loss_d = sum_d / (iters * self.ccfg.n_critic) as f64;
        self.history.loss_g.push(loss_g);
        self.history.loss_d.push(loss_d);
        Ok((loss_g, loss_d))
    }

    fn settings(&self) -> ModelSettings {
        ModelSettings {
            latent_dim: Some(self.gcfg.latent_dim),
            clip: Some(self.ccfg.clip),
            n_critic: Some(self.ccfg.n_critic),
            train: serde_json::to_value(&self.tcfg).unwrap_or_default(),
        }
    }

    pub fn generator_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            kind: ModelKind::Generator,
            vocabulary: self.vocabulary.clone(),
            architecture_name: self.gcfg.architecture.name().to_string(),
            network: self.generator.clone(),
            settings: self.settings(),
            optimizer: Some(self.generator_opt.clone()),
            rng: Some(RngState::capture(&self.rng)),
            history: self.history.clone(),
        }
    }

    pub fn critic_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            kind: ModelKind::Critic,
            vocabulary: self.vocabulary.clone(),
            architecture_name: self.ccfg.architecture.name().to_string(),
            network: self.critic.clone(),
            settings: self.settings(),
            optimizer: Some(self.critic_opt.clone()),
            rng: Some(RngState::capture(&self.rng)),
            history: self.history.clone(),
        }
    }
}

/// Trains without an observer.
pub fn train_wgan(
    dataset: &[Composition],
    vocabulary: &ElementVocabulary,
    gcfg: &GeneratorConfig,
    ccfg: &CriticConfig,
    tcfg: &TrainConfig,
) -> Result<WganOutcome, ModelError> {
    train_wgan_with(dataset, vocabulary, gcfg, ccfg, tcfg, |_, _| {})
}

/// Trains for `tcfg.epochs`, calling `observer(epoch, trainer)` every
/// `checkpoint_every` epochs (1-based) and after the final epoch.
pub fn train_wgan_with(
    dataset: &[Composition],
    vocabulary: &ElementVocabulary,
    gcfg: &GeneratorConfig,
    ccfg: &CriticConfig,
    tcfg: &TrainConfig,
    mut observer: impl FnMut(usize, &WganTrainer),
) -> Result<WganOutcome, ModelError> {
    let mut trainer = WganTrainer::new(dataset, vocabulary, gcfg, ccfg, tcfg)?;
    let mut last_good = (
        trainer.generator.clone(),
        trainer.critic.clone(),
        trainer.history.clone(),
    );
    for epoch in 1..=tcfg.epochs {
        let finite = match trainer.run_epoch() {
            Ok((g, d)) => g.is_finite() && d.is_finite(),
            Err(ModelError::Network(crate::nn::NnError::Numeric(_))) => false,
            Err(e) => return Err(e),
        };
        if !finite {
            trainer.generator = last_good.0;
            trainer.critic = last_good.1;
            trainer.history = last_good.2;
            return Err(ModelError::NonFinite {
                epoch,
                last_good: Some(Box::new(vec![
                    trainer.generator_checkpoint(),
                    trainer.critic_checkpoint(),
                ])),
            });
        }
        last_good = (
            trainer.generator.clone(),
            trainer.critic.clone(),
            trainer.history.clone(),
        );
        let due = tcfg.checkpoint_every.is_some_and(|k| k > 0 && epoch % k == 0);
        if due || epoch == tcfg.epochs {
            observer(epoch, &trainer);
        }
    }
    Ok(WganOutcome {
        generator: trainer.generator_checkpoint(),
        critic: trainer.critic_checkpoint(),
        history: trainer.history.clone(),
    })
}

/// Samples from a generator checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedBatch {
    /// Non-empty decodes in generation order.
    pub compositions: Vec<Composition>,
    /// Row-major activations of every sample, including empty decodes.
    pub raw: Vec<Vec<f32>>,
    pub empty_decodes: usize,
}

const GENERATION_CHUNK: usize = 256;

/// Draws `n` latent vectors, runs the generator in inference mode and
/// discretizes. Chunk `k` of 256 samples uses stream `k` of the seeded RNG, so
/// output is independent of thread scheduling.
pub fn generate_batch(
    generator: &Checkpoint,
    n: usize,
    seed: u64,
    threshold: Option<f64>,
) -> Result<GeneratedBatch, ModelError> {
    if generator.kind != ModelKind::Generator {
        return Err(ModelError::Kind {
            expected: ModelKind::Generator,
            found: generator.kind,
        });
    }
    let threshold = threshold.unwrap_or(DEFAULT_THRESHOLD);
    let latent = generator.network.input_len();
    let net = &generator.network;
    let vocab = &generator.vocabulary;
    let chunks: Vec<usize> = (0..n.div_ceil(GENERATION_CHUNK)).collect();
    let outputs: Vec<Result<Vec<Vec<f32>>, ModelError>> = chunks
        .par_iter()
        .map(|&k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let m = GENERATION_CHUNK.min(n - k * GENERATION_CHUNK);
            let z: Vec<f32> = (0..m * latent).map(|_| rng.sample::<f32, _>(StandardNormal)).collect();
            let z = Tensor::new(vec![m, latent], z).expect("latent shape");
            let y = net.infer(&z)?;
            Ok((0..m).map(|i| y.sample(i).to_vec()).collect())
        })
        .collect();
    let mut raw = Vec::with_capacity(n);
    for chunk in outputs {
        raw.extend(chunk?);
    }
    let mut compositions = Vec::with_capacity(n);
    let mut empty_decodes = 0;
    for values in &raw {
        let c = decode_values(values, vocab, threshold)?;
        if c.is_empty() {
            empty_decodes += 1;
        } else {
            compositions.push(c);
        }
    }
    Ok(GeneratedBatch {
        compositions,
        raw,
        empty_decodes,
    })
}
