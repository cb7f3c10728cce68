use std::sync::atomic::{AtomicU64, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::layers::{Cache, Layer, LayerSpec};
use super::tensor::{Scalar, Tensor};
use super::{Mode, NnError};

static GENERATION: AtomicU64 = AtomicU64::new(1);

fn next_generation() -> u64 {
    GENERATION.fetch_add(1, Ordering::Relaxed)
}

/// Feedforward stack of layers over per-sample input shape `input_shape`.
#[derive(Clone, Debug)]
pub struct Network<T> {
    input_shape: Vec<usize>,
    layers: Vec<Layer<T>>,
    seed: u64,
    generation: u64,
}

impl<T: Scalar> PartialEq for Network<T> {
    fn eq(&self, other: &Self) -> bool {
        self.input_shape == other.input_shape && self.layers == other.layers && self.seed == other.seed
    }
}

/// Output of a forward pass plus what the backward pass needs.
#[derive(Clone, Debug)]
pub struct ForwardPass<T> {
    pub output: Tensor<T>,
    caches: Vec<Cache<T>>,
    generation: u64,
    mode: Mode,
}

/// Gradients aligned with [`Network::params`], plus the input gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub params: Vec<Tensor<T>>,
    pub input: Tensor<T>,
}

impl<T: Scalar> Gradients<T> {
    pub fn norm(&self) -> f64 {
        self.params.iter().map(|g| g.norm_sq().as_f64()).sum::<f64>().sqrt()
    }
}

impl<T: Scalar> Network<T> {
    /// Builds and initializes the stack; fails if any layer cannot accept the
    /// previous layer's output shape.
    pub fn new(input_shape: Vec<usize>, specs: &[LayerSpec], seed: u64) -> Result<Self, NnError> {
        if input_shape.is_empty() || input_shape.contains(&0) {
            return Err(NnError::Shape {
                layer: None,
                message: format!("invalid input shape {input_shape:?}"),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(specs.len());
        let mut shape = input_shape.clone();
        for (i, spec) in specs.iter().enumerate() {
            let layer = Layer::build(spec, &shape, &mut rng).map_err(|e| e.at_layer(i))?;
            shape = layer.out_shape().to_vec();
            layers.push(layer);
        }
        Ok(Network {
            input_shape,
            layers,
            seed,
            generation: next_generation(),
        })
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn output_shape(&self) -> &[usize] {
        self.layers.last().map_or(&self.input_shape, |l| l.out_shape())
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec().clone()).collect()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_len(&self) -> usize {
        self.input_shape.iter().product()
    }

    pub fn output_len(&self) -> usize {
        self.output_shape().iter().product()
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    /// Mutable parameters; invalidates outstanding forward passes.
    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.generation = next_generation();
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Every stored tensor with a stable name: parameters then buffers per layer.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            for (name, t) in layer.param_names().iter().zip(layer.params()) {
                out.push((format!("layer{i}.{name}"), t));
            }
            for (name, t) in layer.buffer_names().iter().zip(layer.buffers()) {
                out.push((format!("layer{i}.{name}"), t));
            }
        }
        out
    }

    /// Mutable view in the same order as [`Network::named_tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.generation = next_generation();
        self.layers.iter_mut().flat_map(|l| l.tensors_mut()).collect()
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<(), NnError> {
        if x.shape().len() < 2 || x.sample_len() != self.input_len() {
            return Err(NnError::Shape {
                layer: Some(0),
                message: format!(
                    "input {:?} does not match per-sample shape {:?}",
                    x.shape(),
                    self.input_shape
                ),
            });
        }
        if !x.all_finite() {
            return Err(NnError::Numeric("non-finite value in network input".into()));
        }
        Ok(())
    }

    /// Forward pass. Training mode uses batch statistics in batch-norm layers
    /// and folds them into the running statistics.
    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<ForwardPass<T>, NnError> {
        self.check_input(x)?;
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for layer in &mut self.layers {
            let (y, cache, stats) = layer.forward(&cur, mode);
            if let Some((mean, var)) = stats {
                layer.fold_running_stats(&mean, &var);
            }
            caches.push(cache);
            cur = y;
        }
        Ok(ForwardPass {
            output: cur,
            caches,
            generation: self.generation,
            mode,
        })
    }

    /// Inference-mode forward; a pure function of parameters and input.
    pub fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        self.check_input(x)?;
        let mut cur = x.clone();
        for layer in &self.layers {
            cur = layer.forward(&cur, Mode::Inference).0;
        }
        Ok(cur)
    }

    /// Backpropagates `upstream` (dLoss/dOutput) through a training pass.
    pub fn backward(&self, pass: &ForwardPass<T>, upstream: &Tensor<T>) -> Result<Gradients<T>, NnError> {
        if pass.generation != self.generation || pass.caches.len() != self.layers.len() {
            return Err(NnError::State(
                "forward pass is stale: parameters changed since it was taken".into(),
            ));
        }
        if pass.mode != Mode::Training {
            return Err(NnError::State("backward requires a training-mode forward pass".into()));
        }
        if upstream.shape() != pass.output.shape() {
            return Err(NnError::Shape {
                layer: Some(self.layers.len().saturating_sub(1)),
                message: format!(
                    "upstream gradient {:?} does not match output {:?}",
                    upstream.shape(),
                    pass.output.shape()
                ),
            });
        }
        let mut per_layer: Vec<Vec<Tensor<T>>> = Vec::with_capacity(self.layers.len());
        let mut grad = upstream.clone();
        for (i, (layer, cache)) in self.layers.iter().zip(&pass.caches).enumerate().rev() {
            let (dx, dp) = layer.backward(cache, &grad).map_err(|e| e.at_layer(i))?;
            per_layer.push(dp);
            grad = dx;
        }
        per_layer.reverse();
        Ok(Gradients {
            params: per_layer.into_iter().flatten().collect(),
            input: grad,
        })
    }

    /// Clamps every trainable parameter into `[-c, c]`; running statistics are untouched.
    pub fn clip_weights(&mut self, c: T) {
        for p in self.params_mut() {
            for v in p.data_mut() {
                *v = v.max(-c).min(c);
            }
        }
    }

    pub fn max_abs_param(&self) -> T {
        self.params().iter().fold(T::zero(), |m, p| m.max(p.max_abs()))
    }

    /// Same architecture and values at another precision.
    pub fn cast<U: Scalar>(&self) -> Network<U> {
        let mut out = Network::<U>::new(self.input_shape.clone(), &self.specs(), self.seed).expect("same specs");
        for (dst, (_, src)) in out.tensors_mut().into_iter().zip(self.named_tensors()) {
            *dst = src.cast();
        }
        out
    }
}

/// Free-function form of [`Network::clip_weights`].
pub fn clip_weights<T: Scalar>(net: &mut Network<T>, c: f64) {
    net.clip_weights(T::of(c));
}
