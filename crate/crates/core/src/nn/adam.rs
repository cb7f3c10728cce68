use serde::{Deserialize, Serialize};

use super::network::Network;
use super::tensor::{Scalar, Tensor};
use super::NnError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        AdamConfig {
            learning_rate,
            ..AdamConfig::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment estimates per parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub m: Vec<Tensor<T>>,
    pub v: Vec<Tensor<T>>,
    pub step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(config: AdamConfig, params: &[&Tensor<T>]) -> Self {
        let zeros = |p: &&Tensor<T>| Tensor::zeros(p.shape().to_vec());
        AdamState {
            config,
            m: params.iter().map(zeros).collect(),
            v: params.iter().map(zeros).collect(),
            step: 0,
        }
    }

    pub fn for_network(config: AdamConfig, net: &Network<T>) -> Self {
        Self::new(config, &net.params())
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step<T: Scalar>(
    params: &mut [&mut Tensor<T>],
    grads: &[Tensor<T>],
    state: &mut AdamState<T>,
) -> Result<(), NnError> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(NnError::Shape {
            layer: None,
            message: format!(
                "{} parameters, {} gradients, {} moment tensors",
                params.len(),
                grads.len(),
                state.m.len()
            ),
        });
    }
    for ((p, g), m) in params.iter().zip(grads).zip(&state.m) {
        if p.shape() != g.shape() || p.shape() != m.shape() {
            return Err(NnError::Shape {
                layer: None,
                message: format!("parameter {:?} vs gradient {:?}", p.shape(), g.shape()),
            });
        }
    }
    state.step += 1;
    let c = state.config;
    let t = state.step as i32;
    let b1 = T::of(c.beta1);
    let b2 = T::of(c.beta2);
    let one = T::one();
    let bias1 = T::of(1.0 - c.beta1.powi(t));
    let bias2 = T::of(1.0 - c.beta2.powi(t));
    let lr = T::of(c.learning_rate);
    let eps = T::of(c.epsilon);
    for (i, p) in params.iter_mut().enumerate() {
        let g = grads[i].data();
        let m = state.m[i].data_mut();
        let v = state.v[i].data_mut();
        for (k, w) in p.data_mut().iter_mut().enumerate() {
            m[k] = b1 * m[k] + (one - b1) * g[k];
            v[k] = b2 * v[k] + (one - b2) * g[k] * g[k];
            let m_hat = m[k] / bias1;
            let v_hat = v[k] / bias2;
            *w = *w - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

impl<T: Scalar> Network<T> {
    pub fn apply_adam(&mut self, grads: &[Tensor<T>], state: &mut AdamState<T>) -> Result<(), NnError> {
        let mut params = self.params_mut();
        adam_step(&mut params, grads, state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = Tensor::<f64>::from_f64(vec![1], &[0.5]).unwrap();
        let g = Tensor::<f64>::from_f64(vec![1], &[1.0]).unwrap();
        let mut st = AdamState::new(AdamConfig::with_learning_rate(0.001), &[&p]);
        adam_step(&mut [&mut p], &[g], &mut st).unwrap();
        let delta = p.data()[0] - 0.5;
        assert!((delta + 0.001).abs() <= 1e-8 * 0.001, "delta {delta}");
        assert_eq!(st.step, 1);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = Tensor::<f32>::from_f64(vec![3], &[0.1, -0.2, 0.3]).unwrap();
        let before = p.clone();
        let g = Tensor::<f32>::zeros(vec![3]);
        let mut st = AdamState::new(AdamConfig::default(), &[&p]);
        for _ in 0..5 {
            adam_step(&mut [&mut p], std::slice::from_ref(&g), &mut st).unwrap();
        }
        assert_eq!(p, before);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut p = Tensor::<f32>::zeros(vec![3]);
        let g = Tensor::<f32>::zeros(vec![2]);
        let mut st = AdamState::new(AdamConfig::default(), &[&p]);
        assert!(adam_step(&mut [&mut p], &[g], &mut st).is_err());
    }
}
