//! Small CPU network engine: six layer kinds, explicit forward/backward
//! passes, Adam, weight clipping and finite-difference gradient checks.

mod adam;
mod gradcheck;
mod layers;
mod network;
mod tensor;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{
    gradient_check, gradient_check_with, relative_error, GradCheckReport, GradEntry, ScalarLoss, FD_STEP,
};
pub use layers::{Layer, LayerSpec, DEFAULT_BN_EPS, DEFAULT_BN_MOMENTUM};
pub use network::{clip_weights, ForwardPass, Gradients, Network};
pub use tensor::{Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Training,
    Inference,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("shape error{}: {message}", layer.map(|l| format!(" at layer {l}")).unwrap_or_default())]
    Shape { layer: Option<usize>, message: String },
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("state error: {0}")]
    State(String),
}

impl NnError {
    pub(crate) fn at_layer(self, index: usize) -> Self {
        match self {
            NnError::Shape { layer: None, message } => NnError::Shape {
                layer: Some(index),
                message,
            },
            other => other,
        }
    }
}

#[cfg(test)]
mod tests;
