use crate::nn::{Scalar, Tensor};

use super::ModelError;

/// Negative continuous dice coefficient `-2 (A·B) / (Sum(A) + Sum(B))`.
///
/// Two all-zero inputs have identical (empty) supports and score `-1`.
pub fn dice_loss<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<f64, ModelError> {
    if a.shape() != b.shape() {
        return Err(ModelError::Shape(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(dice_slices(a.data(), b.data()))
}

pub(crate) fn dice_slices<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    let (mut dot, mut sum) = (0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (x.as_f64(), y.as_f64());
        dot += x * y;
        sum += x + y;
    }
    if sum == 0.0 {
        -1.0
    } else {
        -2.0 * dot / sum
    }
}

/// Gradient of [`dice_slices`] with respect to the reconstruction `b`,
/// scaled by `scale` and written into `out`.
pub(crate) fn dice_grad_wrt_second<T: Scalar>(a: &[T], b: &[T], scale: f64, out: &mut [T]) {
    let (mut dot, mut sum) = (0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (x.as_f64(), y.as_f64());
        dot += x * y;
        sum += x + y;
    }
    if sum == 0.0 {
        out.iter_mut().for_each(|v| *v = T::zero());
        return;
    }
    for (o, x) in out.iter_mut().zip(a) {
        *o = T::of(scale * -2.0 * (x.as_f64() * sum - dot) / (sum * sum));
    }
}

/// Mean critic score over a batch of scores.
pub fn mean_score<T: Scalar>(scores: &Tensor<T>) -> f64 {
    let n = scores.len().max(1) as f64;
    scores.data().iter().map(|v| v.as_f64()).sum::<f64>() / n
}

/// Generator loss `-E_g[f(x)]`.
pub fn generator_loss<T: Scalar>(fake_scores: &Tensor<T>) -> f64 {
    -mean_score(fake_scores)
}

/// Critic loss `E_g[f(x)] - E_r[f(x)]`.
pub fn critic_loss<T: Scalar>(fake_scores: &Tensor<T>, real_scores: &Tensor<T>) -> f64 {
    mean_score(fake_scores) - mean_score(real_scores)
}
