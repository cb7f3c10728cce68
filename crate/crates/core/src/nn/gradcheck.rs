use serde::Serialize;

use super::network::{ForwardPass, Gradients, Network};
use super::tensor::Tensor;
use super::{Mode, NnError};

/// Step used for central differences.
pub const FD_STEP: f64 = 1e-5;

/// Scalar loss over the network output: returns the loss and dLoss/dOutput.
pub trait ScalarLoss: Fn(&Tensor<f64>) -> (f64, Tensor<f64>) {}
impl<F: Fn(&Tensor<f64>) -> (f64, Tensor<f64>)> ScalarLoss for F {}

#[derive(Clone, Debug, Serialize)]
pub struct GradEntry {
    /// Parameter tensor index, or `None` for the network input.
    pub tensor: Option<usize>,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GradCheckReport {
    pub entries: Vec<GradEntry>,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// `|a - n| / max(|a| + |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

fn loss_at(net: &Network<f64>, input: &Tensor<f64>, loss: &impl ScalarLoss) -> Result<f64, NnError> {
    // Training-mode forward on a scratch copy so running statistics never leak.
    let mut scratch = net.clone();
    let pass = scratch.forward(input, Mode::Training)?;
    Ok(loss(&pass.output).0)
}

/// Compares `Network::backward` against central finite differences for every
/// parameter and input value.
pub fn gradient_check(
    net: &Network<f64>,
    loss: impl ScalarLoss,
    input: &Tensor<f64>,
    tolerance: f64,
) -> Result<GradCheckReport, NnError> {
    gradient_check_with(net, loss, input, tolerance, |n, pass, up| n.backward(pass, up))
}

/// As [`gradient_check`], with the analytic gradient supplied by `backward`.
pub fn gradient_check_with<B>(
    net: &Network<f64>,
    loss: impl ScalarLoss,
    input: &Tensor<f64>,
    tolerance: f64,
    backward: B,
) -> Result<GradCheckReport, NnError>
where
    B: Fn(&Network<f64>, &ForwardPass<f64>, &Tensor<f64>) -> Result<Gradients<f64>, NnError>,
{
    let mut work = net.clone();
    let pass = work.forward(input, Mode::Training)?;
    let (_, upstream) = loss(&pass.output);
    let analytic = backward(&work, &pass, &upstream)?;

    let h = FD_STEP;
    let mut entries = Vec::new();
    let n_params = net.params().len();
    for t in 0..n_params {
        let len = net.params()[t].len();
        for k in 0..len {
            let mut plus = net.clone();
            plus.params_mut()[t].data_mut()[k] += h;
            let mut minus = net.clone();
            minus.params_mut()[t].data_mut()[k] -= h;
            let numeric = (loss_at(&plus, input, &loss)? - loss_at(&minus, input, &loss)?) / (2.0 * h);
            let a = analytic.params[t].data()[k];
            entries.push(GradEntry {
                tensor: Some(t),
                index: k,
                analytic: a,
                numeric,
                rel_error: relative_error(a, numeric),
            });
        }
    }
    for k in 0..input.len() {
        let mut plus = input.clone();
        plus.data_mut()[k] += h;
        let mut minus = input.clone();
        minus.data_mut()[k] -= h;
        let numeric = (loss_at(net, &plus, &loss)? - loss_at(net, &minus, &loss)?) / (2.0 * h);
        let a = analytic.input.data()[k];
        entries.push(GradEntry {
            tensor: None,
            index: k,
            analytic: a,
            numeric,
            rel_error: relative_error(a, numeric),
        });
    }
    let max_rel_error = entries.iter().map(|e| e.rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport {
        passed: max_rel_error <= tolerance,
        entries,
        max_rel_error,
        tolerance,
    })
}
