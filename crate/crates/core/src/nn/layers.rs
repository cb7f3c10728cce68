use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{Scalar, Tensor};
use super::{Mode, NnError};

pub const DEFAULT_BN_EPS: f64 = 1e-5;
pub const DEFAULT_BN_MOMENTUM: f64 = 0.1;

fn unit_pair() -> [usize; 2] {
    [1, 1]
}

fn default_eps() -> f64 {
    DEFAULT_BN_EPS
}

fn default_momentum() -> f64 {
    DEFAULT_BN_MOMENTUM
}

/// Declarative layer description; the input shape of each layer is the
/// output shape of the previous one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    /// Flattens its input and produces a tensor of shape `out`.
    FullyConnected {
        out: Vec<usize>,
    },
    Conv2d {
        out_channels: usize,
        kernel: [usize; 2],
        #[serde(default = "unit_pair")]
        stride: [usize; 2],
        #[serde(default)]
        padding: [usize; 2],
    },
    Deconv2d {
        out_channels: usize,
        kernel: [usize; 2],
        #[serde(default = "unit_pair")]
        stride: [usize; 2],
        #[serde(default)]
        padding: [usize; 2],
        #[serde(default)]
        output_padding: [usize; 2],
    },
    BatchNorm {
        #[serde(default = "default_eps")]
        eps: f64,
        #[serde(default = "default_momentum")]
        momentum: f64,
    },
    Relu,
    Sigmoid,
}

impl LayerSpec {
    pub fn dense(out: usize) -> Self {
        LayerSpec::FullyConnected { out: vec![out] }
    }

    pub fn dense_shaped(out: Vec<usize>) -> Self {
        LayerSpec::FullyConnected { out }
    }

    pub fn conv(out_channels: usize, kernel: [usize; 2], stride: [usize; 2], padding: [usize; 2]) -> Self {
        LayerSpec::Conv2d {
            out_channels,
            kernel,
            stride,
            padding,
        }
    }

    pub fn deconv(out_channels: usize, kernel: [usize; 2], stride: [usize; 2], padding: [usize; 2]) -> Self {
        LayerSpec::Deconv2d {
            out_channels,
            kernel,
            stride,
            padding,
            output_padding: [0, 0],
        }
    }

    pub fn batch_norm() -> Self {
        LayerSpec::BatchNorm {
            eps: DEFAULT_BN_EPS,
            momentum: DEFAULT_BN_MOMENTUM,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::FullyConnected { .. } => "fully_connected",
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::Deconv2d { .. } => "deconv2d",
            LayerSpec::BatchNorm { .. } => "batch_norm",
            LayerSpec::Relu => "relu",
            LayerSpec::Sigmoid => "sigmoid",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Geometry {
    ic: usize,
    ih: usize,
    iw: usize,
    oc: usize,
    oh: usize,
    ow: usize,
    kh: usize,
    kw: usize,
    sh: usize,
    sw: usize,
    ph: usize,
    pw: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Kind<T> {
    Dense {
        weight: Tensor<T>,
        bias: Tensor<T>,
    },
    Conv {
        weight: Tensor<T>,
        bias: Tensor<T>,
        geom: Geometry,
    },
    Deconv {
        weight: Tensor<T>,
        bias: Tensor<T>,
        geom: Geometry,
    },
    BatchNorm {
        gamma: Tensor<T>,
        beta: Tensor<T>,
        running_mean: Tensor<T>,
        running_var: Tensor<T>,
        eps: f64,
        momentum: f64,
        channels: usize,
        spatial: usize,
    },
    Relu,
    Sigmoid,
}

/// A constructed layer with resolved shapes and parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    pub(crate) spec: LayerSpec,
    pub(crate) in_shape: Vec<usize>,
    pub(crate) out_shape: Vec<usize>,
    pub(crate) kind: Kind<T>,
}

/// Batch mean and variance per channel.
type BatchStats<T> = (Vec<T>, Vec<T>);

/// Values retained by a training forward pass for the backward pass.
#[derive(Clone, Debug)]
pub(crate) enum Cache<T> {
    Input(Tensor<T>),
    Output(Tensor<T>),
    BatchNorm { xhat: Vec<T>, inv_std: Vec<T> },
}

fn shape_err(message: String) -> NnError {
    NnError::Shape { layer: None, message }
}

fn glorot<T: Scalar, R: Rng>(rng: &mut R, shape: Vec<usize>, fan_in: usize, fan_out: usize) -> Tensor<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| T::of(rng.random_range(-limit..=limit))).collect();
    Tensor::new(shape, data).expect("shape matches")
}

impl<T: Scalar> Layer<T> {
    pub(crate) fn build<R: Rng>(spec: &LayerSpec, in_shape: &[usize], rng: &mut R) -> Result<Self, NnError> {
        let in_len: usize = in_shape.iter().product();
        let (out_shape, kind) = match spec {
            LayerSpec::FullyConnected { out } => {
                if out.is_empty() || out.contains(&0) {
                    return Err(shape_err(format!("invalid fully_connected output {out:?}")));
                }
                let out_len: usize = out.iter().product();
                let weight = glorot(rng, vec![out_len, in_len], in_len, out_len);
                (
                    out.clone(),
                    Kind::Dense {
                        weight,
                        bias: Tensor::zeros(vec![out_len]),
                    },
                )
            }
            LayerSpec::Conv2d {
                out_channels,
                kernel,
                stride,
                padding,
            } => {
                let [ic, ih, iw] = chw(in_shape, "conv2d")?;
                check_kernel(*out_channels, kernel, stride)?;
                let span = |i: usize, p: usize, k: usize, s: usize| -> Result<usize, NnError> {
                    if i + 2 * p < k {
                        return Err(shape_err(format!("kernel {k} exceeds padded input {}", i + 2 * p)));
                    }
                    Ok((i + 2 * p - k) / s + 1)
                };
                let oh = span(ih, padding[0], kernel[0], stride[0])?;
                let ow = span(iw, padding[1], kernel[1], stride[1])?;
                let geom = Geometry {
                    ic,
                    ih,
                    iw,
                    oc: *out_channels,
                    oh,
                    ow,
                    kh: kernel[0],
                    kw: kernel[1],
                    sh: stride[0],
                    sw: stride[1],
                    ph: padding[0],
                    pw: padding[1],
                };
                let rf = kernel[0] * kernel[1];
                let weight = glorot(
                    rng,
                    vec![*out_channels, ic, kernel[0], kernel[1]],
                    ic * rf,
                    out_channels * rf,
                );
                (
                    vec![*out_channels, oh, ow],
                    Kind::Conv {
                        weight,
                        bias: Tensor::zeros(vec![*out_channels]),
                        geom,
                    },
                )
            }
            LayerSpec::Deconv2d {
                out_channels,
                kernel,
                stride,
                padding,
                output_padding,
            } => {
                let [ic, ih, iw] = chw(in_shape, "deconv2d")?;
                check_kernel(*out_channels, kernel, stride)?;
                let span = |i: usize, p: usize, k: usize, s: usize, op: usize| -> Result<usize, NnError> {
                    if op >= s {
                        return Err(shape_err(format!("output padding {op} must be below stride {s}")));
                    }
                    let full = (i - 1) * s + k + op;
                    if full <= 2 * p {
                        return Err(shape_err(format!("padding {p} leaves no output")));
                    }
                    Ok(full - 2 * p)
                };
                let oh = span(ih, padding[0], kernel[0], stride[0], output_padding[0])?;
                let ow = span(iw, padding[1], kernel[1], stride[1], output_padding[1])?;
                let geom = Geometry {
                    ic,
                    ih,
                    iw,
                    oc: *out_channels,
                    oh,
                    ow,
                    kh: kernel[0],
                    kw: kernel[1],
                    sh: stride[0],
                    sw: stride[1],
                    ph: padding[0],
                    pw: padding[1],
                };
                let rf = kernel[0] * kernel[1];
                let weight = glorot(
                    rng,
                    vec![ic, *out_channels, kernel[0], kernel[1]],
                    ic * rf,
                    out_channels * rf,
                );
                (
                    vec![*out_channels, oh, ow],
                    Kind::Deconv {
                        weight,
                        bias: Tensor::zeros(vec![*out_channels]),
                        geom,
                    },
                )
            }
            LayerSpec::BatchNorm { eps, momentum } => {
                if !(*eps > 0.0) || !(0.0..=1.0).contains(momentum) {
                    return Err(shape_err(format!("invalid batch_norm eps {eps} / momentum {momentum}")));
                }
                let (channels, spatial) = if in_shape.len() >= 2 {
                    (in_shape[0], in_shape[1..].iter().product())
                } else {
                    (in_len, 1)
                };
                (
                    in_shape.to_vec(),
                    Kind::BatchNorm {
                        gamma: Tensor::filled(vec![channels], T::one()),
                        beta: Tensor::zeros(vec![channels]),
                        running_mean: Tensor::zeros(vec![channels]),
                        running_var: Tensor::filled(vec![channels], T::one()),
                        eps: *eps,
                        momentum: *momentum,
                        channels,
                        spatial,
                    },
                )
            }
            LayerSpec::Relu => (in_shape.to_vec(), Kind::Relu),
            LayerSpec::Sigmoid => (in_shape.to_vec(), Kind::Sigmoid),
        };
        Ok(Layer {
            spec: spec.clone(),
            in_shape: in_shape.to_vec(),
            out_shape,
            kind,
        })
    }

    pub fn spec(&self) -> &LayerSpec {
        &self.spec
    }

    pub fn in_shape(&self) -> &[usize] {
        &self.in_shape
    }

    pub fn out_shape(&self) -> &[usize] {
        &self.out_shape
    }

    /// Trainable parameters (weights, biases, batch-norm scale and shift).
    pub fn params(&self) -> Vec<&Tensor<T>> {
        match &self.kind {
            Kind::Dense { weight, bias } | Kind::Conv { weight, bias, .. } | Kind::Deconv { weight, bias, .. } => {
                vec![weight, bias]
            }
            Kind::BatchNorm { gamma, beta, .. } => vec![gamma, beta],
            Kind::Relu | Kind::Sigmoid => vec![],
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        match &mut self.kind {
            Kind::Dense { weight, bias } | Kind::Conv { weight, bias, .. } | Kind::Deconv { weight, bias, .. } => {
                vec![weight, bias]
            }
            Kind::BatchNorm { gamma, beta, .. } => vec![gamma, beta],
            Kind::Relu | Kind::Sigmoid => vec![],
        }
    }

    pub(crate) fn param_names(&self) -> &'static [&'static str] {
        match &self.kind {
            Kind::Dense { .. } | Kind::Conv { .. } | Kind::Deconv { .. } => &["weight", "bias"],
            Kind::BatchNorm { .. } => &["gamma", "beta"],
            Kind::Relu | Kind::Sigmoid => &[],
        }
    }

    /// Non-trainable running statistics.
    pub fn buffers(&self) -> Vec<&Tensor<T>> {
        match &self.kind {
            Kind::BatchNorm {
                running_mean,
                running_var,
                ..
            } => vec![running_mean, running_var],
            _ => vec![],
        }
    }

    pub fn buffers_mut(&mut self) -> Vec<&mut Tensor<T>> {
        match &mut self.kind {
            Kind::BatchNorm {
                running_mean,
                running_var,
                ..
            } => vec![running_mean, running_var],
            _ => vec![],
        }
    }

    /// Parameters followed by buffers.
    pub(crate) fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        match &mut self.kind {
            Kind::Dense { weight, bias } | Kind::Conv { weight, bias, .. } | Kind::Deconv { weight, bias, .. } => {
                vec![weight, bias]
            }
            Kind::BatchNorm {
                gamma,
                beta,
                running_mean,
                running_var,
                ..
            } => vec![gamma, beta, running_mean, running_var],
            Kind::Relu | Kind::Sigmoid => vec![],
        }
    }

    pub(crate) fn buffer_names(&self) -> &'static [&'static str] {
        match &self.kind {
            Kind::BatchNorm { .. } => &["running_mean", "running_var"],
            _ => &[],
        }
    }

    /// Returns output, cache, and (for batch-norm in training) the batch
    /// mean/variance to fold into the running statistics.
    pub(crate) fn forward(&self, x: &Tensor<T>, mode: Mode) -> (Tensor<T>, Cache<T>, Option<BatchStats<T>>) {
        let n = x.batch();
        let mut out_shape = vec![n];
        out_shape.extend_from_slice(&self.out_shape);
        match &self.kind {
            Kind::Dense { weight, bias } => {
                let (o, i) = (weight.shape()[0], weight.shape()[1]);
                let w = weight.data();
                let b = bias.data();
                let mut y = vec![T::zero(); n * o];
                for s in 0..n {
                    let xs = x.sample(s);
                    for r in 0..o {
                        let row = &w[r * i..(r + 1) * i];
                        let mut acc = b[r];
                        for (wv, xv) in row.iter().zip(xs) {
                            acc = acc + *wv * *xv;
                        }
                        y[s * o + r] = acc;
                    }
                }
                (Tensor::new(out_shape, y).expect("shape"), Cache::Input(x.clone()), None)
            }
            Kind::Conv { weight, bias, geom } => {
                let y = conv_forward(x.data(), n, weight.data(), bias.data(), geom);
                (Tensor::new(out_shape, y).expect("shape"), Cache::Input(x.clone()), None)
            }
            Kind::Deconv { weight, bias, geom } => {
                let y = deconv_forward(x.data(), n, weight.data(), bias.data(), geom);
                (Tensor::new(out_shape, y).expect("shape"), Cache::Input(x.clone()), None)
            }
            Kind::BatchNorm {
                gamma,
                beta,
                running_mean,
                running_var,
                eps,
                channels,
                spatial,
                ..
            } => {
                let (c, sp) = (*channels, *spatial);
                let eps = T::of(*eps);
                let xd = x.data();
                let at = |s: usize, ch: usize, p: usize| (s * c + ch) * sp + p;
                let (mean, var, update) = match mode {
                    Mode::Training => {
                        let m = T::of((n * sp) as f64);
                        let mut mean = vec![T::zero(); c];
                        let mut var = vec![T::zero(); c];
                        for ch in 0..c {
                            let mut acc = T::zero();
                            for s in 0..n {
                                for p in 0..sp {
                                    acc = acc + xd[at(s, ch, p)];
                                }
                            }
                            mean[ch] = acc / m;
                            let mut acc = T::zero();
                            for s in 0..n {
                                for p in 0..sp {
                                    let d = xd[at(s, ch, p)] - mean[ch];
                                    acc = acc + d * d;
                                }
                            }
                            var[ch] = acc / m;
                        }
                        (mean.clone(), var.clone(), Some((mean, var)))
                    }
                    Mode::Inference => (running_mean.data().to_vec(), running_var.data().to_vec(), None),
                };
                let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
                let mut xhat = vec![T::zero(); xd.len()];
                let mut y = vec![T::zero(); xd.len()];
                for s in 0..n {
                    for ch in 0..c {
                        for p in 0..sp {
                            let k = at(s, ch, p);
                            xhat[k] = (xd[k] - mean[ch]) * inv_std[ch];
                            y[k] = gamma.data()[ch] * xhat[k] + beta.data()[ch];
                        }
                    }
                }
                (
                    Tensor::new(out_shape, y).expect("shape"),
                    Cache::BatchNorm { xhat, inv_std },
                    update,
                )
            }
            Kind::Relu => {
                let y = x.map(|v| if v > T::zero() { v } else { T::zero() });
                (y, Cache::Input(x.clone()), None)
            }
            Kind::Sigmoid => {
                let y = x.map(sigmoid);
                (y.clone(), Cache::Output(y), None)
            }
        }
    }

    pub(crate) fn backward(&self, cache: &Cache<T>, dy: &Tensor<T>) -> Result<(Tensor<T>, Vec<Tensor<T>>), NnError> {
        let n = dy.batch();
        let mut in_shape = vec![n];
        in_shape.extend_from_slice(&self.in_shape);
        let stale = || NnError::State("cache does not belong to this layer".into());
        match (&self.kind, cache) {
            (Kind::Dense { weight, .. }, Cache::Input(x)) => {
                let (o, i) = (weight.shape()[0], weight.shape()[1]);
                let w = weight.data();
                let mut dw = vec![T::zero(); o * i];
                let mut db = vec![T::zero(); o];
                let mut dx = vec![T::zero(); n * i];
                for s in 0..n {
                    let xs = x.sample(s);
                    let gs = dy.sample(s);
                    let dxs = &mut dx[s * i..(s + 1) * i];
                    for r in 0..o {
                        let g = gs[r];
                        db[r] = db[r] + g;
                        let row = &w[r * i..(r + 1) * i];
                        let drow = &mut dw[r * i..(r + 1) * i];
                        for c in 0..i {
                            drow[c] = drow[c] + g * xs[c];
                            dxs[c] = dxs[c] + g * row[c];
                        }
                    }
                }
                Ok((
                    Tensor::new(in_shape, dx)?,
                    vec![Tensor::new(vec![o, i], dw)?, Tensor::new(vec![o], db)?],
                ))
            }
            (Kind::Conv { weight, geom, .. }, Cache::Input(x)) => {
                let (dx, dw, db) = conv_backward(x.data(), n, weight.data(), dy.data(), geom);
                Ok((
                    Tensor::new(in_shape, dx)?,
                    vec![
                        Tensor::new(weight.shape().to_vec(), dw)?,
                        Tensor::new(vec![geom.oc], db)?,
                    ],
                ))
            }
            (Kind::Deconv { weight, geom, .. }, Cache::Input(x)) => {
                let (dx, dw, db) = deconv_backward(x.data(), n, weight.data(), dy.data(), geom);
                Ok((
                    Tensor::new(in_shape, dx)?,
                    vec![
                        Tensor::new(weight.shape().to_vec(), dw)?,
                        Tensor::new(vec![geom.oc], db)?,
                    ],
                ))
            }
            (
                Kind::BatchNorm {
                    gamma,
                    channels,
                    spatial,
                    ..
                },
                Cache::BatchNorm { xhat, inv_std },
            ) => {
                let (c, sp) = (*channels, *spatial);
                let g = dy.data();
                let at = |s: usize, ch: usize, p: usize| (s * c + ch) * sp + p;
                let m = T::of((n * sp) as f64);
                let mut dgamma = vec![T::zero(); c];
                let mut dbeta = vec![T::zero(); c];
                let mut dx = vec![T::zero(); g.len()];
                for ch in 0..c {
                    let mut sum_g = T::zero();
                    let mut sum_gx = T::zero();
                    for s in 0..n {
                        for p in 0..sp {
                            let k = at(s, ch, p);
                            sum_g = sum_g + g[k];
                            sum_gx = sum_gx + g[k] * xhat[k];
                        }
                    }
                    dbeta[ch] = sum_g;
                    dgamma[ch] = sum_gx;
                    let scale = gamma.data()[ch] * inv_std[ch] / m;
                    for s in 0..n {
                        for p in 0..sp {
                            let k = at(s, ch, p);
                            dx[k] = scale * (m * g[k] - sum_g - xhat[k] * sum_gx);
                        }
                    }
                }
                Ok((
                    Tensor::new(in_shape, dx)?,
                    vec![Tensor::new(vec![c], dgamma)?, Tensor::new(vec![c], dbeta)?],
                ))
            }
            (Kind::Relu, Cache::Input(x)) => {
                let dx = x
                    .data()
                    .iter()
                    .zip(dy.data())
                    .map(|(&xv, &g)| if xv > T::zero() { g } else { T::zero() })
                    .collect();
                Ok((Tensor::new(in_shape, dx)?, vec![]))
            }
            (Kind::Sigmoid, Cache::Output(y)) => {
                let dx = y
                    .data()
                    .iter()
                    .zip(dy.data())
                    .map(|(&yv, &g)| g * yv * (T::one() - yv))
                    .collect();
                Ok((Tensor::new(in_shape, dx)?, vec![]))
            }
            _ => Err(stale()),
        }
    }

    pub(crate) fn fold_running_stats(&mut self, mean: &[T], var: &[T]) {
        if let Kind::BatchNorm {
            running_mean,
            running_var,
            momentum,
            ..
        } = &mut self.kind
        {
            let mom = T::of(*momentum);
            let keep = T::one() - mom;
            for (r, &m) in running_mean.data_mut().iter_mut().zip(mean) {
                *r = keep * *r + mom * m;
            }
            for (r, &v) in running_var.data_mut().iter_mut().zip(var) {
                *r = keep * *r + mom * v;
            }
        }
    }
}

pub(crate) fn sigmoid<T: Scalar>(v: T) -> T {
    if v >= T::zero() {
        T::one() / (T::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}

fn chw(in_shape: &[usize], name: &str) -> Result<[usize; 3], NnError> {
    match in_shape {
        [c, h, w] => Ok([*c, *h, *w]),
        _ => Err(shape_err(format!(
            "{name} needs a channels x rows x cols input, got {in_shape:?}"
        ))),
    }
}

fn check_kernel(out_channels: usize, kernel: &[usize; 2], stride: &[usize; 2]) -> Result<(), NnError> {
    if out_channels == 0 || kernel.contains(&0) || stride.contains(&0) {
        return Err(shape_err(format!(
            "channels {out_channels}, kernel {kernel:?} and stride {stride:?} must be positive"
        )));
    }
    Ok(())
}

/// Input coordinate for output position `o` and kernel offset `k`, if in range.
#[inline]
fn conv_src(o: usize, k: usize, s: usize, p: usize, limit: usize) -> Option<usize> {
    let v = (o * s + k) as isize - p as isize;
    if v >= 0 && (v as usize) < limit {
        Some(v as usize)
    } else {
        None
    }
}

fn conv_forward<T: Scalar>(x: &[T], n: usize, w: &[T], b: &[T], g: &Geometry) -> Vec<T> {
    let mut y = vec![T::zero(); n * g.oc * g.oh * g.ow];
    for s in 0..n {
        for oc in 0..g.oc {
            for oh in 0..g.oh {
                for ow in 0..g.ow {
                    let mut acc = b[oc];
                    for ic in 0..g.ic {
                        for kh in 0..g.kh {
                            let Some(ih) = conv_src(oh, kh, g.sh, g.ph, g.ih) else {
                                continue;
                            };
                            for kw in 0..g.kw {
                                let Some(iw) = conv_src(ow, kw, g.sw, g.pw, g.iw) else {
                                    continue;
                                };
                                acc = acc
                                    + w[((oc * g.ic + ic) * g.kh + kh) * g.kw + kw]
                                        * x[((s * g.ic + ic) * g.ih + ih) * g.iw + iw];
                            }
                        }
                    }
                    y[((s * g.oc + oc) * g.oh + oh) * g.ow + ow] = acc;
                }
            }
        }
    }
    y
}

fn conv_backward<T: Scalar>(x: &[T], n: usize, w: &[T], dy: &[T], g: &Geometry) -> (Vec<T>, Vec<T>, Vec<T>) {
    let mut dx = vec![T::zero(); x.len()];
    let mut dw = vec![T::zero(); w.len()];
    let mut db = vec![T::zero(); g.oc];
    for s in 0..n {
        for oc in 0..g.oc {
            for oh in 0..g.oh {
                for ow in 0..g.ow {
                    let grad = dy[((s * g.oc + oc) * g.oh + oh) * g.ow + ow];
                    db[oc] = db[oc] + grad;
                    for ic in 0..g.ic {
                        for kh in 0..g.kh {
                            let Some(ih) = conv_src(oh, kh, g.sh, g.ph, g.ih) else {
                                continue;
                            };
                            for kw in 0..g.kw {
                                let Some(iw) = conv_src(ow, kw, g.sw, g.pw, g.iw) else {
                                    continue;
                                };
                                let wi = ((oc * g.ic + ic) * g.kh + kh) * g.kw + kw;
                                let xi = ((s * g.ic + ic) * g.ih + ih) * g.iw + iw;
                                dw[wi] = dw[wi] + grad * x[xi];
                                dx[xi] = dx[xi] + grad * w[wi];
                            }
                        }
                    }
                }
            }
        }
    }
    (dx, dw, db)
}

fn deconv_forward<T: Scalar>(x: &[T], n: usize, w: &[T], b: &[T], g: &Geometry) -> Vec<T> {
    let mut y = vec![T::zero(); n * g.oc * g.oh * g.ow];
    for s in 0..n {
        for oc in 0..g.oc {
            let base = (s * g.oc + oc) * g.oh * g.ow;
            for v in &mut y[base..base + g.oh * g.ow] {
                *v = b[oc];
            }
        }
        for ic in 0..g.ic {
            for ih in 0..g.ih {
                for iw in 0..g.iw {
                    let xv = x[((s * g.ic + ic) * g.ih + ih) * g.iw + iw];
                    for oc in 0..g.oc {
                        for kh in 0..g.kh {
                            let Some(oh) = conv_src(ih, kh, g.sh, g.ph, g.oh) else {
                                continue;
                            };
                            for kw in 0..g.kw {
                                let Some(ow) = conv_src(iw, kw, g.sw, g.pw, g.ow) else {
                                    continue;
                                };
                                let yi = ((s * g.oc + oc) * g.oh + oh) * g.ow + ow;
                                y[yi] = y[yi] + xv * w[((ic * g.oc + oc) * g.kh + kh) * g.kw + kw];
                            }
                        }
                    }
                }
            }
        }
    }
    y
}

fn deconv_backward<T: Scalar>(x: &[T], n: usize, w: &[T], dy: &[T], g: &Geometry) -> (Vec<T>, Vec<T>, Vec<T>) {
    let mut dx = vec![T::zero(); x.len()];
    let mut dw = vec![T::zero(); w.len()];
    let mut db = vec![T::zero(); g.oc];
    for s in 0..n {
        for oc in 0..g.oc {
            let base = (s * g.oc + oc) * g.oh * g.ow;
            db[oc] = db[oc] + dy[base..base + g.oh * g.ow].iter().copied().sum::<T>();
        }
        for ic in 0..g.ic {
            for ih in 0..g.ih {
                for iw in 0..g.iw {
                    let xi = ((s * g.ic + ic) * g.ih + ih) * g.iw + iw;
                    let xv = x[xi];
                    let mut acc = T::zero();
                    for oc in 0..g.oc {
                        for kh in 0..g.kh {
                            let Some(oh) = conv_src(ih, kh, g.sh, g.ph, g.oh) else {
                                continue;
                            };
                            for kw in 0..g.kw {
                                let Some(ow) = conv_src(iw, kw, g.sw, g.pw, g.ow) else {
                                    continue;
                                };
                                let grad = dy[((s * g.oc + oc) * g.oh + oh) * g.ow + ow];
                                let wi = ((ic * g.oc + oc) * g.kh + kh) * g.kw + kw;
                                acc = acc + grad * w[wi];
                                dw[wi] = dw[wi] + grad * xv;
                            }
                        }
                    }
                    dx[xi] = acc;
                }
            }
        }
    }
    (dx, dw, db)
}
