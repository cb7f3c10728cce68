use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn random_tensor(shape: Vec<usize>, seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor::new(shape, data).unwrap()
}

/// Weighted-sum loss with fixed random weights; avoids the zero gradient a
/// plain sum has through batch-norm.
fn weighted_loss(shape: Vec<usize>, seed: u64) -> impl Fn(&Tensor<f64>) -> (f64, Tensor<f64>) {
    let w = random_tensor(shape, seed);
    move |y: &Tensor<f64>| {
        let l = y.data().iter().zip(w.data()).map(|(a, b)| a * b).sum();
        (l, w.clone())
    }
}

/// Randomises all parameters to magnitude ~1 so checks do not sit on the init.
fn randomise(net: &mut Network<f64>, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in net.params_mut() {
        for v in p.data_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
    }
}

fn check(input_shape: Vec<usize>, specs: Vec<LayerSpec>, batch: usize) -> GradCheckReport {
    let mut net = Network::<f64>::new(input_shape.clone(), &specs, 3).unwrap();
    randomise(&mut net, 11);
    let mut shape = vec![batch];
    shape.extend_from_slice(&input_shape);
    let x = random_tensor(shape, 5);
    let mut out_shape = vec![batch];
    out_shape.extend_from_slice(net.output_shape());
    let report = gradient_check(&net, weighted_loss(out_shape, 9), &x, 1e-4).unwrap();
    assert!(
        report.passed,
        "{:?}: max relative error {}",
        specs.iter().map(|s| s.name()).collect::<Vec<_>>(),
        report.max_rel_error
    );
    report
}

#[test]
fn fully_connected_gradients() {
    check(vec![5], vec![LayerSpec::dense(3)], 4);
}

#[test]
fn conv2d_gradients() {
    check(vec![2, 4, 5], vec![LayerSpec::conv(3, [2, 3], [1, 2], [1, 1])], 4);
}

#[test]
fn deconv2d_gradients() {
    let spec = LayerSpec::Deconv2d {
        out_channels: 2,
        kernel: [2, 3],
        stride: [2, 2],
        padding: [0, 1],
        output_padding: [1, 0],
    };
    check(vec![3, 2, 3], vec![spec], 4);
}

#[test]
fn batch_norm_gradients() {
    check(vec![6], vec![LayerSpec::batch_norm()], 4);
    check(vec![2, 2, 3], vec![LayerSpec::batch_norm()], 4);
}

#[test]
fn activation_gradients() {
    check(vec![7], vec![LayerSpec::Relu], 4);
    check(vec![7], vec![LayerSpec::Sigmoid], 4);
}

#[test]
fn stacked_network_gradients() {
    check(
        vec![4],
        vec![
            LayerSpec::dense_shaped(vec![2, 1, 3]),
            LayerSpec::deconv(3, [2, 2], [1, 1], [0, 0]),
            LayerSpec::batch_norm(),
            LayerSpec::Relu,
            LayerSpec::conv(2, [2, 2], [1, 1], [0, 0]),
            LayerSpec::dense(1),
            LayerSpec::Sigmoid,
        ],
        5,
    );
}

#[test]
fn sign_flipped_backward_fails_check() {
    let mut net = Network::<f64>::new(vec![5], &[LayerSpec::dense(3)], 3).unwrap();
    randomise(&mut net, 1);
    let x = random_tensor(vec![4, 5], 2);
    let report = gradient_check_with(&net, weighted_loss(vec![4, 3], 3), &x, 1e-4, |n, pass, up| {
        let mut g = n.backward(pass, up)?;
        for t in &mut g.params {
            for v in t.data_mut() {
                *v = -*v;
            }
        }
        Ok(g)
    })
    .unwrap();
    assert!(!report.passed);
}

#[test]
fn zero_dense_with_sigmoid_gives_half() {
    let mut net = Network::<f64>::new(vec![3], &[LayerSpec::dense(4), LayerSpec::Sigmoid], 0).unwrap();
    for p in net.params_mut() {
        p.data_mut().iter_mut().for_each(|v| *v = 0.0);
    }
    let y = net.infer(&random_tensor(vec![2, 3], 1)).unwrap();
    assert!(y.data().iter().all(|&v| v == 0.5));
}

#[test]
fn batch_norm_on_identical_rows_returns_beta() {
    let mut net = Network::<f64>::new(vec![3], &[LayerSpec::batch_norm()], 0).unwrap();
    net.params_mut()[1].data_mut().copy_from_slice(&[0.25, -1.0, 2.0]);
    let x = Tensor::from_f64(vec![4, 3], &[0.3, -0.7, 1.1].repeat(4)).unwrap();
    let pass = net.forward(&x, Mode::Training).unwrap();
    assert_eq!(pass.output.data(), [0.25, -1.0, 2.0].repeat(4).as_slice());
}

#[test]
fn relu_definition() {
    let mut net = Network::<f64>::new(vec![3], &[LayerSpec::Relu], 0).unwrap();
    let x = Tensor::from_f64(vec![1, 3], &[-1.0, 0.0, 2.0]).unwrap();
    assert_eq!(net.forward(&x, Mode::Training).unwrap().output.data(), &[0.0, 0.0, 2.0]);
}

#[test]
fn scalar_chain_rule_and_sigmoid_slope() {
    let mut net = Network::<f64>::new(vec![1], &[LayerSpec::dense(1)], 0).unwrap();
    net.params_mut()[0].data_mut()[0] = 2.0;
    let x = Tensor::from_f64(vec![1, 1], &[3.0]).unwrap();
    let pass = net.forward(&x, Mode::Training).unwrap();
    let g = net.backward(&pass, &Tensor::filled(vec![1, 1], 1.0)).unwrap();
    assert_eq!(g.params[0].data(), &[3.0]);
    assert_eq!(g.input.data(), &[2.0]);

    let mut net = Network::<f64>::new(vec![1], &[LayerSpec::Sigmoid], 0).unwrap();
    let pass = net.forward(&Tensor::zeros(vec![1, 1]), Mode::Training).unwrap();
    let g = net.backward(&pass, &Tensor::filled(vec![1, 1], 1.0)).unwrap();
    assert_eq!(g.input.data(), &[0.25]);
}

#[test]
fn mis_chained_specs_do_not_construct() {
    // conv2d on a flat input
    assert!(Network::<f32>::new(vec![8], &[LayerSpec::conv(1, [2, 2], [1, 1], [0, 0])], 0).is_err());
    // kernel larger than the input
    let err = Network::<f32>::new(
        vec![4],
        &[
            LayerSpec::dense_shaped(vec![1, 2, 2]),
            LayerSpec::conv(1, [3, 3], [1, 1], [0, 0]),
        ],
        0,
    )
    .unwrap_err();
    assert!(matches!(err, NnError::Shape { layer: Some(1), .. }));
}

#[test]
fn forward_rejects_bad_inputs() {
    let mut net = Network::<f64>::new(vec![3], &[LayerSpec::dense(2)], 0).unwrap();
    assert!(matches!(
        net.forward(&Tensor::zeros(vec![2, 4]), Mode::Training),
        Err(NnError::Shape { .. })
    ));
    let bad = Tensor::from_f64(vec![1, 3], &[0.0, f64::NAN, 1.0]).unwrap();
    assert!(matches!(net.forward(&bad, Mode::Training), Err(NnError::Numeric(_))));
}

#[test]
fn stale_or_inference_pass_cannot_backprop() {
    let mut net = Network::<f64>::new(vec![3], &[LayerSpec::dense(2)], 0).unwrap();
    let x = random_tensor(vec![2, 3], 0);
    let pass = net.forward(&x, Mode::Training).unwrap();
    net.clip_weights(0.5);
    assert!(matches!(
        net.backward(&pass, &Tensor::zeros(vec![2, 2])),
        Err(NnError::State(_))
    ));
    let pass = net.forward(&x, Mode::Inference).unwrap();
    assert!(matches!(
        net.backward(&pass, &Tensor::zeros(vec![2, 2])),
        Err(NnError::State(_))
    ));
}

#[test]
fn clipping_bounds_parameters() {
    let mut net = Network::<f64>::new(vec![2], &[LayerSpec::dense(1)], 0).unwrap();
    net.params_mut()[0].data_mut().copy_from_slice(&[0.5, -0.02]);
    clip_weights(&mut net, 0.01);
    assert_eq!(net.params()[0].data(), &[0.01, -0.01]);
    assert!(net.max_abs_param() <= 0.01);

    let before = net.clone();
    clip_weights(&mut net, 0.01);
    assert_eq!(net, before);
}

#[test]
fn clipping_leaves_running_statistics() {
    let mut net = Network::<f64>::new(vec![2], &[LayerSpec::batch_norm()], 0).unwrap();
    net.clip_weights(0.01);
    let tensors = net.named_tensors();
    assert_eq!(tensors[0].1.data(), &[0.01, 0.01]);
    assert_eq!(tensors[3].0, "layer0.running_var");
    assert_eq!(tensors[3].1.data(), &[1.0, 1.0]);
}

#[test]
fn inference_is_bitwise_repeatable() {
    let net = Network::<f32>::new(
        vec![4],
        &[
            LayerSpec::dense(6),
            LayerSpec::batch_norm(),
            LayerSpec::Relu,
            LayerSpec::dense(2),
        ],
        7,
    )
    .unwrap();
    let x = random_tensor(vec![3, 4], 1).cast::<f32>();
    assert_eq!(net.infer(&x).unwrap(), net.infer(&x).unwrap());
}

#[test]
fn running_statistics_converge_geometrically() {
    let mut net = Network::<f64>::new(vec![2], &[LayerSpec::batch_norm()], 0).unwrap();
    let x = Tensor::from_f64(vec![4, 2], &[1.0, 2.0, 3.0, 0.0, 5.0, 2.0, 7.0, 0.0]).unwrap();
    let (batch_mean, batch_var) = ([4.0, 1.0], [5.0, 1.0]);
    let mut prev_gap = f64::INFINITY;
    for step in 1..=60 {
        net.forward(&x, Mode::Training).unwrap();
        let t = net.named_tensors();
        let (rm, rv) = (t[2].1.data().to_vec(), t[3].1.data().to_vec());
        let gap = (rm[0] - batch_mean[0]).abs();
        // mean starts at 0: gap_n = 4 * 0.9^n
        assert!((gap - 4.0 * 0.9f64.powi(step)).abs() < 1e-9);
        assert!(gap < prev_gap);
        prev_gap = gap;
        let gap_v = (rv[0] - batch_var[0]).abs();
        assert!((gap_v - 4.0 * 0.9f64.powi(step)).abs() < 1e-9);
    }
}

#[test]
fn initialization_is_glorot_bounded_and_seeded() {
    let a = Network::<f32>::new(vec![10], &[LayerSpec::dense(6)], 42).unwrap();
    let b = Network::<f32>::new(vec![10], &[LayerSpec::dense(6)], 42).unwrap();
    assert_eq!(a, b);
    let limit = (6.0f32 / 16.0).sqrt();
    assert!(a.params()[0].data().iter().all(|v| v.abs() <= limit));
    assert!(a.params()[1].data().iter().all(|&v| v == 0.0));
}

#[test]
fn layer_specs_parse_from_json() {
    let json = r#"[
        {"kind": "fully_connected", "out": [4, 1, 3]},
        {"kind": "deconv2d", "out_channels": 2, "kernel": [2, 2]},
        {"kind": "batch_norm"},
        {"kind": "relu"},
        {"kind": "conv2d", "out_channels": 1, "kernel": [1, 1], "stride": [1, 1], "padding": [0, 0]},
        {"kind": "sigmoid"}
    ]"#;
    let specs: Vec<LayerSpec> = serde_json::from_str(json).unwrap();
    let net = Network::<f32>::new(vec![5], &specs, 0).unwrap();
    assert_eq!(net.output_shape(), &[1, 2, 4]);
}
