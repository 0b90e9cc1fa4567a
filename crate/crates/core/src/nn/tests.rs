use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn random_input(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn randomize_bn(net: &mut NetworkSpec, rng: &mut ChaCha8Rng) {
    for l in net.layers_mut() {
        if let LayerSpec::BatchNorm(b) = l {
            for g in &mut b.gamma {
                *g = rng.gen_range(0.5..1.5);
            }
            for v in &mut b.beta {
                *v = rng.gen_range(-0.5..0.5);
            }
        }
        if let LayerSpec::Conv2d(c) = l {
            for v in &mut c.bias {
                *v = rng.gen_range(-0.2..0.2);
            }
        }
        if let LayerSpec::Dense(d) = l {
            for v in &mut d.bias {
                *v = rng.gen_range(-0.2..0.2);
            }
        }
    }
}

fn check(layers: Vec<LayerSpec>, input: &[usize], batch: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = NetworkSpec::new(input.to_vec(), layers, 2).unwrap().initialized(seed);
    randomize_bn(&mut net, &mut rng);
    let xs: Vec<Tensor> = (0..batch).map(|_| random_input(input, &mut rng)).collect();
    let report = gradient_check(&net, &xs, 1e-5, 40, seed).unwrap();
    assert!(report.checked > 0);
    assert!(report.max_error() < 1e-4, "{report:?}");
}

#[test]
fn gradcheck_dense() {
    check(vec![LayerSpec::Dense(Dense::new(6, 2))], &[6], 3, 1);
}

#[test]
fn gradcheck_conv_valid_and_same() {
    check(
        vec![
            LayerSpec::Conv2d(Conv2d::valid(2, 3, 3)),
            LayerSpec::Conv2d(Conv2d::same(3, 2, 3)),
            LayerSpec::Flatten,
            LayerSpec::Dense(Dense::new(2 * 4 * 5, 2)),
        ],
        &[2, 6, 7],
        2,
        2,
    );
}

#[test]
fn gradcheck_relu_and_pools() {
    check(
        vec![
            LayerSpec::Conv2d(Conv2d::valid(1, 3, 3)),
            LayerSpec::Relu,
            LayerSpec::AvgPool(Pool::square(2)),
            LayerSpec::Conv2d(Conv2d::same(3, 3, 3)),
            LayerSpec::MaxPool(Pool::square(2)),
            LayerSpec::Flatten,
            LayerSpec::Dense(Dense::new(3 * 2 * 2, 2)),
        ],
        &[1, 10, 10],
        2,
        3,
    );
}

#[test]
fn gradcheck_batchnorm_train_mode() {
    check(
        vec![
            LayerSpec::Conv2d(Conv2d::valid(1, 3, 3)),
            LayerSpec::BatchNorm(BatchNorm::new(3)),
            LayerSpec::Relu,
            LayerSpec::Flatten,
            LayerSpec::Dense(Dense::new(3 * 4 * 4, 4)),
            LayerSpec::BatchNorm(BatchNorm::new(4)),
            LayerSpec::Dense(Dense::new(4, 2)),
        ],
        &[1, 6, 6],
        4,
        4,
    );
}

#[test]
fn identity_one_by_one_conv() {
    let mut conv = Conv2d::valid(2, 2, 1);
    conv.weights = vec![1.0, 0.0, 0.0, 1.0];
    let net = NetworkSpec::new(
        vec![2, 3, 3],
        vec![LayerSpec::Conv2d(conv), LayerSpec::Flatten, LayerSpec::Dense(Dense::new(18, 2))],
        2,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = random_input(&[2, 3, 3], &mut rng);
    let (_, trace) = net.forward(&x).unwrap();
    assert_eq!(trace.step(0).output.data(), x.data());
}

#[test]
fn relu_zeroes_negatives_only() {
    let net = NetworkSpec::new(vec![4], vec![LayerSpec::Relu, LayerSpec::Dense(Dense::new(4, 2))], 2).unwrap();
    let x = Tensor::new(vec![4], vec![-2.0, -0.0, 0.5, 3.0]).unwrap();
    let (_, trace) = net.forward(&x).unwrap();
    assert_eq!(trace.step(0).output.data(), &[0.0, 0.0, 0.5, 3.0]);
}

#[test]
fn forward_is_deterministic_and_matches_predict() {
    let net = build(Architecture::LeNet5, &[1, 161, 49], 9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = random_input(&[1, 161, 49], &mut rng);
    let (a, trace) = net.forward(&x).unwrap();
    let (b, _) = net.forward(&x).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.shape(), &[2]);
    assert_eq!(net.predict(&x).unwrap(), a);
    assert_eq!(trace.logits(), &a);
    assert_eq!(trace.input(), &x);
}

#[test]
fn wrong_input_shape_names_input() {
    let net = build(Architecture::LeNet5, &[1, 161, 49], 0).unwrap();
    let err = net.forward(&Tensor::zeros(vec![1, 160, 49])).unwrap_err();
    assert!(matches!(err, crate::Error::Shape { .. }));
}

#[test]
fn mismatched_layers_are_rejected() {
    let err = NetworkSpec::new(vec![1, 8, 8], vec![LayerSpec::Conv2d(Conv2d::valid(2, 2, 3))], 2).unwrap_err();
    match err {
        crate::Error::Shape { layer, .. } => assert!(layer.starts_with('0')),
        e => panic!("{e}"),
    }
}

#[test]
fn batch_norm_running_stats_follow_momentum() {
    let layers = vec![
        LayerSpec::Flatten,
        LayerSpec::Dense(Dense::new(2, 2)),
        LayerSpec::BatchNorm(BatchNorm::new(2)),
    ];
    let mut net = NetworkSpec::new(vec![1, 1, 2], layers, 2).unwrap();
    if let LayerSpec::Dense(d) = &mut net.layers_mut()[1] {
        d.weights = vec![1.0, 0.0, 0.0, 1.0];
    }
    let xs = vec![
        Tensor::new(vec![1, 1, 2], vec![1.0, 2.0]).unwrap(),
        Tensor::new(vec![1, 1, 2], vec![3.0, 2.0]).unwrap(),
    ];
    let fwd = forward_train(&net, &xs).unwrap();
    update_running_stats(&mut net, &fwd);
    let LayerSpec::BatchNorm(b) = &net.layers()[2] else { unreachable!() };
    // feature 0: mean 2, unbiased var 2; feature 1: mean 2, var 0
    assert!((b.running_mean[0] - 0.2).abs() < 1e-6);
    assert!((b.running_var[0] - (0.9 + 0.2)).abs() < 1e-6);
    assert!((b.running_var[1] - 0.9).abs() < 1e-6);
}
