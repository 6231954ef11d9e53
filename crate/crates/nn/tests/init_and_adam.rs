use dool_nn::{loss_gradient, Activation, AdamConfig, AdamState, LayerShape, Layer, Matrix, NetParams};

#[test]
fn xavier_bound_for_unit_layer() {
    let net = NetParams::init(&[LayerShape::new(1, 1, Activation::Identity)], 7).unwrap();
    let w = net.layers[0].weights.get(0, 0);
    assert!(w.abs() <= 3f64.sqrt());
    assert_eq!(net.layers[0].biases, vec![0.0]);
}

#[test]
fn same_seed_is_bitwise_identical() {
    let shapes = LayerShape::stack(4, 9, 3, 2, Activation::Sin);
    let a = NetParams::init(&shapes, 42).unwrap();
    let b = NetParams::init(&shapes, 42).unwrap();
    let bits = |n: &NetParams| n.to_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    let c = NetParams::init(&shapes, 43).unwrap();
    assert_ne!(bits(&a), bits(&c));
}

#[test]
fn xavier_variance() {
    // 21 layers of 70x70 give 102900 draws.
    let shapes = vec![LayerShape::new(70, 70, Activation::Tanh); 20]
        .into_iter()
        .chain([LayerShape::new(70, 70, Activation::Identity)])
        .collect::<Vec<_>>();
    let net = NetParams::init(&shapes, 3).unwrap();
    let limit = (6.0f64 / 140.0).sqrt();
    let w: Vec<f64> = net
        .layers
        .iter()
        .flat_map(|l| l.weights.as_slice().to_vec())
        .collect();
    assert!(w.len() >= 100_000);
    assert!(w.iter().all(|v| v.abs() <= limit));
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / w.len() as f64;
    let target = 1.0 / 70.0;
    assert!((var - target).abs() / target < 0.05, "variance {var}");
}

#[test]
fn forward_closed_forms() {
    let id = NetParams::from_layers(vec![Layer {
        shape: LayerShape::new(3, 3, Activation::Identity),
        weights: Matrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]),
        biases: vec![0.0; 3],
    }])
    .unwrap();
    assert_eq!(id.forward(&[1.5, -2.0, 0.25]).unwrap(), vec![1.5, -2.0, 0.25]);

    // a tanh layer followed by an identity 1x1 map
    let t = NetParams::from_layers(vec![
        Layer {
            shape: LayerShape::new(1, 1, Activation::Tanh),
            weights: Matrix::from_vec(1, 1, vec![0.0]),
            biases: vec![0.5],
        },
        Layer {
            shape: LayerShape::new(1, 1, Activation::Identity),
            weights: Matrix::from_vec(1, 1, vec![1.0]),
            biases: vec![0.0],
        },
    ])
    .unwrap();
    assert_eq!(t.forward(&[3.0]).unwrap(), vec![0.5f64.tanh()]);
    assert!(t.forward(&[1.0, 2.0]).is_err());
}

#[test]
fn forward_matches_hand_evaluation() {
    let net = NetParams::init(&LayerShape::stack(3, 4, 1, 2, Activation::Tanh), 17).unwrap();
    let x = [0.2, -0.7, 1.3];
    let (w1, b1) = (&net.layers[0].weights, &net.layers[0].biases);
    let (w2, b2) = (&net.layers[1].weights, &net.layers[1].biases);
    let mut h = [0.0; 4];
    for i in 0..4 {
        let mut z = b1[i];
        for k in 0..3 {
            z += w1.get(i, k) * x[k];
        }
        h[i] = z.tanh();
    }
    let y = net.forward(&x).unwrap();
    for o in 0..2 {
        let mut z = b2[o];
        for i in 0..4 {
            z += w2.get(o, i) * h[i];
        }
        assert!((y[o] - z).abs() < 1e-14);
    }
}

#[test]
fn adam_on_quadratic() {
    let mut net = NetParams::init(&[LayerShape::new(1, 1, Activation::Identity)], 0).unwrap();
    net.set_flat(&[1.0, 0.0]);
    let cfg = AdamConfig {
        lr: 0.007,
        ..AdamConfig::default()
    };
    let mut st = AdamState::new(cfg, &[&net]);
    let mut path = vec![1.0];
    for _ in 0..500 {
        let snapshot = net.clone();
        let (_, g) = loss_gradient(&[&snapshot], |t, v| {
            let s = t.square(v[0].weights[0]);
            Ok(t.sum(s))
        })
        .unwrap();
        st.step(&mut [&mut net], &g).unwrap();
        path.push(net.to_flat()[0]);
    }
    assert_eq!(st.step_count, 500);
    for w in path.windows(2) {
        assert!(w[1].abs() < w[0].abs());
    }
    let last = *path.last().unwrap();
    assert!(last.abs() <= 1e-3);
    // independent scalar replay of the recurrence
    assert!((last - 6.989003833754817e-05).abs() < 1e-13);
}
