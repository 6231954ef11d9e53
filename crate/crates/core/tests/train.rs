use std::f64::consts::PI;

use dool_core::basis::{sample_coefficients, synthesize_values, BasisSpec, CoeffVector, SamplingSpec};
use dool_core::models::{ModelName, ModelSpec};
use dool_core::operator::{Architecture, OperatorNet};
use dool_core::reference::ExactSolution;
use dool_core::train::*;
use dool_nn::{Activation, Matrix, Tape};

fn small_arch(width: usize) -> Architecture {
    Architecture {
        depth: 2,
        width,
        latent: 6,
        activation: Activation::Tanh,
    }
}

fn heat_setup(n: usize) -> (ModelSpec, BasisSpec, Vec<CoeffVector>) {
    let b = BasisSpec::fourier_1d(PI, 1, 32);
    let mut s = SamplingSpec::geometric(&b, 2.0, 1.0);
    s.positivity_floor = 0.2;
    (ModelSpec::new(ModelName::Heat), b.clone(), sample_coefficients(&b, &s, n, 5).unwrap())
}

fn opts(epochs: usize, lr: f64) -> TrainOptions {
    TrainOptions {
        epochs,
        lr,
        log_every: 10,
    }
}

#[test]
fn zero_learning_rate_leaves_parameters() {
    let (m, b, s) = heat_setup(4);
    let set = TrainingSet::new(&m, &b, &s).unwrap();
    let mut net = OperatorNet::new(&small_arch(8), &[b.branch_width()], 1, 1, 0).unwrap();
    let before = net.clone();
    let rep = train_dool(&mut net, &set, &opts(1, 0.0)).unwrap();
    assert_eq!(net, before);
    assert_eq!(rep.loss_history.len(), 1);
    assert_eq!(rep.floor, Some(set.analytic_floor()));
}

#[test]
fn same_seed_same_history() {
    let (m, b, s) = heat_setup(6);
    let set = TrainingSet::new(&m, &b, &s).unwrap();
    let run = || {
        let mut net = OperatorNet::new(&small_arch(8), &[b.branch_width()], 1, 1, 11).unwrap();
        train_dool(&mut net, &set, &opts(50, 1e-3)).unwrap().loss_history
    };
    assert_eq!(run(), run());
}

#[test]
fn frozen_graph_is_the_mean_rayleighian() {
    let (m, b, s) = heat_setup(5);
    let set = TrainingSet::new(&m, &b, &s).unwrap();
    let net = OperatorNet::new(&small_arch(8), &[b.branch_width()], 1, 1, 2).unwrap();
    let mut tape = Tape::new();
    let vars = net.register(&mut tape);
    let root = build_loss_graph(&mut tape, &net, &vars, &set);
    let mut want = 0.0;
    for c in &s {
        let u = synthesize_values(&b, c).unwrap();
        let j = net.eval_flux(&[&c.branch_input(&b)], &b.points()).unwrap();
        want += m.rayleighian_loss(&b, &u, &j).unwrap() / s.len() as f64;
    }
    assert!((tape.scalar(root) - want).abs() <= 1e-12 * want.abs().max(1.0));
}

#[test]
fn batch_of_copies_equals_single_sample() {
    let (m, b, s) = heat_setup(1);
    let net = OperatorNet::new(&small_arch(8), &[b.branch_width()], 1, 1, 2).unwrap();
    let loss = |set: &TrainingSet| {
        let mut tape = Tape::new();
        let vars = net.register(&mut tape);
        let r = build_loss_graph(&mut tape, &net, &vars, set);
        tape.scalar(r)
    };
    let one = TrainingSet::new(&m, &b, &s).unwrap();
    let many = TrainingSet::new(&m, &b, &vec![s[0].clone(); 7]).unwrap();
    assert!((loss(&one) - loss(&many)).abs() <= 1e-14 * loss(&one).abs());
}

#[test]
fn graph_gradient_matches_finite_differences() {
    let (m, b, s) = heat_setup(3);
    let set = TrainingSet::new(&m, &b, &s).unwrap();
    let net = OperatorNet::new(&small_arch(4), &[b.branch_width()], 1, 1, 7).unwrap();
    let (_, grads) = dool_nn::loss_gradient(&net.nets(), |tape, vars| {
        let ov = dool_core::operator::OperatorVars {
            branches: vars[..1].to_vec(),
            trunk: vars[1].clone(),
        };
        Ok(build_loss_graph(tape, &net, &ov, &set))
    })
    .unwrap();
    let eval = |n: &OperatorNet| {
        let mut tape = Tape::new();
        let vars = n.register(&mut tape);
        let r = build_loss_graph(&mut tape, n, &vars, &set);
        tape.scalar(r)
    };
    let h = 1e-5;
    for (k, g) in grads.iter().enumerate() {
        let flat = net.nets()[k].to_flat();
        for i in 0..flat.len() {
            let mut p = net.clone();
            let mut q = net.clone();
            let mut fp = flat.clone();
            fp[i] += h;
            p.nets_mut()[k].set_flat(&fp);
            let mut fm = flat.clone();
            fm[i] -= h;
            q.nets_mut()[k].set_flat(&fm);
            let fd = (eval(&p) - eval(&q)) / (2.0 * h);
            let err = (fd - g[i]).abs() / g[i].abs().max(fd.abs()).max(1e-6);
            assert!(err <= 1e-5, "net {k} param {i}: {fd} vs {}", g[i]);
        }
    }
}

#[test]
fn two_branch_rows_pair_states_and_parameters() {
    let b = BasisSpec::fourier_1d(1.0, 2, 32);
    let s = sample_coefficients(&b, &SamplingSpec::geometric(&b, 1.0, 0.6), 3, 1).unwrap();
    let m = ModelSpec::new(ModelName::CahnHilliard1d);
    let gammas = [0.01, 0.05, 0.1, 0.2];
    let set = TrainingSet::with_parameter(&m, &b, &s, &gammas).unwrap();
    assert_eq!(set.rows(), 12);
    assert_eq!(set.per_state, 4);
    // row b·N_l + l holds the single-parameter density at γ₁ = gammas[l]
    for (bi, c) in s.iter().enumerate() {
        for (l, &g) in gammas.iter().enumerate() {
            let mut mg = m.clone();
            mg.gamma1 = g;
            let single = TrainingSet::new(&mg, &b, std::slice::from_ref(c)).unwrap();
            let r = bi * 4 + l;
            for k in 0..32 {
                let want = single.a[0].get(0, k) / 12.0;
                assert!((set.a[0].get(r, k) - want).abs() <= 1e-12 * want.abs().max(1.0));
            }
        }
    }
}

#[test]
fn training_lowers_the_loss_toward_the_floor() {
    let (m, b, s) = heat_setup(8);
    let set = TrainingSet::new(&m, &b, &s).unwrap();
    let mut net = OperatorNet::new(&small_arch(16), &[b.branch_width()], 1, 1, 0).unwrap();
    let rep = train_dool(&mut net, &set, &opts(1500, 2e-3)).unwrap();
    let first = rep.loss_history[0].1;
    let floor = rep.floor.unwrap();
    assert!(rep.final_loss < first);
    assert!(rep.final_loss >= floor - 1e-12);
    assert!((rep.final_loss - floor) < 0.1 * (first - floor));
}

#[test]
fn supervised_zero_targets_zero_output_layer() {
    let mut net = OperatorNet::new(&small_arch(8), &[4], 2, 1, 0).unwrap();
    let last = net.trunk.layers.last_mut().unwrap();
    last.weights = Matrix::zeros(last.weights.rows(), last.weights.cols());
    let set = LabeledSet {
        branch_inputs: Matrix::from_rows(&[vec![0.1, 0.2, 0.3, 0.4], vec![1.0, 0.0, 0.0, 0.0]]),
        points: Matrix::from_vec(3, 2, vec![0.0, 0.0, 0.5, 0.1, -0.5, 0.2]),
        targets: Matrix::zeros(2, 3),
    };
    let rep = train_supervised(&mut net, &set, &opts(1, 1e-3)).unwrap();
    assert_eq!(rep.loss_history[0].1, 0.0);
}

fn heat_labels() -> LabeledSet {
    let b = BasisSpec::fourier_1d(PI, 1, 32);
    let ex = ExactSolution::Heat;
    let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
    let mut pts = Vec::new();
    let mut targets = Vec::new();
    for &t in &times {
        for x in b.axis(0) {
            pts.extend([x, t]);
            targets.push(ex.eval(x, t));
        }
    }
    let c = CoeffVector::new(vec![
        rustfft::num_complex::Complex64::new(2.0, 0.0),
        rustfft::num_complex::Complex64::new(0.0, -0.5),
    ]);
    LabeledSet {
        branch_inputs: Matrix::from_rows(&[c.branch_input(&b)]),
        points: Matrix::from_vec(targets.len(), 2, pts),
        targets: Matrix::from_vec(1, targets.len(), targets),
    }
}

#[test]
fn supervised_heat_loss_drops_tenfold() {
    let set = heat_labels();
    let mut net = OperatorNet::new(&small_arch(16), &[4], 2, 1, 0).unwrap();
    let rep = train_supervised(&mut net, &set, &opts(20_000, 5e-4)).unwrap();
    assert!(rep.final_loss * 10.0 <= rep.loss_history[0].1, "{:?}", (rep.loss_history[0], rep.final_loss));
}

#[test]
fn supervised_is_reproducible() {
    let set = heat_labels();
    let run = || {
        let mut net = OperatorNet::new(&small_arch(8), &[4], 2, 1, 4).unwrap();
        train_supervised(&mut net, &set, &opts(30, 1e-3)).unwrap().loss_history
    };
    assert_eq!(run(), run());
}

#[test]
fn options_are_validated() {
    assert!(opts(0, 1e-3).validate().is_err());
    assert!(opts(1, -1.0).validate().is_err());
    assert!(opts(1, f64::NAN).validate().is_err());
    let (m, b, _) = heat_setup(1);
    assert!(TrainingSet::new(&m, &b, &[]).is_err());
}
