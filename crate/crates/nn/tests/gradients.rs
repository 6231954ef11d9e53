use dool_nn::{loss_gradient, Activation, LayerShape, Matrix, NetParams, NetVars, Result, Tape, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Central differences over every parameter, evaluating the same builder on
/// frozen copies of the networks.
fn finite_difference<F>(nets: &[NetParams], build: &F, h: f64) -> Vec<Vec<f64>>
where
    F: Fn(&mut Tape, &[NetVars]) -> Result<Var>,
{
    let eval = |nets: &[NetParams]| -> f64 {
        let mut tape = Tape::new();
        let vars: Vec<NetVars> = nets.iter().map(|n| n.register_frozen(&mut tape)).collect();
        let root = build(&mut tape, &vars).unwrap();
        tape.scalar(root)
    };
    let mut out = Vec::new();
    for i in 0..nets.len() {
        let base = nets[i].to_flat();
        let mut g = vec![0.0; base.len()];
        for k in 0..base.len() {
            let mut work = nets.to_vec();
            let mut p = base.clone();
            p[k] = base[k] + h;
            work[i].set_flat(&p);
            let fp = eval(&work);
            p[k] = base[k] - h;
            work[i].set_flat(&p);
            let fm = eval(&work);
            g[k] = (fp - fm) / (2.0 * h);
        }
        out.push(g);
    }
    out
}

fn rel_err(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.iter().zip(b) {
        for (p, q) in x.iter().zip(y) {
            num += (p - q).powi(2);
            den += q * q;
        }
    }
    num.sqrt() / den.sqrt().max(1e-12)
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> Matrix {
    Matrix::from_vec(r, c, (0..r * c).map(|_| rng.gen_range(-scale..scale)).collect())
}

fn check<F>(nets: &[NetParams], build: F)
where
    F: Fn(&mut Tape, &[NetVars]) -> Result<Var>,
{
    let refs: Vec<&NetParams> = nets.iter().collect();
    let (_, g) = loss_gradient(&refs, |t, v| build(t, v)).unwrap();
    let fd = finite_difference(nets, &build, 1e-5);
    let e = rel_err(&g, &fd);
    assert!(e <= 1e-5, "relative gradient error {e:e}");
}

#[test]
fn single_weight_square() {
    let mut net = NetParams::init(&[LayerShape::new(1, 1, Activation::Identity)], 3).unwrap();
    net.set_flat(&[3.0, 0.0]);
    let (loss, g) = loss_gradient(&[&net], |t, v| {
        let s = t.square(v[0].weights[0]);
        Ok(t.sum(s))
    })
    .unwrap();
    assert_eq!(loss, 9.0);
    assert_eq!(g[0][0], 6.0);
}

#[test]
fn linear_net_sum_gradient_is_input() {
    let net = NetParams::init(&[LayerShape::new(3, 2, Activation::Identity)], 1).unwrap();
    let x = [0.5, -1.25, 2.0];
    let net2 = net.clone();
    let (_, g) = loss_gradient(&[&net], |t, v| {
        let xi = t.constant(Matrix::from_vec(1, 3, x.to_vec()));
        let y = net2.forward_tape(t, &v[0], xi);
        Ok(t.sum(y))
    })
    .unwrap();
    // weights row-major 2x3, then 2 biases
    assert_eq!(&g[0][0..3], &x);
    assert_eq!(&g[0][3..6], &x);
    assert_eq!(&g[0][6..8], &[1.0, 1.0]);
}

#[test]
fn random_nets_against_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..12 {
        let act = if case % 2 == 0 { Activation::Tanh } else { Activation::Sin };
        let depth = 1 + case % 3;
        let shapes = LayerShape::stack(3, 5, depth, 4, act);
        let net = NetParams::init(&shapes, case as u64).unwrap();
        let x = random_matrix(&mut rng, 6, 3, 1.0);
        let a = random_matrix(&mut rng, 6, 4, 1.0);
        let h = random_matrix(&mut rng, 6, 4, 1.0).map(f64::abs);
        let n = net.clone();
        check(&[net], move |t, v| {
            let xi = t.constant(x.clone());
            let y = n.forward_tape(t, &v[0], xi);
            Ok(t.weighted_quadratic(y, a.clone(), h.clone()))
        });
    }
}

#[test]
fn branch_trunk_contraction() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let b1 = NetParams::init(&LayerShape::stack(4, 6, 2, 5, Activation::Tanh), 1).unwrap();
    let b2 = NetParams::init(&LayerShape::stack(1, 6, 2, 5, Activation::Sin), 2).unwrap();
    let tr = NetParams::init(&LayerShape::stack(1, 6, 2, 10, Activation::Sin), 3).unwrap();
    let u = random_matrix(&mut rng, 3, 4, 1.0);
    let g = random_matrix(&mut rng, 2, 1, 0.1);
    let x = random_matrix(&mut rng, 7, 1, 1.0);
    let a = random_matrix(&mut rng, 6, 7, 1.0);
    let h = random_matrix(&mut rng, 6, 7, 1.0).map(f64::abs);
    let nets = vec![b1.clone(), b2.clone(), tr.clone()];
    check(&nets, move |t, v| {
        let ui = t.constant(u.clone());
        let gi = t.constant(g.clone());
        let xi = t.constant(x.clone());
        let bu = b1.forward_tape(t, &v[0], ui);
        let bg = b2.forward_tape(t, &v[1], gi);
        let tt = tr.forward_tape(t, &v[2], xi);
        let pp = t.pair_product(bu, bg);
        let t0 = t.columns(tt, 0, 5);
        let t1 = t.columns(tt, 5, 5);
        let j0 = t.matmul_nt(pp, t0);
        let j1 = t.matmul_nt(pp, t1);
        let l0 = t.weighted_quadratic(j0, a.clone(), h.clone());
        let l1 = t.weighted_quadratic(j1, h.clone(), a.clone());
        let s = t.add(l0, l1);
        Ok(t.scale(s, 0.5))
    });
}

#[test]
fn tangent_propagation() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for (case, act) in [Activation::Tanh, Activation::Sin].into_iter().enumerate() {
        let net = NetParams::init(&LayerShape::stack(2, 6, 3, 1, act), 20 + case as u64).unwrap();
        let x = random_matrix(&mut rng, 8, 2, 1.0);
        let w = random_matrix(&mut rng, 8, 1, 1.0);
        let n = net.clone();
        check(&[net], move |t, v| {
            let xi = t.constant(x.clone());
            let dt = Matrix::from_vec(8, 2, (0..16).map(|k| (k % 2) as f64).collect());
            let dx = Matrix::from_vec(8, 2, (0..16).map(|k| ((k + 1) % 2) as f64).collect());
            let (_, d) = n.forward_tape_with_tangents(t, &v[0], xi, &[dt, dx]);
            let zero = Matrix::zeros(8, 1);
            let a = t.weighted_quadratic(d[0], zero.clone(), w.clone());
            let b = t.weighted_quadratic(d[1], zero, w.clone());
            let s = t.sub(a, b);
            Ok(t.add_scalar(s, 1.0))
        });
    }
}

#[test]
fn tangents_match_finite_differences_of_the_input() {
    let net = NetParams::init(&LayerShape::stack(2, 7, 3, 1, Activation::Tanh), 4).unwrap();
    let pts = [[0.3, -0.2], [-1.1, 0.8], [0.0, 0.5]];
    let x = Matrix::from_rows(&pts.iter().map(|p| p.to_vec()).collect::<Vec<_>>());
    let e0 = Matrix::from_rows(&vec![vec![1.0, 0.0]; 3]);
    let e1 = Matrix::from_rows(&vec![vec![0.0, 1.0]; 3]);
    let mut tape = Tape::new();
    let vars = net.register_frozen(&mut tape);
    let xi = tape.constant(x);
    let (_, d) = net.forward_tape_with_tangents(&mut tape, &vars, xi, &[e0, e1]);
    let h = 1e-6;
    for (r, p) in pts.iter().enumerate() {
        for (axis, &dv) in d.iter().enumerate() {
            let mut a = *p;
            let mut b = *p;
            a[axis] += h;
            b[axis] -= h;
            let fd = (net.forward(&a).unwrap()[0] - net.forward(&b).unwrap()[0]) / (2.0 * h);
            let got = tape.value(dv).get(r, 0);
            assert!((got - fd).abs() <= 1e-6 * fd.abs().max(1.0), "{got} vs {fd}");
        }
    }
}

#[test]
fn elementwise_ops() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let net = NetParams::init(&LayerShape::stack(2, 4, 1, 3, Activation::Tanh), 7).unwrap();
    let x = random_matrix(&mut rng, 5, 2, 1.0);
    let c = random_matrix(&mut rng, 5, 3, 1.0);
    let w = random_matrix(&mut rng, 5, 3, 1.0);
    let n = net.clone();
    check(&[net], move |t, v| {
        let xi = t.constant(x.clone());
        let y = n.forward_tape(t, &v[0], xi);
        let ci = t.constant(c.clone());
        let p = t.mul(y, ci);
        let q = t.cos(p);
        let r = t.add(q, y);
        let s = t.sub(r, ci);
        let s = t.square(s);
        let s = t.scale(s, 0.3);
        Ok(t.weighted_sum(s, w.clone()))
    });
}
