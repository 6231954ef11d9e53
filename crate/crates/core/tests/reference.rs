use std::f64::consts::PI;

use dool_core::basis::{quadrature, BasisSpec};
use dool_core::models::{ModelName, ModelSpec};
use dool_core::reference::*;
use dool_core::stepper::relative_l2;

fn ac() -> ModelSpec {
    let mut m = ModelSpec::new(ModelName::AllenCahn);
    m.gamma2 = 1.0;
    m
}

#[test]
fn closed_forms_at_the_start() {
    let b = BasisSpec::fourier_1d(PI, 1, 16);
    let want: Vec<f64> = b.axis(0).iter().map(|x| x.sin() + 2.0).collect();
    assert_eq!(ExactSolution::Heat.field(&b, 0.0), want);
    assert_eq!(ExactSolution::variance(2.0, 0.5, 0.0), 1.0);
    let fp = ExactSolution::FokkerPlanck { beta: 2.0, potential: 0.5 };
    assert!((fp.eval(0.0, 0.0) - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-16);
    let w = ExactSolution::DampedWave { horizon: 1.0 };
    assert_eq!(w.eval(0.3, 0.0), 0.3f64.cos());
    assert_eq!(w.eval(0.3, 1.0), 0.0);
}

#[test]
fn fokker_planck_variance_limit() {
    assert!((ExactSolution::variance(2.0, 0.5, 50.0) - 0.5).abs() < 1e-15);
    let v: Vec<f64> = (0..20).map(|k| ExactSolution::variance(2.0, 0.5, k as f64 * 0.25)).collect();
    assert!(v.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn time_derivatives_match_finite_differences() {
    let h = 1e-6;
    for ex in [
        ExactSolution::Heat,
        ExactSolution::HeatSource,
        ExactSolution::FokkerPlanck { beta: 2.0, potential: 0.5 },
        ExactSolution::DampedWave { horizon: 1.0 },
    ] {
        for (x, t) in [(0.3, 0.2), (-1.1, 0.7)] {
            let fd = (ex.eval(x, t + h) - ex.eval(x, t - h)) / (2.0 * h);
            assert!((fd - ex.time_derivative(x, t)).abs() < 1e-8, "{ex:?}");
        }
    }
}

#[test]
fn allen_cahn_well_is_a_fixed_point() {
    let b = BasisSpec::fourier_1d(1.0, 3, 64);
    let traj = reference_solve(&ac(), &b, &vec![1.0; 64], 1e-3, 200, 50).unwrap();
    assert_eq!(traj.times.len(), 5);
    for s in &traj.states {
        assert!(s.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }
}

#[test]
fn cahn_hilliard_reference_keeps_mass() {
    let b = BasisSpec::fourier_1d(1.0, 2, 128);
    let m = ModelSpec::new(ModelName::CahnHilliard1d);
    let u0: Vec<f64> = b.axis(0).iter().map(|x| 1.0 + 0.5 * (PI * x).sin() + 0.2 * (2.0 * PI * x).cos()).collect();
    let traj = reference_solve(&m, &b, &u0, 1e-4, 2000, 100).unwrap();
    let m0 = quadrature(&b, &u0);
    for s in &traj.states {
        assert!((quadrature(&b, s) - m0).abs() <= 1e-10);
    }
}

#[test]
fn allen_cahn_self_convergence_is_first_order() {
    let b = BasisSpec::fourier_1d(1.0, 9, 128);
    let u0: Vec<f64> = b.axis(0).iter().map(|x| 0.5 * (PI * x).cos()).collect();
    let run = |dt: f64| {
        let n = (0.5 / dt).round() as usize;
        reference_solve(&ac(), &b, &u0, dt, n, n).unwrap().states.pop().unwrap()
    };
    let (a, c, d) = (run(4e-3), run(2e-3), run(1e-3));
    let diff = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let ratio = diff(&a, &c) / diff(&c, &d);
    assert!((1.7..=2.3).contains(&ratio), "{ratio}");
}

#[test]
fn reference_refuses_other_models() {
    let b = BasisSpec::fourier_1d(PI, 1, 32);
    let r = reference_solve(&ModelSpec::new(ModelName::Heat), &b, &vec![1.0; 32], 1e-3, 1, 1);
    assert!(r.is_err());
}

#[test]
fn heat_labels_match_the_closed_form() {
    let b = BasisSpec::fourier_1d(PI, 1, 3);
    let times = [0.0, 0.5];
    let fields = vec![ExactSolution::Heat.fields(&b, &times)];
    let labels = generate_labels(&b, &times, &fields).unwrap();
    assert_eq!(labels.len(), 6);
    for l in &labels {
        assert_eq!(l.u, ExactSolution::Heat.eval(l.point[0], l.t));
    }
    let first: Vec<f64> = labels.iter().filter(|l| l.t == 0.0).map(|l| l.u).collect();
    assert_eq!(first, fields[0][0]);
    assert!(generate_labels(&b, &[0.0], &fields).is_err());
}

#[test]
fn labels_csv_has_a_header() {
    let b = BasisSpec::fourier_1d(PI, 1, 3);
    let labels = generate_labels(&b, &[0.0], &[ExactSolution::Heat.fields(&b, &[0.0])]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("labels.csv");
    write_labels_csv(&p, &labels).unwrap();
    let text = std::fs::read_to_string(p).unwrap();
    assert!(text.starts_with("sample_id,x,t,u\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn cahn_hilliard_labels_agree_across_solvers() {
    let m = ModelSpec::new(ModelName::CahnHilliard1d);
    let fine = BasisSpec::fourier_1d(1.0, 2, 256);
    let coarse = fine.with_grid(64);
    let f = |b: &BasisSpec| -> Vec<f64> { b.axis(0).iter().map(|x| 1.0 + 0.4 * (PI * x).sin() - 0.1 * (2.0 * PI * x).cos()).collect() };
    let times = [0.0, 0.1, 0.2];
    let a = reference_solve(&m, &fine, &f(&fine), 1e-4, 2000, 1).unwrap().resample(&coarse, &times).unwrap();
    let c = reference_solve(&m, &coarse, &f(&coarse), 1e-3, 200, 1).unwrap();
    let c = c.resample(&coarse, &times).unwrap();
    let la = generate_labels(&coarse, &times, &[a]).unwrap();
    let lc = generate_labels(&coarse, &times, &[c]).unwrap();
    let ua: Vec<Vec<f64>> = vec![la.iter().map(|l| l.u).collect()];
    let uc: Vec<Vec<f64>> = vec![lc.iter().map(|l| l.u).collect()];
    assert!(relative_l2(&uc, &ua).unwrap() <= 1e-3);
}
