use dool_core::basis::BasisSpec;
use dool_core::inverse::*;
use dool_core::models::{ModelName, ModelSpec};
use dool_core::operator::{Architecture, OperatorNet};
use dool_core::stepper::{evolve, NetFlux, StepOptions};
use dool_core::Error;
use dool_nn::Activation;

#[test]
fn golden_finds_a_parabola_minimum() {
    let r = golden_section_search(|x| (x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-6).unwrap();
    assert!((r.argmin - 0.3).abs() <= 1e-6);
    assert_eq!(r.evaluations, golden_iterations(0.0, 1.0, 1e-6) + 2);
    assert!(r.bracket[1] - r.bracket[0] <= 1e-6);
    assert_eq!(r.samples.len(), r.evaluations);
}

#[test]
fn golden_on_a_constant_still_shrinks() {
    let r = golden_section_search(|_| 4.0, -2.0, 3.0, 1e-3).unwrap();
    assert!((-2.0..=3.0).contains(&r.argmin));
    assert!(r.bracket[1] - r.bracket[0] <= 1e-3);
    assert_eq!(r.min_value, 4.0);
}

#[test]
fn golden_budget_is_exact() {
    for (a, b, tol) in [(0.0, 0.1, 1e-4), (1.0, 5.0, 0.5), (0.0, 1.0, 0.9)] {
        let mut calls = 0;
        let r = golden_section_search(
            |x| {
                calls += 1;
                x.sin()
            },
            a,
            b,
            tol,
        )
        .unwrap();
        assert_eq!(calls, golden_iterations(a, b, tol) + 2);
        assert_eq!(r.evaluations, calls);
    }
    assert_eq!(golden_iterations(0.0, 0.1, 1e-4), 15);
}

#[test]
fn golden_treats_nan_as_penalty() {
    let r = golden_section_search(|x| if x > 0.5 { f64::NAN } else { (x - 0.2).abs() }, 0.0, 1.0, 1e-4).unwrap();
    assert!((r.argmin - 0.2).abs() < 1e-4);
    assert!(r.samples.iter().any(|s| s.1 == PENALTY));
}

#[test]
fn golden_rejects_bad_intervals() {
    assert!(golden_section_search(|x| x, 0.1, 0.0, 1e-4).is_err());
    assert!(golden_section_search(|x| x, 0.0, 0.1, 0.0).is_err());
    assert!(golden_section_search(|x| x, 0.0, f64::INFINITY, 1e-4).is_err());
}

#[test]
fn observations_csv_round_trip() {
    let obs = Observations {
        x: vec![-0.5, 0.0, 0.5, 1.0],
        times: vec![0.0, 0.01, 0.02],
        values: vec![vec![1.0, 2.0, 3.0, 4.0], vec![1.5, 2.5, 3.5, 4.5], vec![0.1, 0.2, 0.3, 0.4]],
    };
    assert_eq!(parse_observations_csv(&obs.to_csv(), "obs.csv").unwrap(), obs);
}

fn parse_line(text: &str) -> usize {
    match parse_observations_csv(text, "obs.csv") {
        Err(Error::Parse { line, source_name, .. }) => {
            assert_eq!(source_name, "obs.csv");
            line
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn malformed_csv_reports_the_line() {
    assert_eq!(parse_line("t,x,v\n0,0,1\n"), 1);
    assert_eq!(parse_line("t,x,u\n0,0,1\n0,0.5,abc\n"), 3);
    assert_eq!(parse_line("t,x,u\n0,0,1\n0,0.5\n"), 3);
    assert_eq!(parse_line("t,x,u\n0.1,0,1\n0,0,1\n"), 3);
    assert_eq!(parse_line("t,x,u\n0,0,inf\n"), 2);
    assert_eq!(parse_line("t,x,u\n"), 2);
}

#[test]
fn missing_initial_slice_is_rejected() {
    let r = parse_observations_csv("t,x,u\n0.1,0,1\n0.2,0,1\n", "obs.csv");
    assert!(matches!(r, Err(Error::Invalid { .. })));
    let r = parse_observations_csv("t,x,u\n0,0,1\n0,1,1\n0.1,0,1\n", "obs.csv");
    assert!(r.is_err());
}

struct Setup {
    net: OperatorNet,
    model: ModelSpec,
    basis: BasisSpec,
}

fn setup() -> Setup {
    let basis = BasisSpec::fourier_1d(1.0, 3, 32);
    let arch = Architecture {
        depth: 2,
        width: 12,
        latent: 8,
        activation: Activation::Sin,
    };
    Setup {
        net: OperatorNet::new(&arch, &[basis.branch_width(), 1], 1, 1, 3).unwrap(),
        model: ModelSpec::new(ModelName::CahnHilliard1d),
        basis,
    }
}

/// Observations produced by the network itself at `gamma`.
fn self_observations(s: &Setup, gamma: f64) -> Observations {
    let u0: Vec<f64> = s.basis.axis(0).iter().map(|x| 1.0 + 0.3 * (std::f64::consts::PI * x).sin()).collect();
    let mut f = NetFlux::new(&s.net, &s.basis, Some(gamma)).unwrap();
    let opts = StepOptions {
        every: 10,
        fluxes: false,
        project: Some(s.basis.truncation),
    };
    let traj = evolve(&s.model, &s.basis, &u0, &mut f, 1e-3, 200, opts).unwrap();
    Observations {
        x: s.basis.axis(0),
        times: traj.times,
        values: traj.states,
    }
}

fn problem(obs: Observations) -> InversionProblem {
    InversionProblem {
        observations: obs,
        interval: [0.0, 0.1],
        tol: 1e-4,
        dt: 1e-3,
    }
}

#[test]
fn misfit_vanishes_on_self_generated_data() {
    let s = setup();
    let p = problem(self_observations(&s, 0.05));
    let at = misfit(0.05, &p, &s.net, &s.model, &s.basis).unwrap();
    assert_eq!(at, 0.0);
    assert!(at <= misfit(0.03, &p, &s.net, &s.model, &s.basis).unwrap());
    assert!(at <= misfit(0.07, &p, &s.net, &s.model, &s.basis).unwrap());
    for k in 0..20 {
        let g = 0.1 * k as f64 / 19.0;
        assert!(misfit(g, &p, &s.net, &s.model, &s.basis).unwrap().is_finite());
    }
}

#[test]
fn inversion_recovers_the_generating_parameter() {
    let s = setup();
    let p = problem(self_observations(&s, 0.04));
    let r = invert(&p, &s.net, &s.model, &s.basis).unwrap();
    assert!((r.recovered - 0.04).abs() <= 1e-4, "{}", r.recovered);
    assert_eq!(r.evaluations, 17);
    assert_eq!(r.misfit_curve.len(), 17);
}

#[test]
fn misfit_checks_grid_and_times() {
    let s = setup();
    let obs = self_observations(&s, 0.05);
    let other = s.basis.with_grid(16);
    assert!(misfit(0.05, &problem(obs.clone()), &s.net, &s.model, &other).is_err());
    let mut p = problem(obs);
    p.dt = 3e-3;
    assert!(misfit(0.05, &p, &s.net, &s.model, &s.basis).is_err());
}
