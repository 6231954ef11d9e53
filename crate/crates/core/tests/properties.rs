use std::f64::consts::PI;

use dool_core::basis::*;
use dool_core::config::{ExperimentConfig, InitialCondition};
use dool_core::inverse::{golden_section_search, parse_observations_csv};
use dool_core::models::{ModelName, ModelSpec};
use dool_core::stepper::{evolve, relative_l2, AnalyticFlux, StepOptions};
use proptest::prelude::*;
use rustfft::num_complex::Complex64;

fn coeffs(basis: &BasisSpec, raw: &[(f64, f64)]) -> CoeffVector {
    let modes = basis.modes();
    CoeffVector::new(
        modes
            .iter()
            .zip(raw)
            .map(|(m, &(re, im))| Complex64::new(re, if *m == [0, 0] { 0.0 } else { im }))
            .collect(),
    )
}

fn pairs(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fourier_1d_round_trip(k in 1usize..8, raw in pairs(8)) {
        let b = BasisSpec::fourier_1d(1.0, k, 32);
        let c = coeffs(&b, &raw);
        let back = project(&b, &synthesize_values(&b, &c).unwrap());
        for (p, q) in back.values.iter().zip(&c.values) {
            prop_assert!((p - q).norm() <= 1e-10);
        }
    }

    #[test]
    fn fourier_2d_round_trip(raw in pairs(13)) {
        let b = BasisSpec::fourier_2d(PI, 2, 16);
        let c = coeffs(&b, &raw);
        let back = project(&b, &synthesize_values(&b, &c).unwrap());
        for (p, q) in back.values.iter().zip(&c.values) {
            prop_assert!((p - q).norm() <= 1e-10);
        }
    }

    #[test]
    fn band_limit_is_idempotent(vals in prop::collection::vec(-3.0..3.0f64, 32), band in 0usize..10) {
        let b = BasisSpec::fourier_1d(1.0, 9, 32);
        let once = band_limit(&b, &vals, band);
        let twice = band_limit(&b, &once, band);
        for (p, q) in once.iter().zip(&twice) {
            prop_assert!((p - q).abs() <= 1e-12);
        }
        let m0 = quadrature(&b, &vals);
        prop_assert!((quadrature(&b, &once) - m0).abs() <= 1e-12 * m0.abs().max(1.0));
    }

    #[test]
    fn conservative_steps_keep_mass(raw in pairs(3)) {
        let b = BasisSpec::fourier_1d(1.0, 2, 64);
        let mut c = coeffs(&b, &raw);
        c.values[0] = Complex64::new(1.0, 0.0);
        for v in &mut c.values[1..] {
            *v *= 0.1;
        }
        let u0 = synthesize_values(&b, &c).unwrap();
        let m = ModelSpec::new(ModelName::CahnHilliard1d);
        let mut f = AnalyticFlux { model: &m, basis: &b, band: Some(2) };
        let opts = StepOptions { project: Some(2), ..StepOptions::default() };
        let traj = evolve(&m, &b, &u0, &mut f, 1e-3, 20, opts).unwrap();
        let m0 = traj.masses[0];
        for v in &traj.masses {
            prop_assert!((v - m0).abs() <= 1e-12 * m0.abs().max(1.0));
        }
    }

    #[test]
    fn relative_error_is_scale_invariant(
        a in prop::collection::vec(-5.0..5.0f64, 12),
        d in prop::collection::vec(-0.5..0.5f64, 12),
        s in 0.01..100.0f64,
    ) {
        prop_assume!(a.iter().map(|v| v * v).sum::<f64>() > 1e-6);
        let p: Vec<f64> = a.iter().zip(&d).map(|(x, y)| x + y).collect();
        let e = relative_l2(&[p.clone()], &[a.clone()]).unwrap();
        let sp: Vec<f64> = p.iter().map(|v| s * v).collect();
        let sa: Vec<f64> = a.iter().map(|v| s * v).collect();
        let es = relative_l2(&[sp], &[sa]).unwrap();
        prop_assert!((e - es).abs() <= 1e-12 * e.max(1.0));
        prop_assert!(e >= 0.0);
    }

    #[test]
    fn golden_stays_in_the_bracket(a in -10.0..10.0f64, w in 1e-3..20.0f64, c in -30.0..30.0f64, tol in 1e-6..1.0f64) {
        let b = a + w;
        let r = golden_section_search(|x| (x - c).powi(2), a, b, tol).unwrap();
        prop_assert!(r.argmin >= a && r.argmin <= b);
        prop_assert!(r.bracket[0] >= a && r.bracket[1] <= b);
        let best = c.clamp(a, b);
        prop_assert!((r.argmin - best).abs() <= tol.max(1e-9) + 1e-12);
    }

    #[test]
    fn observation_parser_never_panics(text in "\\PC{0,200}") {
        let _ = parse_observations_csv(&text, "fuzz.csv");
    }

    #[test]
    fn observation_parser_on_numeric_rows(rows in prop::collection::vec((0u8..4, -3.0..3.0f64, -3.0..3.0f64), 0..12)) {
        let mut text = String::from("t,x,u\n");
        for (t, x, u) in rows {
            text.push_str(&format!("{},{x},{u}\n", t as f64 * 0.1));
        }
        let _ = parse_observations_csv(&text, "rows.csv");
    }

    #[test]
    fn config_parser_never_panics(text in "\\PC{0,200}") {
        let _ = ExperimentConfig::from_toml(&text);
        let _ = InitialCondition::parse(&text);
    }
}
