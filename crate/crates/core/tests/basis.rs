use std::f64::consts::PI;

use dool_core::basis::*;
use rustfft::num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn fourier_synthesis_of_sine_plus_two() {
    let b = BasisSpec::fourier_1d(PI, 1, 64);
    let u = synthesize_values(&b, &CoeffVector::new(vec![c(2.0, 0.0), c(0.0, -0.5)])).unwrap();
    let want: Vec<f64> = b.axis(0).iter().map(|x| x.sin() + 2.0).collect();
    assert!(max_diff(&u, &want) < 1e-14);
}

#[test]
fn hermite_ground_state() {
    let b = BasisSpec::hermite(5.0, 3, 200);
    let cv = CoeffVector::real(&[PI.powf(0.25), 0.0, 0.0, 0.0]);
    let u = synthesize_values(&b, &cv).unwrap();
    let want: Vec<f64> = b.axis(0).iter().map(|x| (-x * x / 2.0).exp()).collect();
    assert!(max_diff(&u, &want) < 1e-13);
}

fn lcg(state: &mut u64) -> f64 {
    *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    ((*state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
}

fn random_coeffs(b: &BasisSpec, seed: u64) -> CoeffVector {
    let mut s = seed;
    let modes = b.modes();
    CoeffVector::new(
        modes
            .iter()
            .map(|&m| {
                let re = lcg(&mut s);
                let im = lcg(&mut s);
                if m == [0, 0] || b.family == Family::Hermite {
                    c(re, 0.0)
                } else {
                    c(re, im)
                }
            })
            .collect(),
    )
}

#[test]
fn synthesis_projection_round_trip() {
    for b in [
        BasisSpec::fourier_1d(1.0, 4, 32),
        BasisSpec::fourier_2d(PI, 2, 16),
        BasisSpec::hermite(5.0, 5, 400),
    ] {
        for seed in 0..5 {
            let cv = random_coeffs(&b, seed);
            let back = project(&b, &synthesize_values(&b, &cv).unwrap());
            for (x, y) in cv.values.iter().zip(&back.values) {
                assert!((x - y).norm() < 1e-10, "{:?}: {x} vs {y}", b.family);
            }
        }
    }
}

#[test]
fn derivatives_of_sine() {
    let b = BasisSpec::fourier_1d(PI, 1, 64);
    let xs = b.axis(0);
    let u: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
    let d1 = spectral_derivative(&b, &u, 1, 0).unwrap();
    let d2 = spectral_derivative(&b, &u, 2, 0).unwrap();
    assert!(max_diff(&d1, &xs.iter().map(|x| x.cos()).collect::<Vec<_>>()) < 1e-12);
    assert!(max_diff(&d2, &xs.iter().map(|x| -x.sin()).collect::<Vec<_>>()) < 1e-12);
}

#[test]
fn third_derivative_matches_coefficient_oracle() {
    let b = BasisSpec::fourier_1d(1.0, 3, 64);
    let cv = random_coeffs(&b, 11);
    let u = synthesize_values(&b, &cv).unwrap();
    let d3 = spectral_derivative(&b, &u, 3, 0).unwrap();
    // (iπk)^3 c_k synthesized directly
    let dc = CoeffVector::new(
        cv.values
            .iter()
            .zip(b.modes())
            .map(|(v, m)| v * c(0.0, PI * m[0] as f64).powi(3))
            .collect(),
    );
    let want = synthesize_values(&b, &dc).unwrap();
    let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(max_diff(&d3, &want) < 1e-10 * scale, "{} of {scale}", max_diff(&d3, &want));
}

#[test]
fn quadrature_cases() {
    let b = BasisSpec::fourier_1d(PI, 1, 64);
    assert!((quadrature(&b, &vec![1.0; 64]) - 2.0 * PI).abs() < 1e-13);
    let s: Vec<f64> = b.axis(0).iter().map(|x| x.sin()).collect();
    assert!(quadrature(&b, &s).abs() < 1e-12);
    let h = BasisSpec::hermite(5.0, 5, 400);
    let g: Vec<f64> = h.axis(0).iter().map(|x| (-x * x / 2.0).exp()).collect();
    // the oracle is the integral over [−5, 5] by composite Simpson on 2·10⁵
    // panels; it sits 1.4e-6 below √(2π)
    let n = 200_000;
    let dx = 10.0 / n as f64;
    let f = |x: f64| (-x * x / 2.0).exp();
    let simpson = (0..=n)
        .map(|k| {
            let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            w * f(-5.0 + k as f64 * dx)
        })
        .sum::<f64>()
        * dx
        / 3.0;
    assert!((quadrature(&h, &g) - simpson).abs() < 1e-8);
    assert!(((2.0 * PI).sqrt() - simpson - 1.43e-6).abs() < 1e-8);
}

#[test]
fn degenerate_rectangles_give_the_center() {
    let b = BasisSpec::fourier_1d(1.0, 2, 32);
    let mut spec = SamplingSpec::geometric(&b, 1.5, 0.0);
    spec.centers[1] = c(0.1, -0.2);
    let s = sample_coefficients(&b, &spec, 5, 3).unwrap();
    for cv in &s {
        assert_eq!(cv.values, spec.centers);
    }
}

#[test]
fn sampling_is_reproducible() {
    let b = BasisSpec::fourier_1d(1.0, 3, 32);
    let spec = SamplingSpec::geometric(&b, 1.0, 0.6);
    assert_eq!(
        sample_coefficients(&b, &spec, 20, 9).unwrap(),
        sample_coefficients(&b, &spec, 20, 9).unwrap()
    );
    // sample b does not depend on how many come before or after it
    let short = sample_coefficients(&b, &spec, 5, 9).unwrap();
    assert_eq!(short[..], sample_coefficients(&b, &spec, 20, 9).unwrap()[..5]);
}

#[test]
fn heat_sampling_monte_carlo() {
    let b = BasisSpec::fourier_1d(PI, 1, 64);
    let mut spec = SamplingSpec::geometric(&b, 2.0, 1.0);
    spec.positivity_floor = 0.1;
    let draws = sample_coefficients(&b, &spec, 10_000, 1).unwrap();
    let mut mean = vec![0.0; 64];
    for cv in &draws {
        let u = synthesize_values(&b, cv).unwrap();
        assert!(u.iter().cloned().fold(f64::INFINITY, f64::min) >= 0.1);
        for (m, v) in mean.iter_mut().zip(&u) {
            *m += v / draws.len() as f64;
        }
    }
    let center = synthesize_values(&b, &CoeffVector::new(spec.centers.clone())).unwrap();
    for (m, c) in mean.iter().zip(&center) {
        assert!((m - c).abs() <= 0.05 * c.abs());
    }
}

#[test]
fn infeasible_floor_is_reported() {
    let b = BasisSpec::fourier_1d(1.0, 1, 16);
    let mut spec = SamplingSpec::geometric(&b, 0.0, 0.1);
    spec.positivity_floor = 5.0;
    spec.max_retries = 10;
    assert!(matches!(
        sample_coefficients(&b, &spec, 1, 0),
        Err(dool_core::Error::SamplingInfeasible(_))
    ));
}

#[test]
fn band_limit_drops_high_modes() {
    let b = BasisSpec::fourier_1d(PI, 4, 32);
    let xs = b.axis(0);
    let u: Vec<f64> = xs.iter().map(|x| 1.0 + x.sin() + (3.0 * x).cos()).collect();
    let want: Vec<f64> = xs.iter().map(|x| 1.0 + x.sin()).collect();
    assert!(max_diff(&band_limit(&b, &u, 2), &want) < 1e-13);
}

#[test]
fn coefficient_checks() {
    let b = BasisSpec::fourier_1d(1.0, 1, 8);
    assert!(CoeffVector::new(vec![c(1.0, 0.5), c(0.0, 0.0)]).check(&b).is_err());
    assert!(CoeffVector::new(vec![c(1.0, 0.0)]).check(&b).is_err());
    assert!(CoeffVector::new(vec![c(f64::NAN, 0.0), c(0.0, 0.0)]).check(&b).is_err());
    let r = reduce_full_spectrum(&b, &[([0, 0], c(2.0, 0.0)), ([-1, 0], c(0.0, 0.5))]).unwrap();
    assert_eq!(r.values[1], c(0.0, -0.5));
    assert!(reduce_full_spectrum(&b, &[([1, 0], c(0.0, 0.5)), ([-1, 0], c(0.0, 0.5))]).is_err());
    assert!(reduce_full_spectrum(&b, &[([2, 0], c(1.0, 0.0))]).is_err());
}

#[test]
fn invalid_bases_rejected() {
    assert!(BasisSpec::fourier_1d(1.0, 4, 8).validate().is_err());
    assert!(BasisSpec::fourier_1d(-1.0, 1, 8).validate().is_err());
    assert!(BasisSpec::hermite(5.0, 5, 10).validate().is_err());
}
