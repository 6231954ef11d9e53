//! Fourier and Hermite bases on uniform grids.
//!
//! Grid points are `x_k = −I + 2kI/N`, `k = 1..N`. Two-dimensional fields are
//! stored row-major with index `ix·N_y + iy`.
//!
//! Fourier coefficients are kept on the conjugate-reduced mode set: `k ≥ 0`
//! in 1D, and in 2D the modes with `k_x > 0`, or `k_x = 0, k_y ≥ 0`, inside
//! the box `max(|k_x|, |k_y|) ≤ K`, sorted lexicographically. The remaining
//! half of the spectrum is implied by `c_{−k} = conj(c_k)`.

use std::cell::RefCell;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use dool_nn::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Fourier,
    Hermite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    pub family: Family,
    pub dim: usize,
    pub half_width: f64,
    pub truncation: usize,
    /// Points per axis.
    pub grid: Vec<usize>,
    /// Hermite only: order of the least-squares fit used before
    /// differentiating a grid field. Defaults to `max(20, K)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection_order: Option<usize>,
}

impl BasisSpec {
    pub fn fourier_1d(half_width: f64, truncation: usize, n: usize) -> Self {
        Self {
            family: Family::Fourier,
            dim: 1,
            half_width,
            truncation,
            grid: vec![n],
            projection_order: None,
        }
    }

    pub fn fourier_2d(half_width: f64, truncation: usize, n: usize) -> Self {
        Self {
            family: Family::Fourier,
            dim: 2,
            half_width,
            truncation,
            grid: vec![n, n],
            projection_order: None,
        }
    }

    pub fn hermite(half_width: f64, truncation: usize, n: usize) -> Self {
        Self {
            family: Family::Hermite,
            dim: 1,
            half_width,
            truncation,
            grid: vec![n],
            projection_order: None,
        }
    }

    /// Same basis on a different grid.
    pub fn with_grid(&self, n: usize) -> Self {
        let mut b = self.clone();
        b.grid = vec![n; self.dim];
        b
    }

    pub fn with_truncation(&self, k: usize) -> Self {
        let mut b = self.clone();
        b.truncation = k;
        b
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::invalid("basis.dim", "must be 1 or 2"));
        }
        if self.grid.len() != self.dim {
            return Err(Error::invalid(
                "basis.grid",
                format!("needs {} entries, got {}", self.dim, self.grid.len()),
            ));
        }
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return Err(Error::invalid("basis.half_width", "must be positive"));
        }
        match self.family {
            Family::Fourier => {
                for &n in &self.grid {
                    if n <= 2 * self.truncation {
                        return Err(Error::invalid(
                            "basis.grid",
                            format!("Fourier grid needs N > 2K = {}", 2 * self.truncation),
                        ));
                    }
                }
            }
            Family::Hermite => {
                if self.dim != 1 {
                    return Err(Error::invalid("basis.dim", "Hermite basis is 1D only"));
                }
                if self.grid[0] <= self.hermite_order() + 1 {
                    return Err(Error::invalid(
                        "basis.grid",
                        "Hermite grid must have more points than the projection order",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn hermite_order(&self) -> usize {
        self.projection_order.unwrap_or(20).max(self.truncation)
    }

    pub fn n_points(&self) -> usize {
        self.grid.iter().product()
    }

    pub fn axis(&self, axis: usize) -> Vec<f64> {
        let n = self.grid[axis];
        let i = self.half_width;
        (1..=n).map(|k| -i + 2.0 * k as f64 * i / n as f64).collect()
    }

    /// Grid points as an `n_points × dim` matrix (the trunk input).
    pub fn points(&self) -> Matrix {
        if self.dim == 1 {
            return Matrix::column(&self.axis(0));
        }
        let (xs, ys) = (self.axis(0), self.axis(1));
        let mut data = Vec::with_capacity(xs.len() * ys.len() * 2);
        for &x in &xs {
            for &y in &ys {
                data.push(x);
                data.push(y);
            }
        }
        Matrix::from_vec(xs.len() * ys.len(), 2, data)
    }

    /// Rectangle-rule cell volume.
    pub fn cell(&self) -> f64 {
        self.grid
            .iter()
            .map(|&n| 2.0 * self.half_width / n as f64)
            .product()
    }

    /// Measure of the domain.
    pub fn volume(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dim as i32)
    }

    /// Stored mode indices (conjugate-reduced for Fourier).
    pub fn modes(&self) -> Vec<[i32; 2]> {
        let k = self.truncation as i32;
        match (self.family, self.dim) {
            (Family::Hermite, _) | (Family::Fourier, 1) => (0..=k).map(|m| [m, 0]).collect(),
            _ => {
                let mut out: Vec<[i32; 2]> = (0..=k).map(|ky| [0, ky]).collect();
                for kx in 1..=k {
                    for ky in -k..=k {
                        out.push([kx, ky]);
                    }
                }
                out
            }
        }
    }

    pub fn n_modes(&self) -> usize {
        let k = self.truncation;
        match (self.family, self.dim) {
            (Family::Fourier, 2) => (k + 1) + k * (2 * k + 1),
            _ => k + 1,
        }
    }

    /// Length of the real branch-input vector.
    pub fn branch_width(&self) -> usize {
        match self.family {
            Family::Fourier => 2 * self.n_modes(),
            Family::Hermite => self.n_modes(),
        }
    }

    fn is_self_conjugate(&self, mode: [i32; 2]) -> bool {
        self.family == Family::Hermite || mode == [0, 0]
    }
}

/// Size of a mode for the width rule and band truncation.
pub fn mode_norm(mode: [i32; 2]) -> usize {
    mode[0].unsigned_abs().max(mode[1].unsigned_abs()) as usize
}

/// Basis coefficients in the order of [`BasisSpec::modes`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    pub values: Vec<Complex64>,
}

impl CoeffVector {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    pub fn real(values: &[f64]) -> Self {
        Self {
            values: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    /// Branch-network encoding: interleaved `(Re, Im)` for Fourier, the real
    /// coefficients for Hermite.
    pub fn branch_input(&self, basis: &BasisSpec) -> Vec<f64> {
        match basis.family {
            Family::Fourier => self.values.iter().flat_map(|c| [c.re, c.im]).collect(),
            Family::Hermite => self.values.iter().map(|c| c.re).collect(),
        }
    }

    pub fn check(&self, basis: &BasisSpec) -> Result<()> {
        if self.values.len() != basis.n_modes() {
            return Err(Error::InvalidCoefficients(format!(
                "expected {} coefficients, got {}",
                basis.n_modes(),
                self.values.len()
            )));
        }
        for (c, m) in self.values.iter().zip(basis.modes()) {
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::InvalidCoefficients(format!("non-finite coefficient at mode {m:?}")));
            }
            if basis.is_self_conjugate(m) && c.im.abs() > 1e-12 * c.re.abs().max(1.0) {
                return Err(Error::InvalidCoefficients(format!(
                    "mode {m:?} must be real for a real field (imaginary part {})",
                    c.im
                )));
            }
        }
        Ok(())
    }
}

/// Builds the reduced coefficient vector from an explicit list of modes that
/// may include negative indices; both members of a conjugate pair must agree.
pub fn reduce_full_spectrum(basis: &BasisSpec, entries: &[([i32; 2], Complex64)]) -> Result<CoeffVector> {
    let modes = basis.modes();
    let mut out = vec![Complex64::new(0.0, 0.0); modes.len()];
    let mut seen = vec![false; modes.len()];
    let k = basis.truncation as i32;
    for &(m, c) in entries {
        let direct = modes.iter().position(|&q| q == m);
        let mirrored = modes.iter().position(|&q| q == [-m[0], -m[1]]);
        let (idx, val) = match (direct, mirrored, basis.family) {
            (Some(i), _, _) => (i, c),
            (None, Some(i), Family::Fourier) => (i, c.conj()),
            _ => {
                return Err(Error::InvalidCoefficients(format!(
                    "mode {m:?} outside truncation K={k}"
                )))
            }
        };
        if seen[idx] {
            if (out[idx] - val).norm() > 1e-12 * val.norm().max(1.0) {
                return Err(Error::InvalidCoefficients(format!(
                    "mode {m:?} breaks Hermitian symmetry c(-k) = conj(c(k))"
                )));
            }
        } else {
            out[idx] = val;
            seen[idx] = true;
        }
    }
    let cv = CoeffVector::new(out);
    cv.check(basis)?;
    Ok(cv)
}

/// A real field on a basis grid, optionally with its coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub basis: BasisSpec,
    pub coeffs: Option<CoeffVector>,
    pub values: Vec<f64>,
}

impl SpectralField {
    pub fn from_values(basis: &BasisSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != basis.n_points() {
            return Err(Error::Config(format!(
                "field has {} values, grid has {} points",
                values.len(),
                basis.n_points()
            )));
        }
        Ok(Self {
            basis: basis.clone(),
            coeffs: None,
            values,
        })
    }
}

/// Evaluates the coefficient series at the grid points.
pub fn synthesize(basis: &BasisSpec, coeffs: &CoeffVector) -> Result<SpectralField> {
    let values = synthesize_values(basis, coeffs)?;
    Ok(SpectralField {
        basis: basis.clone(),
        coeffs: Some(coeffs.clone()),
        values,
    })
}

pub fn synthesize_values(basis: &BasisSpec, coeffs: &CoeffVector) -> Result<Vec<f64>> {
    coeffs.check(basis)?;
    let modes = basis.modes();
    let w = PI / basis.half_width;
    Ok(match (basis.family, basis.dim) {
        (Family::Hermite, _) => {
            let re: Vec<f64> = coeffs.values.iter().map(|c| c.re).collect();
            hermite_series(&re, &basis.axis(0))
        }
        (Family::Fourier, 1) => basis
            .axis(0)
            .iter()
            .map(|&x| {
                let mut s = coeffs.values[0].re;
                for (c, m) in coeffs.values.iter().zip(&modes).skip(1) {
                    let ph = w * m[0] as f64 * x;
                    s += 2.0 * (c.re * ph.cos() - c.im * ph.sin());
                }
                s
            })
            .collect(),
        _ => {
            let (xs, ys) = (basis.axis(0), basis.axis(1));
            let mut out = Vec::with_capacity(xs.len() * ys.len());
            for &x in &xs {
                for &y in &ys {
                    let mut s = coeffs.values[0].re;
                    for (c, m) in coeffs.values.iter().zip(&modes).skip(1) {
                        let ph = w * (m[0] as f64 * x + m[1] as f64 * y);
                        s += 2.0 * (c.re * ph.cos() - c.im * ph.sin());
                    }
                    out.push(s);
                }
            }
            out
        }
    })
}

/// Coefficients of a grid field on the basis truncation: discrete Fourier
/// sums, or a least-squares fit for Hermite.
pub fn project(basis: &BasisSpec, values: &[f64]) -> CoeffVector {
    assert_eq!(values.len(), basis.n_points());
    match basis.family {
        Family::Hermite => CoeffVector::real(&hermite_fit(&basis.axis(0), values, basis.truncation)),
        Family::Fourier => {
            let w = PI / basis.half_width;
            let n = basis.n_points() as f64;
            let modes = basis.modes();
            let pts = basis.points();
            let out = modes
                .iter()
                .map(|m| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (r, &v) in values.iter().enumerate() {
                        let p = pts.row(r);
                        let mut ph = m[0] as f64 * p[0];
                        if basis.dim == 2 {
                            ph += m[1] as f64 * p[1];
                        }
                        let ph = -w * ph;
                        acc += Complex64::new(v * ph.cos(), v * ph.sin());
                    }
                    let mut c = acc / n;
                    if basis.is_self_conjugate(*m) {
                        c.im = 0.0;
                    }
                    c
                })
                .collect();
            CoeffVector::new(out)
        }
    }
}

/// Rectangle-rule integral over the domain.
pub fn quadrature(basis: &BasisSpec, values: &[f64]) -> f64 {
    basis.cell() * values.iter().sum::<f64>()
}

/// Exact derivative of a band-limited Fourier field, or of the Hermite
/// least-squares fit of order [`BasisSpec::hermite_order`].
pub fn spectral_derivative(basis: &BasisSpec, values: &[f64], order: u32, axis: usize) -> Result<Vec<f64>> {
    if !(1..=3).contains(&order) {
        return Err(Error::Unsupported(format!("derivative order {order}")));
    }
    if axis >= basis.dim {
        return Err(Error::Unsupported(format!("axis {axis} in {}D", basis.dim)));
    }
    if values.len() != basis.n_points() {
        return Err(Error::Config("field does not match the grid".into()));
    }
    match basis.family {
        Family::Fourier => {
            let w = PI / basis.half_width;
            let i_pow = Complex64::new(0.0, 1.0).powi(order as i32);
            Ok(fourier_multiply(basis, values, |m, nyq| {
                if order % 2 == 1 && nyq[axis] {
                    return Complex64::new(0.0, 0.0);
                }
                i_pow * (w * m[axis] as f64).powi(order as i32)
            }))
        }
        Family::Hermite => {
            let xs = basis.axis(0);
            let mut c = hermite_fit(&xs, values, basis.hermite_order());
            for _ in 0..order {
                c = hermite_derivative_coeffs(&c);
            }
            Ok(hermite_series(&c, &xs))
        }
    }
}

/// Laplacian (sum of second derivatives over all axes).
pub fn laplacian(basis: &BasisSpec, values: &[f64]) -> Result<Vec<f64>> {
    let mut out = spectral_derivative(basis, values, 2, 0)?;
    for axis in 1..basis.dim {
        let d = spectral_derivative(basis, values, 2, axis)?;
        for (o, v) in out.iter_mut().zip(d) {
            *o += v;
        }
    }
    Ok(out)
}

/// Galerkin truncation: keeps Fourier modes with `max(|k_x|, |k_y|) ≤ band`,
/// or the Hermite least-squares fit of order `band`.
pub fn band_limit(basis: &BasisSpec, values: &[f64], band: usize) -> Vec<f64> {
    match basis.family {
        Family::Fourier => fourier_multiply(basis, values, |m, nyq| {
            let keep = m.iter().take(basis.dim).all(|&k| k.unsigned_abs() as usize <= band)
                && !nyq.iter().take(basis.dim).any(|&b| b);
            Complex64::new(if keep { 1.0 } else { 0.0 }, 0.0)
        }),
        Family::Hermite => {
            let xs = basis.axis(0);
            hermite_series(&hermite_fit(&xs, values, band), &xs)
        }
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_along(data: &mut [Complex64], n: usize, stride: usize, count: usize, inverse: bool) {
    let plan = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    });
    if stride == 1 {
        plan.process(&mut data[..n * count]);
        return;
    }
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for start in 0..count {
        for (k, v) in line.iter_mut().enumerate() {
            *v = data[start + k * stride];
        }
        plan.process(&mut line);
        for (k, v) in line.iter().enumerate() {
            data[start + k * stride] = *v;
        }
    }
}

fn signed(k: usize, n: usize) -> (i64, bool) {
    let nyq = n % 2 == 0 && k == n / 2;
    let m = if k <= n / 2 { k as i64 } else { k as i64 - n as i64 };
    (m, nyq)
}

/// Applies a diagonal multiplier in discrete Fourier space. The grid offset
/// cancels between the forward and inverse transforms.
pub(crate) fn fourier_multiply(
    basis: &BasisSpec,
    values: &[f64],
    mult: impl Fn([i64; 2], [bool; 2]) -> Complex64,
) -> Vec<f64> {
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let total = data.len();
    if basis.dim == 1 {
        let n = basis.grid[0];
        fft_along(&mut data, n, 1, 1, false);
        for (k, v) in data.iter_mut().enumerate() {
            let (m, nyq) = signed(k, n);
            *v *= mult([m, 0], [nyq, false]);
        }
        fft_along(&mut data, n, 1, 1, true);
    } else {
        let (nx, ny) = (basis.grid[0], basis.grid[1]);
        fft_along(&mut data, ny, 1, nx, false);
        fft_along(&mut data, nx, ny, ny, false);
        for ix in 0..nx {
            let (mx, qx) = signed(ix, nx);
            for iy in 0..ny {
                let (my, qy) = signed(iy, ny);
                data[ix * ny + iy] *= mult([mx, my], [qx, qy]);
            }
        }
        fft_along(&mut data, ny, 1, nx, true);
        fft_along(&mut data, nx, ny, ny, true);
    }
    let scale = 1.0 / total as f64;
    data.iter().map(|c| c.re * scale).collect()
}

/// Normalized Hermite functions `ψ_0..=ψ_kmax` at `x`.
pub fn hermite_functions(x: f64, kmax: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(kmax + 1);
    let p0 = PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(p0);
    if kmax == 0 {
        return out;
    }
    out.push(2f64.sqrt() * x * p0);
    for k in 1..kmax {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

pub fn hermite_series(coeffs: &[f64], xs: &[f64]) -> Vec<f64> {
    if coeffs.is_empty() {
        return vec![0.0; xs.len()];
    }
    xs.iter()
        .map(|&x| {
            hermite_functions(x, coeffs.len() - 1)
                .iter()
                .zip(coeffs)
                .map(|(p, c)| p * c)
                .sum()
        })
        .collect()
}

/// Coefficients of the derivative: `ψ_k' = √(k/2) ψ_{k−1} − √((k+1)/2) ψ_{k+1}`.
pub fn hermite_derivative_coeffs(c: &[f64]) -> Vec<f64> {
    let mut d = vec![0.0; c.len() + 1];
    for (k, &ck) in c.iter().enumerate() {
        let kf = k as f64;
        if k > 0 {
            d[k - 1] += (kf / 2.0).sqrt() * ck;
        }
        d[k + 1] -= ((kf + 1.0) / 2.0).sqrt() * ck;
    }
    d
}

/// Discrete least-squares fit of `values` by `ψ_0..=ψ_order`.
pub fn hermite_fit(xs: &[f64], values: &[f64], order: usize) -> Vec<f64> {
    let m = order + 1;
    let mut gram = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    for (&x, &v) in xs.iter().zip(values) {
        let psi = hermite_functions(x, order);
        for i in 0..m {
            rhs[i] += psi[i] * v;
            for j in 0..=i {
                gram[i * m + j] += psi[i] * psi[j];
            }
        }
    }
    cholesky_solve(&mut gram, &mut rhs, m);
    rhs
}

/// Solves `G x = b` in place for symmetric positive definite `G` (lower
/// triangle used).
fn cholesky_solve(g: &mut [f64], b: &mut [f64], n: usize) {
    for j in 0..n {
        let mut d = g[j * n + j];
        for k in 0..j {
            d -= g[j * n + k] * g[j * n + k];
        }
        let d = d.max(f64::MIN_POSITIVE).sqrt();
        g[j * n + j] = d;
        for i in j + 1..n {
            let mut s = g[i * n + j];
            for k in 0..j {
                s -= g[i * n + k] * g[j * n + k];
            }
            g[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= g[i * n + k] * b[k];
        }
        b[i] = s / g[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= g[k * n + i] * b[k];
        }
        b[i] = s / g[i * n + i];
    }
}

/// Per-mode sampling rectangles.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingSpec {
    pub centers: Vec<Complex64>,
    /// `[real, imag]` half-widths per mode.
    pub half_widths: Vec<[f64; 2]>,
    /// Samples with `min(u) + shift < positivity_floor` are redrawn when the
    /// floor is positive.
    pub positivity_floor: f64,
    pub shift: f64,
    pub max_retries: usize,
}

impl SamplingSpec {
    /// `r_k = r0·2^{−|k|}`, center `background` on the zero mode.
    pub fn geometric(basis: &BasisSpec, background: f64, r0: f64) -> Self {
        let modes = basis.modes();
        let mut centers = vec![Complex64::new(0.0, 0.0); modes.len()];
        centers[0] = Complex64::new(background, 0.0);
        let half_widths = modes
            .iter()
            .map(|&m| {
                let r = r0 * 0.5f64.powi(mode_norm(m) as i32);
                [r, r]
            })
            .collect();
        Self {
            centers,
            half_widths,
            positivity_floor: 0.0,
            shift: 0.0,
            max_retries: 1000,
        }
    }

    pub fn validate(&self, basis: &BasisSpec) -> Result<()> {
        let n = basis.n_modes();
        if self.centers.len() != n || self.half_widths.len() != n {
            return Err(Error::invalid(
                "sampling",
                format!("need {n} centers and widths for this basis"),
            ));
        }
        for w in &self.half_widths {
            if !(w[0] >= 0.0 && w[1] >= 0.0 && w[0].is_finite() && w[1].is_finite()) {
                return Err(Error::invalid("sampling.half_widths", "must be finite and non-negative"));
            }
        }
        let modes = basis.modes();
        for (i, mi) in modes.iter().enumerate() {
            for (j, mj) in modes.iter().enumerate() {
                if mode_norm(*mj) > mode_norm(*mi) {
                    for part in 0..2 {
                        if self.half_widths[j][part] > self.half_widths[i][part] {
                            return Err(Error::invalid(
                                "sampling.half_widths",
                                format!("widths must not increase with |k| (mode {mj:?} vs {mi:?})"),
                            ));
                        }
                    }
                }
            }
        }
        if self.positivity_floor < 0.0 || !self.positivity_floor.is_finite() {
            return Err(Error::invalid("sampling.positivity_floor", "must be non-negative"));
        }
        Ok(())
    }
}

/// Independent uniform draws on each rectangle. Sample `b` uses its own
/// ChaCha8 stream, so the list does not depend on how it is generated.
pub fn sample_coefficients(
    basis: &BasisSpec,
    spec: &SamplingSpec,
    n: usize,
    seed: u64,
) -> Result<Vec<CoeffVector>> {
    spec.validate(basis)?;
    let modes = basis.modes();
    (0..n)
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            for _ in 0..=spec.max_retries {
                let values: Vec<Complex64> = modes
                    .iter()
                    .zip(spec.centers.iter().zip(&spec.half_widths))
                    .map(|(&m, (c, w))| {
                        let re = c.re + w[0] * (2.0 * rng.gen::<f64>() - 1.0);
                        let im = c.im + w[1] * (2.0 * rng.gen::<f64>() - 1.0);
                        if basis.is_self_conjugate(m) {
                            Complex64::new(re, 0.0)
                        } else {
                            Complex64::new(re, im)
                        }
                    })
                    .collect();
                let cv = CoeffVector::new(values);
                if spec.positivity_floor > 0.0 {
                    let u = synthesize_values(basis, &cv)?;
                    let min = u.iter().cloned().fold(f64::INFINITY, f64::min);
                    if min + spec.shift < spec.positivity_floor {
                        continue;
                    }
                }
                return Ok(cv);
            }
            Err(Error::SamplingInfeasible(format!(
                "sample {b}: no draw with min u >= {} after {} retries; half-widths {:?}",
                spec.positivity_floor - spec.shift,
                spec.max_retries,
                spec.half_widths
            )))
        })
        .collect()
}
