//! The model catalogue.
//!
//! Every reduced Rayleighian density here has the form
//! `Σ_d a_d(x)·j_d + h(x)·|j|²` with `h = 1/(2m) > 0`, where `a` and `m`
//! depend on `u` and its spatial derivatives only. The pointwise minimizer is
//! therefore `j = −m·a`, and the loss graph needs `a` and `h` as constants.

use serde::{Deserialize, Serialize};

use crate::basis::{band_limit, laplacian, quadrature, spectral_derivative, BasisSpec, Family};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelName {
    #[serde(rename = "heat")]
    Heat,
    #[serde(rename = "heat_source")]
    HeatSource,
    #[serde(rename = "fokker_planck")]
    FokkerPlanck,
    #[serde(rename = "cahn_hilliard_1d")]
    CahnHilliard1d,
    #[serde(rename = "cahn_hilliard_2d")]
    CahnHilliard2d,
    #[serde(rename = "allen_cahn")]
    AllenCahn,
}

impl ModelName {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelName::Heat => "heat",
            ModelName::HeatSource => "heat_source",
            ModelName::FokkerPlanck => "fokker_planck",
            ModelName::CahnHilliard1d => "cahn_hilliard_1d",
            ModelName::CahnHilliard2d => "cahn_hilliard_2d",
            ModelName::AllenCahn => "allen_cahn",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Conserved,
    Nonconserved,
}

fn default_beta() -> f64 {
    2.0
}
fn default_gamma() -> f64 {
    0.1
}
fn default_potential() -> f64 {
    0.5
}
fn default_eps_u() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: ModelName,
    /// Inverse temperature (Fokker–Planck).
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_gamma")]
    pub gamma1: f64,
    #[serde(default = "default_gamma")]
    pub gamma2: f64,
    /// Shift `C` used in denominators: `u → u + C`.
    #[serde(default)]
    pub shift: f64,
    /// `V(x) = potential·x²` (Fokker–Planck).
    #[serde(default = "default_potential")]
    pub potential: f64,
    /// Denominator guard.
    #[serde(default = "default_eps_u")]
    pub eps_u: f64,
}

/// `a_d` and `h` of the density `Σ a_d j_d + h |j|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    pub a: Vec<Vec<f64>>,
    pub h: Vec<f64>,
}

impl ModelSpec {
    pub fn new(name: ModelName) -> Self {
        Self {
            name,
            beta: default_beta(),
            gamma1: default_gamma(),
            gamma2: default_gamma(),
            shift: 0.0,
            potential: default_potential(),
            eps_u: default_eps_u(),
        }
    }

    pub fn kind(&self) -> Kind {
        match self.name {
            ModelName::AllenCahn => Kind::Nonconserved,
            _ => Kind::Conserved,
        }
    }

    pub fn flux_dim(&self) -> usize {
        match self.name {
            ModelName::CahnHilliard2d => 2,
            _ => 1,
        }
    }

    /// Whether `u + C` appears in a denominator.
    pub fn has_denominator(&self) -> bool {
        matches!(
            self.name,
            ModelName::Heat | ModelName::HeatSource | ModelName::FokkerPlanck
        )
    }

    pub fn validate(&self, basis: &BasisSpec) -> Result<()> {
        basis.validate()?;
        let want_dim = if self.name == ModelName::CahnHilliard2d { 2 } else { 1 };
        if basis.dim != want_dim {
            return Err(Error::invalid(
                "basis.dim",
                format!("{} needs a {want_dim}D basis", self.name.as_str()),
            ));
        }
        let want_family = if self.name == ModelName::FokkerPlanck {
            Family::Hermite
        } else {
            Family::Fourier
        };
        if basis.family != want_family {
            return Err(Error::invalid(
                "basis.family",
                format!("{} needs the {:?} basis", self.name.as_str(), want_family),
            ));
        }
        for (field, v, positive) in [
            ("model.beta", self.beta, true),
            ("model.gamma1", self.gamma1, false),
            ("model.gamma2", self.gamma2, false),
            ("model.eps_u", self.eps_u, false),
        ] {
            if !v.is_finite() || v < 0.0 || (positive && v == 0.0) {
                return Err(Error::invalid(field, "must be finite and non-negative (beta positive)"));
            }
        }
        if !self.shift.is_finite() || self.shift < 0.0 {
            return Err(Error::invalid("model.shift", "must be finite and non-negative"));
        }
        if !self.potential.is_finite() {
            return Err(Error::invalid("model.potential", "must be finite"));
        }
        Ok(())
    }

    fn check_positive(&self, u: &[f64]) -> Result<Vec<f64>> {
        let w: Vec<f64> = u.iter().map(|v| v + self.shift).collect();
        let (k, min) = w
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc });
        if min.is_nan() || min < self.eps_u {
            return Err(Error::Positivity(format!(
                "u + C = {min:.3e} at grid index {k} is below eps_u = {:.1e}; consider a larger shift C",
                self.eps_u
            )));
        }
        Ok(w)
    }

    /// Chemical potential `−γ₁Δu + γ₂(u³ − u)`.
    pub fn chemical_potential(&self, basis: &BasisSpec, u: &[f64]) -> Result<Vec<f64>> {
        let lap = laplacian(basis, u)?;
        Ok(u
            .iter()
            .zip(lap)
            .map(|(&v, l)| -self.gamma1 * l + self.gamma2 * (v * v * v - v))
            .collect())
    }

    /// Density coefficients for a state `u` on `basis`.
    pub fn density(&self, basis: &BasisSpec, u: &[f64]) -> Result<Density> {
        let n = u.len();
        match self.name {
            ModelName::Heat | ModelName::HeatSource | ModelName::FokkerPlanck => {
                let w = self.check_positive(u)?;
                let ux = spectral_derivative(basis, u, 1, 0)?;
                let xs = basis.axis(0);
                let a = (0..n)
                    .map(|k| {
                        let drive = match self.name {
                            ModelName::Heat => ux[k],
                            ModelName::HeatSource => ux[k] - xs[k].cos(),
                            _ => ux[k] / self.beta + u[k] * 2.0 * self.potential * xs[k],
                        };
                        drive / w[k]
                    })
                    .collect();
                let h = w.iter().map(|v| 0.5 / v).collect();
                Ok(Density { a: vec![a], h })
            }
            ModelName::CahnHilliard1d | ModelName::CahnHilliard2d => {
                let mu = self.chemical_potential(basis, u)?;
                let a = (0..basis.dim)
                    .map(|axis| spectral_derivative(basis, &mu, 1, axis))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Density { a, h: vec![0.5; n] })
            }
            ModelName::AllenCahn => {
                let mu = self.chemical_potential(basis, u)?;
                Ok(Density {
                    a: vec![mu],
                    h: vec![0.5; n],
                })
            }
        }
    }

    /// Quadrature of the density for given flux components.
    pub fn rayleighian_loss(&self, basis: &BasisSpec, u: &[f64], j: &[Vec<f64>]) -> Result<f64> {
        let d = self.density(basis, u)?;
        rayleighian_from_density(basis, &d, j)
    }

    /// Pointwise minimizer of the density.
    pub fn analytic_flux(&self, basis: &BasisSpec, u: &[f64]) -> Result<Vec<Vec<f64>>> {
        let d = self.density(basis, u)?;
        Ok(d.a
            .iter()
            .map(|a| a.iter().zip(&d.h).map(|(a, h)| -a / (2.0 * h)).collect())
            .collect())
    }

    /// Analytic flux of the band-limited state, band-limited again.
    pub fn analytic_flux_banded(
        &self,
        basis: &BasisSpec,
        u: &[f64],
        band: Option<usize>,
    ) -> Result<Vec<Vec<f64>>> {
        match band {
            None => self.analytic_flux(basis, u),
            Some(m) => {
                let ub = band_limit(basis, u, m);
                let j = self.analytic_flux(basis, &ub)?;
                Ok(j.iter().map(|c| band_limit(basis, c, m)).collect())
            }
        }
    }

    pub fn free_energy(&self, basis: &BasisSpec, u: &[f64]) -> Result<f64> {
        match self.name {
            ModelName::Heat | ModelName::HeatSource | ModelName::FokkerPlanck => {
                if let Some((k, v)) = u.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
                    return Err(Error::Domain(format!("u = {v:e} <= 0 at grid index {k} under log")));
                }
                let xs = basis.axis(0);
                let dens: Vec<f64> = if self.name == ModelName::FokkerPlanck {
                    u.iter()
                        .zip(&xs)
                        .map(|(&v, &x)| (v * v.ln() + v * self.potential * x * x) / self.beta)
                        .collect()
                } else {
                    u.iter().map(|&v| v * v.ln()).collect()
                };
                Ok(quadrature(basis, &dens))
            }
            _ => {
                let mut grad2 = vec![0.0; u.len()];
                for axis in 0..basis.dim {
                    let d = spectral_derivative(basis, u, 1, axis)?;
                    for (g, v) in grad2.iter_mut().zip(d) {
                        *g += v * v;
                    }
                }
                let dens: Vec<f64> = u
                    .iter()
                    .zip(&grad2)
                    .map(|(&v, &g)| 0.5 * self.gamma1 * g + 0.25 * self.gamma2 * (v * v - 1.0).powi(2))
                    .collect();
                Ok(quadrature(basis, &dens))
            }
        }
    }

    /// Relative L2 size of the dynamics residual for a time-derivative
    /// estimate, `‖r‖ / max(‖∂ₜu‖, ‖rate‖)` with `rate = −∇·j` (conserved)
    /// or `j` (nonconserved) at the analytic flux.
    pub fn pde_residual(&self, basis: &BasisSpec, u: &[f64], ut: &[f64]) -> Result<f64> {
        let j = self.analytic_flux(basis, u)?;
        let rate: Vec<f64> = match self.kind() {
            Kind::Conserved => flux_divergence(basis, &j)?.iter().map(|v| -v).collect(),
            Kind::Nonconserved => j[0].clone(),
        };
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let r: Vec<f64> = ut.iter().zip(&rate).map(|(a, b)| a - b).collect();
        let den = norm(ut).max(norm(&rate));
        if den == 0.0 {
            return Ok(norm(&r));
        }
        Ok(norm(&r) / den)
    }
}

pub fn rayleighian_from_density(basis: &BasisSpec, d: &Density, j: &[Vec<f64>]) -> Result<f64> {
    if j.len() != d.a.len() {
        return Err(Error::Config(format!(
            "flux has {} components, model needs {}",
            j.len(),
            d.a.len()
        )));
    }
    let n = d.h.len();
    let mut dens = vec![0.0; n];
    for (a, jd) in d.a.iter().zip(j) {
        if jd.len() != n {
            return Err(Error::Config("flux and state grids differ".into()));
        }
        for k in 0..n {
            dens[k] += a[k] * jd[k] + d.h[k] * jd[k] * jd[k];
        }
    }
    Ok(quadrature(basis, &dens))
}

/// `Σ_d ∂_d j_d` by FFT. Periodic (Fourier) fields only.
pub fn divergence(basis: &BasisSpec, j: &[Vec<f64>]) -> Result<Vec<f64>> {
    if basis.family != Family::Fourier {
        return Err(Error::Unsupported(
            "divergence by FFT needs a periodic basis; use flux_divergence".into(),
        ));
    }
    flux_divergence(basis, j)
}

/// Divergence on either basis; Hermite fluxes are fitted and differentiated
/// through the coefficient recurrence.
pub fn flux_divergence(basis: &BasisSpec, j: &[Vec<f64>]) -> Result<Vec<f64>> {
    if j.len() != basis.dim {
        return Err(Error::Config(format!(
            "flux has {} components on a {}D grid",
            j.len(),
            basis.dim
        )));
    }
    let mut out = vec![0.0; basis.n_points()];
    for (axis, comp) in j.iter().enumerate() {
        let d = spectral_derivative(basis, comp, 1, axis)?;
        for (o, v) in out.iter_mut().zip(d) {
            *o += v;
        }
    }
    Ok(out)
}
