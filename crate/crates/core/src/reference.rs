//! Closed-form solutions and a semi-implicit spectral reference solver.

use serde::{Deserialize, Serialize};

use crate::basis::{fourier_multiply, quadrature, BasisSpec, Family};
use crate::error::{Error, Result};
use crate::models::{ModelName, ModelSpec};
use crate::stepper::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ExactSolution {
    /// `e^{−t} sin x + 2`
    Heat,
    /// `(1 − e^{−t}) sin x + 2`
    HeatSource,
    /// Gaussian started from `N(0, 1)` under the potential `a x²`.
    FokkerPlanck { beta: f64, potential: f64 },
    /// `(1 − t/T) e^{−t} cos x`
    DampedWave { horizon: f64 },
}

impl ExactSolution {
    pub fn from_name(name: &str, model: &ModelSpec, horizon: f64) -> Result<Self> {
        Ok(match name {
            "heat" => Self::Heat,
            "heat_source" => Self::HeatSource,
            "fokker_planck" => Self::FokkerPlanck {
                beta: model.beta,
                potential: model.potential,
            },
            "damped_wave" => Self::DampedWave { horizon },
            other => return Err(Error::Config(format!("no closed-form solution named {other:?}"))),
        })
    }

    /// Closed form for a model, where one exists.
    pub fn for_model(model: &ModelSpec) -> Option<Self> {
        match model.name {
            ModelName::Heat => Some(Self::Heat),
            ModelName::HeatSource => Some(Self::HeatSource),
            ModelName::FokkerPlanck => Some(Self::FokkerPlanck {
                beta: model.beta,
                potential: model.potential,
            }),
            _ => None,
        }
    }

    /// Gaussian variance at time `t`.
    pub fn variance(beta: f64, potential: f64, t: f64) -> f64 {
        let inf = 1.0 / (2.0 * potential * beta);
        inf + (1.0 - inf) * (-4.0 * potential * t).exp()
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        match *self {
            Self::Heat => (-t).exp() * x.sin() + 2.0,
            Self::HeatSource => (1.0 - (-t).exp()) * x.sin() + 2.0,
            Self::FokkerPlanck { beta, potential } => {
                let s2 = Self::variance(beta, potential, t);
                (-x * x / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2).sqrt()
            }
            Self::DampedWave { horizon } => (1.0 - t / horizon) * (-t).exp() * x.cos(),
        }
    }

    /// `∂ₜu` in closed form.
    pub fn time_derivative(&self, x: f64, t: f64) -> f64 {
        match *self {
            Self::Heat => -(-t).exp() * x.sin(),
            Self::HeatSource => (-t).exp() * x.sin(),
            Self::FokkerPlanck { beta, potential } => {
                let s2 = Self::variance(beta, potential, t);
                let inf = 1.0 / (2.0 * potential * beta);
                let ds2 = -4.0 * potential * (1.0 - inf) * (-4.0 * potential * t).exp();
                // ∂u/∂σ² = u (x²/σ² − 1) / (2σ²)
                self.eval(x, t) * (x * x / s2 - 1.0) / (2.0 * s2) * ds2
            }
            Self::DampedWave { horizon } => {
                (-t).exp() * x.cos() * (-1.0 / horizon - (1.0 - t / horizon))
            }
        }
    }

    /// Values on the first coordinate of every grid point.
    pub fn field(&self, basis: &BasisSpec, t: f64) -> Vec<f64> {
        let pts = basis.points();
        (0..pts.rows()).map(|r| self.eval(pts.get(r, 0), t)).collect()
    }

    pub fn rate_field(&self, basis: &BasisSpec, t: f64) -> Vec<f64> {
        let pts = basis.points();
        (0..pts.rows()).map(|r| self.time_derivative(pts.get(r, 0), t)).collect()
    }

    /// Fields at each time.
    pub fn fields(&self, basis: &BasisSpec, times: &[f64]) -> Vec<Vec<f64>> {
        times.iter().map(|&t| self.field(basis, t)).collect()
    }
}

/// First-order semi-implicit Fourier stepping for Cahn–Hilliard and
/// Allen–Cahn: stiff linear part implicit, cubic term explicit.
pub fn reference_solve(
    model: &ModelSpec,
    basis: &BasisSpec,
    u0: &[f64],
    dt: f64,
    n_steps: usize,
    record_every: usize,
) -> Result<Trajectory> {
    if basis.family != Family::Fourier {
        return Err(Error::Unsupported("reference solver needs a periodic grid".into()));
    }
    let conserved = match model.name {
        ModelName::CahnHilliard1d | ModelName::CahnHilliard2d => true,
        ModelName::AllenCahn => false,
        other => {
            return Err(Error::Unsupported(format!(
                "no reference solver for {}; use the closed form",
                other.as_str()
            )))
        }
    };
    if u0.len() != basis.n_points() {
        return Err(Error::Config("initial state does not match the grid".into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("reference.dt", "must be positive"));
    }
    let w = std::f64::consts::PI / basis.half_width;
    let (g1, g2) = (model.gamma1, model.gamma2);
    let k2 = move |m: [i64; 2]| w * w * ((m[0] * m[0] + m[1] * m[1]) as f64);
    // û ← (û − Δt·L_N·N̂) / (1 + Δt·L_u)
    let denom = move |m: [i64; 2]| {
        let q = k2(m);
        if conserved {
            1.0 + dt * g1 * q * q
        } else {
            1.0 + dt * g1 * q
        }
    };
    let every = record_every.max(1);
    let mut traj = Trajectory {
        basis: basis.clone(),
        dt,
        n_steps,
        times: Vec::new(),
        states: Vec::new(),
        fluxes: Vec::new(),
        energies: Vec::with_capacity(n_steps + 1),
        masses: Vec::with_capacity(n_steps + 1),
        warnings: Vec::new(),
    };
    let mut u = u0.to_vec();
    for n in 0..=n_steps {
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Reference(format!(
                "reference solution blew up at step {n}; reduce dt or check parameters"
            )));
        }
        traj.masses.push(quadrature(basis, &u));
        traj.energies.push(model.free_energy(basis, &u)?);
        if n % every == 0 || n == n_steps {
            traj.times.push(n as f64 * dt);
            traj.states.push(u.clone());
        }
        if n == n_steps {
            break;
        }
        let nl: Vec<f64> = u.iter().map(|v| v * v * v - v).collect();
        let a = fourier_multiply(basis, &u, |m, _| (1.0 / denom(m)).into());
        let b = fourier_multiply(basis, &nl, |m, _| {
            let lin = if conserved { k2(m) } else { 1.0 };
            (dt * g2 * lin / denom(m)).into()
        });
        for (v, (x, y)) in u.iter_mut().zip(a.into_iter().zip(b)) {
            *v = x - y;
        }
    }
    Ok(traj)
}

/// One supervised label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Label {
    pub sample_id: usize,
    pub point: Vec<f64>,
    pub t: f64,
    pub u: f64,
}

/// Flattens `fields[sample][time][point]` into labels.
pub fn generate_labels(basis: &BasisSpec, times: &[f64], fields: &[Vec<Vec<f64>>]) -> Result<Vec<Label>> {
    let pts = basis.points();
    let mut out = Vec::new();
    for (s, per_time) in fields.iter().enumerate() {
        if per_time.len() != times.len() {
            return Err(Error::Config(format!("sample {s}: {} fields for {} times", per_time.len(), times.len())));
        }
        for (&t, f) in times.iter().zip(per_time) {
            if f.len() != pts.rows() {
                return Err(Error::Config("label field does not match the grid".into()));
            }
            for (r, &v) in f.iter().enumerate() {
                out.push(Label {
                    sample_id: s,
                    point: pts.row(r).to_vec(),
                    t,
                    u: v,
                });
            }
        }
    }
    Ok(out)
}

/// CSV with header `sample_id, x[, y], t, u`.
pub fn write_labels_csv(path: &std::path::Path, labels: &[Label]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    let dim = labels.first().map_or(1, |l| l.point.len());
    let mut header = vec!["sample_id", "x"];
    if dim == 2 {
        header.push("y");
    }
    header.extend(["t", "u"]);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
    w.write_record(&header).map_err(io)?;
    for l in labels {
        let mut rec = vec![l.sample_id.to_string()];
        rec.extend(l.point.iter().map(|v| v.to_string()));
        rec.push(l.t.to_string());
        rec.push(l.u.to_string());
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
