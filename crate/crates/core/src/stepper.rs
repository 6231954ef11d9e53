//! Forward-Euler evolution driven by a flux map.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use dool_nn::Matrix;
use serde::{Deserialize, Serialize};

use crate::basis::{band_limit, project, quadrature, BasisSpec};
use crate::error::{Error, Result};
use crate::models::{flux_divergence, Kind, ModelName, ModelSpec};
use crate::operator::OperatorNet;

/// A map from the current state to its flux components on the grid.
pub trait FluxMap {
    fn flux(&mut self, u: &[f64]) -> Result<Vec<Vec<f64>>>;
}

/// The pointwise minimizer of the Rayleighian, optionally band-limited.
pub struct AnalyticFlux<'a> {
    pub model: &'a ModelSpec,
    pub basis: &'a BasisSpec,
    pub band: Option<usize>,
}

impl FluxMap for AnalyticFlux<'_> {
    fn flux(&mut self, u: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.model.analytic_flux_banded(self.basis, u, self.band)
    }
}

pub struct ZeroFlux {
    pub dim: usize,
    pub n: usize,
}

impl FluxMap for ZeroFlux {
    fn flux(&mut self, _u: &[f64]) -> Result<Vec<Vec<f64>>> {
        Ok(vec![vec![0.0; self.n]; self.dim])
    }
}

/// A trained operator network. Trunk features are computed once for the
/// grid; each step projects the state and runs only the branch.
pub struct NetFlux<'a> {
    net: &'a OperatorNet,
    basis: BasisSpec,
    trunk: Matrix,
    param: Option<f64>,
}

impl<'a> NetFlux<'a> {
    /// `basis` must carry the truncation the network was trained with; its
    /// grid may differ from the training grid.
    pub fn new(net: &'a OperatorNet, basis: &BasisSpec, param: Option<f64>) -> Result<Self> {
        let expected = if param.is_some() { 2 } else { 1 };
        if net.branches.len() != expected {
            return Err(Error::Config(format!(
                "network has {} branch(es) but {} input(s) were supplied",
                net.branches.len(),
                expected
            )));
        }
        if net.branches[0].input_dim() != basis.branch_width() {
            return Err(Error::Config(format!(
                "network expects {} coefficients, basis provides {}",
                net.branches[0].input_dim(),
                basis.branch_width()
            )));
        }
        if net.trunk.input_dim() != basis.dim || net.flux_dim != basis.dim {
            return Err(Error::Config("network and grid dimensions differ".into()));
        }
        Ok(Self {
            net,
            basis: basis.clone(),
            trunk: net.trunk_features(&basis.points())?,
            param,
        })
    }
}

impl FluxMap for NetFlux<'_> {
    fn flux(&mut self, u: &[f64]) -> Result<Vec<Vec<f64>>> {
        let c = project(&self.basis, u).branch_input(&self.basis);
        let g;
        let mut inputs: Vec<&[f64]> = vec![&c];
        if let Some(p) = self.param {
            g = [p];
            inputs.push(&g);
        }
        let b = self.net.branch_features(&inputs)?;
        Ok(self.net.flux_from_features(&b, &self.trunk))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub basis: BasisSpec,
    pub dt: f64,
    pub n_steps: usize,
    /// Times of the recorded states.
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Flux at each recorded state (empty for reference trajectories).
    pub fluxes: Vec<Vec<Vec<f64>>>,
    /// Free energy at every step `0..=n_steps` (NaN where undefined).
    pub energies: Vec<f64>,
    /// Quadrature of `u` at every step.
    pub masses: Vec<f64>,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has a state")
    }

    /// Recorded states at the given times on a coarser grid whose nodes are
    /// a stride subset of this grid.
    pub fn resample(&self, basis: &BasisSpec, times: &[f64]) -> Result<Vec<Vec<f64>>> {
        let map = stride_map(&self.basis, basis)?;
        times
            .iter()
            .map(|&t| {
                let tol = 1e-9 * self.dt.max(1e-300) + 1e-12;
                let idx = self
                    .times
                    .iter()
                    .position(|&s| (s - t).abs() <= tol)
                    .ok_or_else(|| Error::Config(format!("reference has no state at t = {t}")))?;
                Ok(map.iter().map(|&k| self.states[idx][k]).collect())
            })
            .collect()
    }

    /// Writes `fields.csv`, `energy.csv` and `meta.json`.
    pub fn export(&self, dir: &Path, meta: &serde_json::Value) -> Result<()> {
        fs::create_dir_all(dir)?;
        let pts = self.basis.points();
        let mut w = csv::Writer::from_path(dir.join("fields.csv")).map_err(csv_err)?;
        let mut header = vec!["t".to_string(), "x".into()];
        if self.basis.dim == 2 {
            header.push("y".into());
        }
        header.push("u".into());
        let with_flux = !self.fluxes.is_empty();
        if with_flux {
            for d in 0..self.fluxes[0].len() {
                header.push(format!("j{d}"));
            }
        }
        w.write_record(&header).map_err(csv_err)?;
        for (s, (&t, u)) in self.times.iter().zip(&self.states).enumerate() {
            for r in 0..u.len() {
                let mut rec = vec![t.to_string()];
                rec.extend(pts.row(r).iter().map(|v| v.to_string()));
                rec.push(u[r].to_string());
                if with_flux {
                    rec.extend(self.fluxes[s].iter().map(|j| j[r].to_string()));
                }
                w.write_record(&rec).map_err(csv_err)?;
            }
        }
        w.flush()?;
        let mut e = csv::Writer::from_path(dir.join("energy.csv")).map_err(csv_err)?;
        e.write_record(["t", "energy", "mass"]).map_err(csv_err)?;
        for (n, (en, m)) in self.energies.iter().zip(&self.masses).enumerate() {
            e.write_record([(n as f64 * self.dt).to_string(), en.to_string(), m.to_string()])
                .map_err(csv_err)?;
        }
        e.flush()?;
        let mut obj = serde_json::json!({
            "schema_version": crate::SCHEMA_VERSION,
            "code_version": env!("CARGO_PKG_VERSION"),
            "dt": self.dt,
            "n_steps": self.n_steps,
            "warnings": self.warnings,
        });
        if let (Some(o), Some(m)) = (obj.as_object_mut(), meta.as_object()) {
            for (k, v) in m {
                o.insert(k.clone(), v.clone());
            }
        }
        let mut f = fs::File::create(dir.join("meta.json"))?;
        f.write_all(serde_json::to_string_pretty(&obj).expect("json").as_bytes())?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Indices of the coarse grid nodes inside the fine grid.
pub fn stride_map(fine: &BasisSpec, coarse: &BasisSpec) -> Result<Vec<usize>> {
    let same_domain = (fine.half_width - coarse.half_width).abs() <= 1e-12 * fine.half_width.abs().max(1.0);
    if fine.dim != coarse.dim || !same_domain {
        return Err(Error::Config("grids cover different domains".into()));
    }
    let mut strides = Vec::new();
    for (&f, &c) in fine.grid.iter().zip(&coarse.grid) {
        if c == 0 || f % c != 0 {
            return Err(Error::Config(format!("grid of {c} points is not a stride subset of {f}")));
        }
        strides.push(f / c);
    }
    Ok(if fine.dim == 1 {
        (0..coarse.grid[0]).map(|k| strides[0] * (k + 1) - 1).collect()
    } else {
        let mut out = Vec::with_capacity(coarse.n_points());
        for kx in 0..coarse.grid[0] {
            for ky in 0..coarse.grid[1] {
                out.push((strides[0] * (kx + 1) - 1) * fine.grid[1] + strides[1] * (ky + 1) - 1);
            }
        }
        out
    })
}

/// Recording cadence and state projection for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOptions {
    /// Keep every `every`-th state (the last state is always kept).
    pub every: usize,
    /// Also keep the flux at each kept state.
    pub fluxes: bool,
    /// Truncate the state to this band after every update (and at `t = 0`),
    /// so it stays in the space the flux map reads.
    pub project: Option<usize>,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            every: 1,
            fluxes: false,
            project: None,
        }
    }
}

/// Explicit Euler: `u ← u − Δt ∇·j` (conserved) or `u ← u + Δt j`,
/// optionally followed by truncation to a band.
pub fn evolve(
    model: &ModelSpec,
    basis: &BasisSpec,
    u0: &[f64],
    flux_map: &mut dyn FluxMap,
    dt: f64,
    n_steps: usize,
    rec: StepOptions,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("stepping.dt", "must be positive"));
    }
    if u0.len() != basis.n_points() {
        return Err(Error::Config("initial state does not match the grid".into()));
    }
    let every = rec.every.max(1);
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
    let mut u = match rec.project {
        Some(m) => band_limit(basis, u0, m),
        None => u0.to_vec(),
    };
    let mut energy_warned = false;
    let mut positivity_warned = false;
    for n in 0..=n_steps {
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { step: n });
        }
        if model.name == ModelName::FokkerPlanck && !positivity_warned {
            if let Some(m) = u.iter().map(|v| v + model.shift).reduce(f64::min) {
                if m < -model.eps_u {
                    traj.warnings.push(format!("positivity: min(u + shift) = {m:e} at step {n}"));
                    positivity_warned = true;
                }
            }
        }
        traj.masses.push(quadrature(basis, &u));
        match model.free_energy(basis, &u) {
            Ok(e) => traj.energies.push(e),
            Err(Error::Domain(msg)) => {
                traj.energies.push(f64::NAN);
                if !energy_warned {
                    traj.warnings.push(format!("energy undefined from step {n}: {msg}"));
                    energy_warned = true;
                }
            }
            Err(e) => return Err(e),
        }
        let record = n % every == 0 || n == n_steps;
        if n == n_steps && !rec.fluxes {
            traj.times.push(n as f64 * dt);
            traj.states.push(u.clone());
            break;
        }
        let j = flux_map.flux(&u)?;
        if record {
            traj.times.push(n as f64 * dt);
            traj.states.push(u.clone());
            if rec.fluxes {
                traj.fluxes.push(j.clone());
            }
        }
        if n == n_steps {
            break;
        }
        match model.kind() {
            Kind::Conserved => {
                let div = flux_divergence(basis, &j)?;
                for (v, d) in u.iter_mut().zip(div) {
                    *v -= dt * d;
                }
            }
            Kind::Nonconserved => {
                for (v, d) in u.iter_mut().zip(&j[0]) {
                    *v += dt * d;
                }
            }
        }
        if let Some(m) = rec.project {
            u = band_limit(basis, &u, m);
        }
    }
    Ok(traj)
}

/// `‖pred − ref‖₂ / ‖ref‖₂` over all points of two equally shaped stacks.
pub fn relative_l2(pred: &[Vec<f64>], reference: &[Vec<f64>]) -> Result<f64> {
    if pred.len() != reference.len() || pred.iter().zip(reference).any(|(a, b)| a.len() != b.len()) {
        return Err(Error::Config("prediction and reference shapes differ".into()));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in pred.iter().zip(reference) {
        for (x, y) in a.iter().zip(b) {
            num += (x - y) * (x - y);
            den += y * y;
        }
    }
    if den == 0.0 {
        return Ok(if num == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok((num / den).sqrt())
}

/// Relative space-time error against a (possibly finer) reference trajectory.
pub fn relative_l2_error(traj: &Trajectory, reference: &Trajectory) -> Result<f64> {
    let r = reference.resample(&traj.basis, &traj.times)?;
    relative_l2(&traj.states, &r)
}

/// Relative error at each recorded time.
pub fn error_series(pred: &[Vec<f64>], reference: &[Vec<f64>]) -> Result<Vec<f64>> {
    pred.iter()
        .zip(reference)
        .map(|(a, b)| relative_l2(std::slice::from_ref(a), std::slice::from_ref(b)))
        .collect()
}
