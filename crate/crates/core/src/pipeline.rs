//! End-to-end steps shared by the command line and the acceptance suite.

use std::path::Path;

use serde::{Deserialize, Serialize};

use dool_nn::Matrix;

use crate::basis::{project, sample_coefficients, synthesize_values, BasisSpec, CoeffVector};
use crate::config::{CompareConfig, ExperimentConfig, FluxSource, InitialCondition, InversionConfig, ReferenceKind};
use crate::dlam::{action_loss, solution_field, train_dlam, wave_energy, Ndnn};
use crate::error::{Error, Result};
use crate::inverse::{invert, InversionProblem, InversionReport, Observations};
use crate::models::ModelSpec;
use crate::operator::OperatorNet;
use crate::reference::{reference_solve, ExactSolution};
use crate::stepper::{error_series, evolve, relative_l2, AnalyticFlux, NetFlux, StepOptions, Trajectory};
use crate::train::{train_dool, train_supervised, LabeledSet, TrainOptions, TrainReport, TrainingSet};
use crate::SCHEMA_VERSION;

/// A trained network together with the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub net: OperatorNet,
}

impl Checkpoint {
    pub fn new(config: ExperimentConfig, net: OperatorNet) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config,
            net,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    /// Parses and checks version, configuration and network shapes.
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("checkpoint: {e}")))?;
        if c.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid("schema_version", format!("unsupported checkpoint version {}", c.schema_version)));
        }
        c.config.validate()?;
        c.net.validate()?;
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read checkpoint {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// The fixed training states for a configuration.
pub fn training_samples(cfg: &ExperimentConfig) -> Result<Vec<CoeffVector>> {
    let model = cfg.model()?;
    let basis = cfg.basis()?;
    let s = cfg
        .sampling
        .as_ref()
        .ok_or_else(|| Error::invalid("sampling", "section is required"))?;
    sample_coefficients(basis, &s.spec(basis, model.shift), s.n_samples, cfg.seed)
}

pub fn training_set(cfg: &ExperimentConfig) -> Result<TrainingSet> {
    let samples = training_samples(cfg)?;
    let model = cfg.model()?;
    let basis = cfg.basis()?;
    match &cfg.parameter {
        None => TrainingSet::new(model, basis, &samples),
        Some(p) => TrainingSet::with_parameter(model, basis, &samples, &p.values()),
    }
}

pub fn new_network(cfg: &ExperimentConfig) -> Result<OperatorNet> {
    let model = cfg.model()?;
    let basis = cfg.basis()?;
    let mut inputs = vec![basis.branch_width()];
    if cfg.parameter.is_some() {
        inputs.push(1);
    }
    OperatorNet::new(&cfg.net, &inputs, basis.dim, model.flux_dim(), cfg.seed)
}

pub fn train(cfg: &ExperimentConfig) -> Result<(OperatorNet, TrainReport)> {
    cfg.validate()?;
    let set = training_set(cfg)?;
    let mut net = new_network(cfg)?;
    let report = train_dool(&mut net, &set, &cfg.training)?;
    Ok((net, report))
}

/// The training basis moved onto the evaluation grid.
pub fn test_basis(cfg: &ExperimentConfig) -> Result<BasisSpec> {
    Ok(cfg.basis()?.with_grid(cfg.stepping()?.test_grid))
}

/// The model with the second-branch parameter applied.
pub fn model_at(cfg: &ExperimentConfig, parameter: Option<f64>) -> Result<ModelSpec> {
    let mut m = cfg.model()?.clone();
    if let Some(g) = parameter {
        m.gamma1 = g;
    }
    Ok(m)
}

/// Options for one forward solve.
#[derive(Debug, Clone)]
pub struct SolveRequest {
    pub initial: String,
    pub dt: f64,
    pub t_end: f64,
    pub parameter: Option<f64>,
    pub flux: FluxSource,
    pub record_every: usize,
    pub fluxes: bool,
}

impl SolveRequest {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let st = cfg.stepping()?;
        Ok(Self {
            initial: st.initial.clone(),
            dt: st.dt,
            t_end: st.t_end,
            parameter: st.parameter,
            flux: st.flux,
            record_every: st.record_every,
            fluxes: false,
        })
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Forward solve on the evaluation grid.
pub fn solve(cfg: &ExperimentConfig, net: Option<&OperatorNet>, req: &SolveRequest) -> Result<Trajectory> {
    let basis = test_basis(cfg)?;
    let model = model_at(cfg, req.parameter)?;
    let u0 = InitialCondition::parse(&req.initial)?.values(&basis)?;
    let mut rec = StepOptions {
        every: req.record_every,
        fluxes: req.fluxes,
        project: None,
    };
    match req.flux {
        FluxSource::Analytic => {
            let band = Some(cfg.stepping()?.band.unwrap_or(basis.truncation));
            rec.project = band;
            let mut f = AnalyticFlux {
                model: &model,
                basis: &basis,
                band,
            };
            evolve(&model, &basis, &u0, &mut f, req.dt, req.n_steps(), rec)
        }
        FluxSource::Net => {
            rec.project = Some(basis.truncation);
            let net = net.ok_or_else(|| Error::Config("network flux requested without a checkpoint".into()))?;
            let param = if net.branches.len() == 2 {
                Some(req.parameter.ok_or_else(|| Error::invalid("stepping.parameter", "two-branch network needs a parameter"))?)
            } else {
                None
            };
            let mut f = NetFlux::new(net, &basis, param)?;
            evolve(&model, &basis, &u0, &mut f, req.dt, req.n_steps(), rec)
        }
    }
}

/// Reference states at the given times on `basis`.
pub fn reference_states(
    cfg: &ExperimentConfig,
    initial: &str,
    parameter: Option<f64>,
    basis: &BasisSpec,
    times: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let model = model_at(cfg, parameter)?;
    let r = cfg
        .reference
        .as_ref()
        .ok_or_else(|| Error::invalid("reference", "section is required for evaluation"))?;
    match r.kind {
        ReferenceKind::Exact => {
            let ex = ExactSolution::for_model(&model)
                .ok_or_else(|| Error::Config(format!("{} has no closed form", model.name.as_str())))?;
            if InitialCondition::parse(initial)? != InitialCondition::Preset(exact_ic(&model)) {
                return Err(Error::Config("the closed form applies only to its own initial condition".into()));
            }
            Ok(ex.fields(basis, times))
        }
        ReferenceKind::Solver => {
            let fine = basis.with_grid(r.grid);
            let u0 = InitialCondition::parse(initial)?.values(&fine)?;
            let t_end = times.iter().cloned().fold(0.0, f64::max);
            let n = (t_end / r.dt).round() as usize;
            let traj = reference_solve(&model, &fine, &u0, r.dt, n, 1)?;
            traj.resample(basis, times)
        }
    }
}

fn exact_ic(model: &ModelSpec) -> String {
    match model.name {
        crate::models::ModelName::Heat => "heat",
        crate::models::ModelName::HeatSource => "heat_source",
        _ => "fp",
    }
    .to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub schema_version: u32,
    pub relative_l2: f64,
    /// Relative error at each recorded time.
    pub per_time: Vec<(f64, f64)>,
    /// Relative flux error against the closed form's analytic flux.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux_relative_l2: Option<f64>,
}

/// Compares a trajectory with the configured reference.
pub fn evaluate(cfg: &ExperimentConfig, traj: &Trajectory, initial: &str, parameter: Option<f64>) -> Result<Metrics> {
    let reference = reference_states(cfg, initial, parameter, &traj.basis, &traj.times)?;
    let per = error_series(&traj.states, &reference)?;
    let mut flux_err = None;
    if !traj.fluxes.is_empty() && cfg.reference.as_ref().map(|r| r.kind) == Some(ReferenceKind::Exact) {
        let model = model_at(cfg, parameter)?;
        let mut pred = Vec::new();
        let mut exact = Vec::new();
        for (j, u) in traj.fluxes.iter().zip(&reference) {
            pred.extend(j.iter().cloned());
            exact.extend(model.analytic_flux(&traj.basis, u)?);
        }
        flux_err = Some(relative_l2(&pred, &exact)?);
    }
    Ok(Metrics {
        schema_version: SCHEMA_VERSION,
        relative_l2: relative_l2(&traj.states, &reference)?,
        per_time: traj.times.iter().cloned().zip(per).collect(),
        flux_relative_l2: flux_err,
    })
}

/// `{config, seed, code version}` for `meta.json`.
pub fn meta(cfg: &ExperimentConfig) -> serde_json::Value {
    serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "code_version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "config": cfg,
    })
}

/// Evenly spaced times `0, t_end/n, …, t_end`.
pub fn time_grid(t_end: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| k as f64 * t_end / n as f64).collect()
}

/// Per-time relative errors pooled over the times up to `horizon`.
fn horizon_error(times: &[f64], pred: &[Vec<f64>], reference: &[Vec<f64>], horizon: f64) -> Result<f64> {
    let n = times.iter().take_while(|&&t| t <= horizon + 1e-9).count();
    relative_l2(&pred[..n], &reference[..n])
}

fn compare_section(cfg: &ExperimentConfig) -> Result<&CompareConfig> {
    cfg.compare
        .as_ref()
        .ok_or_else(|| Error::invalid("compare", "section is required"))
}

/// Reference-solver labels for the supervised baseline.
pub fn baseline_labels(cfg: &ExperimentConfig) -> Result<LabeledSet> {
    let c = compare_section(cfg)?;
    let basis = cfg.basis()?;
    let model = cfg.model()?;
    let r = cfg
        .reference
        .as_ref()
        .ok_or_else(|| Error::invalid("reference", "section is required"))?;
    let label_basis = basis.with_grid(c.label_grid);
    let fine = basis.with_grid(r.grid);
    let times = time_grid(c.train_t_end, c.n_t);
    let samples: Vec<CoeffVector> = training_samples(cfg)?.into_iter().take(c.n_functions).collect();
    if samples.len() < c.n_functions {
        return Err(Error::invalid("compare.n_functions", "exceeds sampling.n_samples"));
    }
    let label_pts = label_basis.points();
    let n_pts = label_pts.rows() * times.len();
    let mut points = Vec::with_capacity(2 * n_pts);
    for &t in &times {
        for r in 0..label_pts.rows() {
            points.push(label_pts.get(r, 0));
            points.push(t);
        }
    }
    let mut branch = Vec::new();
    let mut targets = Vec::with_capacity(samples.len() * n_pts);
    let steps = (c.train_t_end / r.dt).round() as usize;
    for s in &samples {
        branch.extend(s.branch_input(basis));
        let u0 = synthesize_values(&fine, s)?;
        let traj = reference_solve(model, &fine, &u0, r.dt, steps, 1)?;
        for f in traj.resample(&label_basis, &times)? {
            targets.extend(f);
        }
    }
    Ok(LabeledSet {
        branch_inputs: Matrix::from_vec(samples.len(), basis.branch_width(), branch),
        points: Matrix::from_vec(n_pts, 2, points),
        targets: Matrix::from_vec(samples.len(), n_pts, targets),
    })
}

/// Trains the supervised DeepONet baseline with a `(x, t)` trunk.
pub fn train_baseline(cfg: &ExperimentConfig) -> Result<(OperatorNet, TrainReport)> {
    let c = compare_section(cfg)?;
    let basis = cfg.basis()?;
    if basis.dim != 1 {
        return Err(Error::Config("the baseline comparison is one-dimensional".into()));
    }
    let set = baseline_labels(cfg)?;
    let mut net = OperatorNet::new(&cfg.net, &[basis.branch_width()], 2, 1, cfg.seed)?;
    let opts = TrainOptions {
        epochs: c.epochs,
        ..cfg.training.clone()
    };
    let report = train_supervised(&mut net, &set, &opts)?;
    Ok((net, report))
}

/// Baseline prediction at `times` on the points of `basis`.
pub fn baseline_states(net: &OperatorNet, train_basis: &BasisSpec, basis: &BasisSpec, u0: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>> {
    let input = project(train_basis, &u0_on(train_basis, basis, u0)?).branch_input(train_basis);
    let b = net.branch_features(&[&input])?;
    let xs = basis.axis(0);
    times
        .iter()
        .map(|&t| {
            let pts = Matrix::from_vec(xs.len(), 2, xs.iter().flat_map(|&x| [x, t]).collect());
            let trunk = net.trunk_features(&pts)?;
            Ok(net.flux_from_features(&b, &trunk).swap_remove(0))
        })
        .collect()
}

/// `u0` sampled on the training grid (a stride subset of `basis`).
fn u0_on(train_basis: &BasisSpec, basis: &BasisSpec, u0: &[f64]) -> Result<Vec<f64>> {
    if train_basis.n_points() == basis.n_points() {
        return Ok(u0.to_vec());
    }
    let map = crate::stepper::stride_map(basis, train_basis)?;
    Ok(map.iter().map(|&k| u0[k]).collect())
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub initial: String,
    /// `(horizon, DOOL error, baseline error)`
    pub errors: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub schema_version: u32,
    pub horizons: Vec<f64>,
    pub rows: Vec<CompareRow>,
    pub dool_train: TrainReport,
    pub baseline_train: TrainReport,
}

impl CompareReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("initial");
        for h in &self.horizons {
            out.push_str(&format!(",dool_t{h},deeponet_t{h}"));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.initial);
            for (_, d, b) in &r.errors {
                out.push_str(&format!(",{d},{b}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Errors of both networks against the reference solver for every test
/// initial condition, on the training interval and each configured horizon.
pub fn compare(
    cfg: &ExperimentConfig,
    dool: (&OperatorNet, &TrainReport),
    baseline: (&OperatorNet, &TrainReport),
) -> Result<CompareReport> {
    let c = compare_section(cfg)?;
    let st = cfg.stepping()?;
    let train_basis = cfg.basis()?;
    let basis = test_basis(cfg)?;
    let mut horizons = vec![c.train_t_end];
    horizons.extend(c.horizons.iter().cloned().filter(|&h| h > c.train_t_end));
    let t_max = horizons.iter().cloned().fold(0.0, f64::max);
    let every = ((0.01 / st.dt).round() as usize).max(1);
    let mut rows = Vec::with_capacity(c.test_ics.len());
    for ic in &c.test_ics {
        let req = SolveRequest {
            initial: ic.clone(),
            dt: st.dt,
            t_end: t_max,
            parameter: None,
            flux: FluxSource::Net,
            record_every: every,
            fluxes: false,
        };
        let traj = solve(cfg, Some(dool.0), &req)?;
        let reference = reference_states(cfg, ic, None, &basis, &traj.times)?;
        let u0 = InitialCondition::parse(ic)?.values(&basis)?;
        let base = baseline_states(baseline.0, train_basis, &basis, &u0, &traj.times)?;
        let errors = horizons
            .iter()
            .map(|&h| {
                Ok((
                    h,
                    horizon_error(&traj.times, &traj.states, &reference, h)?,
                    horizon_error(&traj.times, &base, &reference, h)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(CompareRow {
            initial: ic.clone(),
            errors,
        });
    }
    Ok(CompareReport {
        schema_version: SCHEMA_VERSION,
        horizons,
        rows,
        dool_train: dool.1.clone(),
        baseline_train: baseline.1.clone(),
    })
}

fn inversion_section(cfg: &ExperimentConfig) -> Result<&InversionConfig> {
    cfg.inversion
        .as_ref()
        .ok_or_else(|| Error::invalid("inversion", "section is required"))
}

/// Reference-solver observations at `gamma1` on the observation grid.
pub fn synthesize_observations(cfg: &ExperimentConfig, gamma1: f64) -> Result<Observations> {
    let inv = inversion_section(cfg)?;
    let st = cfg.stepping()?;
    let obs_basis = cfg.basis()?.with_grid(inv.obs_grid);
    let times = time_grid(inv.t_end, inv.obs_times);
    let values = reference_states(cfg, &st.initial, Some(gamma1), &obs_basis, &times)?;
    Ok(Observations {
        x: obs_basis.axis(0),
        times,
        values,
    })
}

/// Golden-section recovery of `γ₁` from observations.
pub fn run_inversion(cfg: &ExperimentConfig, net: &OperatorNet, observations: Observations, truth: Option<f64>) -> Result<InversionReport> {
    let inv = inversion_section(cfg)?;
    if net.branches.len() != 2 {
        return Err(Error::Config("inversion needs a two-branch network".into()));
    }
    let basis = cfg.basis()?.with_grid(observations.x.len());
    let problem = InversionProblem {
        observations,
        interval: inv.interval,
        tol: inv.tol,
        dt: cfg.stepping()?.dt,
    };
    let mut report = invert(&problem, net, cfg.model()?, &basis)?;
    if let Some(g) = truth {
        report.truth = Some(g);
        report.relative_error = Some((report.recovered - g).abs() / g.abs());
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DlamMetrics {
    pub schema_version: u32,
    pub relative_l2: f64,
    /// Largest `|u(x, 0) − f(x)|` on the test grid.
    pub initial_error: f64,
    /// Largest `|u(x, T) − g(x)|` on the test grid.
    pub terminal_error: f64,
    /// Largest relative energy increase between consecutive test times.
    pub energy_increase: f64,
    pub final_action: f64,
}

/// The least-action network for a configuration, trained.
pub fn train_least_action(cfg: &ExperimentConfig) -> Result<(Ndnn, TrainReport)> {
    cfg.validate()?;
    let d = cfg
        .dlam
        .as_ref()
        .ok_or_else(|| Error::invalid("dlam", "section is required"))?;
    let mut ndnn = Ndnn::new(d, &cfg.net, cfg.seed)?;
    let report = train_dlam(&mut ndnn, d.n_x, d.n_t, &cfg.training)?;
    Ok((ndnn, report))
}

/// Test-grid errors against `(1 − t/T) e^{−t} cos x` and the boundary data.
pub fn dlam_metrics(cfg: &ExperimentConfig, ndnn: &Ndnn) -> Result<DlamMetrics> {
    let d = cfg
        .dlam
        .as_ref()
        .ok_or_else(|| Error::invalid("dlam", "section is required"))?;
    let (xs, ts, u) = solution_field(ndnn, d.test_n_x, d.test_n_t)?;
    let exact = ExactSolution::DampedWave { horizon: d.horizon };
    let reference: Vec<Vec<f64>> = ts
        .iter()
        .map(|&t| xs.iter().map(|&x| exact.eval(x, t)).collect())
        .collect();
    let edge = |row: &[f64], b: &crate::config::Boundary| {
        row.iter().zip(&xs).map(|(v, &x)| (v - b.eval(x)).abs()).fold(0.0, f64::max)
    };
    let energy = wave_energy(ndnn, d.test_n_x, &ts)?;
    let energy_increase = energy
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0].abs().max(1e-300))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(DlamMetrics {
        schema_version: SCHEMA_VERSION,
        relative_l2: relative_l2(&u, &reference)?,
        initial_error: edge(&u[0], &d.initial),
        terminal_error: edge(u.last().expect("test times"), &d.terminal),
        energy_increase,
        final_action: action_loss(ndnn, d.n_x, d.n_t)?,
    })
}
