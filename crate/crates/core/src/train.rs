//! Unsupervised Rayleighian training and the supervised baseline.

use std::time::Instant;

use dool_nn::{loss_gradient, AdamConfig, AdamState, Matrix, NetVars, Tape, Var};
use serde::{Deserialize, Serialize};

use crate::basis::{spectral_derivative, synthesize_values, BasisSpec, CoeffVector};
use crate::error::{Error, Result};
use crate::models::{ModelName, ModelSpec};
use crate::operator::{OperatorNet, OperatorVars};

/// Fixed training data: network inputs plus the density coefficients, already
/// multiplied by the quadrature weight and the `1/rows` average.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub points: Matrix,
    pub branch_inputs: Vec<Matrix>,
    /// Per flux component, `rows × n_points`.
    pub a: Vec<Matrix>,
    pub h: Matrix,
    /// Parameter draws per state in two-branch mode (1 otherwise).
    pub per_state: usize,
}

impl TrainingSet {
    /// Single-branch set: one row per sampled state.
    pub fn new(model: &ModelSpec, basis: &BasisSpec, samples: &[CoeffVector]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("sampling.n_samples", "must be at least 1"));
        }
        let rows = samples.len();
        let n = basis.n_points();
        let w = basis.cell() / rows as f64;
        let dim = model.flux_dim();
        let mut a = vec![Matrix::zeros(rows, n); dim];
        let mut h = Matrix::zeros(rows, n);
        let mut inputs = Vec::with_capacity(rows * basis.branch_width());
        for (r, c) in samples.iter().enumerate() {
            let u = synthesize_values(basis, c)?;
            let d = model.density(basis, &u)?;
            for (ad, src) in a.iter_mut().zip(&d.a) {
                for (o, v) in ad.row_mut(r).iter_mut().zip(src) {
                    *o = w * v;
                }
            }
            for (o, v) in h.row_mut(r).iter_mut().zip(&d.h) {
                *o = w * v;
            }
            inputs.extend(c.branch_input(basis));
        }
        Ok(Self {
            points: basis.points(),
            branch_inputs: vec![Matrix::from_vec(rows, basis.branch_width(), inputs)],
            a,
            h,
            per_state: 1,
        })
    }

    /// Two-branch set for the 1D Cahn–Hilliard model with varying `γ₁`:
    /// rows enumerate `(state b, parameter l)` as `b·N_l + l`.
    pub fn with_parameter(
        model: &ModelSpec,
        basis: &BasisSpec,
        samples: &[CoeffVector],
        gammas: &[f64],
    ) -> Result<Self> {
        if model.name != ModelName::CahnHilliard1d {
            return Err(Error::Unsupported(
                "parameter branch is implemented for cahn_hilliard_1d".into(),
            ));
        }
        if samples.is_empty() || gammas.is_empty() {
            return Err(Error::invalid("sampling", "need at least one state and one parameter"));
        }
        let (nb, nl) = (samples.len(), gammas.len());
        let rows = nb * nl;
        let n = basis.n_points();
        let w = basis.cell() / rows as f64;
        let mut a = Matrix::zeros(rows, n);
        let mut inputs = Vec::with_capacity(nb * basis.branch_width());
        for (b, c) in samples.iter().enumerate() {
            let u = synthesize_values(basis, c)?;
            // a = γ₁·(−u_xxx) + γ₂·∂ₓ(u³ − u)
            let uxxx = spectral_derivative(basis, &u, 3, 0)?;
            let cubic: Vec<f64> = u.iter().map(|v| v * v * v - v).collect();
            let dc = spectral_derivative(basis, &cubic, 1, 0)?;
            for (l, &g) in gammas.iter().enumerate() {
                for (k, o) in a.row_mut(b * nl + l).iter_mut().enumerate() {
                    *o = w * (-g * uxxx[k] + model.gamma2 * dc[k]);
                }
            }
            inputs.extend(c.branch_input(basis));
        }
        Ok(Self {
            points: basis.points(),
            branch_inputs: vec![
                Matrix::from_vec(nb, basis.branch_width(), inputs),
                Matrix::column(gammas),
            ],
            a: vec![a],
            h: Matrix::filled(rows, n, 0.5 * w),
            per_state: nl,
        })
    }

    pub fn rows(&self) -> usize {
        self.h.rows()
    }

    /// Loss of the pointwise minimizer `j = −a/(2h)`: the attainable floor.
    pub fn analytic_floor(&self) -> f64 {
        let mut s = 0.0;
        for a in &self.a {
            for (av, hv) in a.as_slice().iter().zip(self.h.as_slice()) {
                s -= av * av / (4.0 * hv);
            }
        }
        s
    }

    /// Loss for explicit flux rows (`rows × n_points` per component).
    pub fn loss_at(&self, j: &[Matrix]) -> f64 {
        let mut s = 0.0;
        for (a, jd) in self.a.iter().zip(j) {
            for ((av, hv), x) in a.as_slice().iter().zip(self.h.as_slice()).zip(jd.as_slice()) {
                s += av * x + hv * x * x;
            }
        }
        s
    }
}

/// The discrete Rayleighian as a tape node; only network outputs depend on θ.
pub fn build_loss_graph(tape: &mut Tape, net: &OperatorNet, vars: &OperatorVars, set: &TrainingSet) -> Var {
    let js = net.flux_graph(tape, vars, &set.branch_inputs, &set.points);
    let mut total: Option<Var> = None;
    for (j, a) in js.into_iter().zip(&set.a) {
        let term = tape.weighted_quadratic(j, a.clone(), set.h.clone());
        total = Some(match total {
            None => term,
            Some(t) => tape.add(t, term),
        });
    }
    total.expect("at least one flux component")
}

fn default_log_every() -> usize {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOptions {
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_log_every")]
    pub log_every: usize,
}

fn default_lr() -> f64 {
    AdamConfig::default().lr
}

impl TrainOptions {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("training.epochs", "must be at least 1"));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::invalid("training.lr", "must be finite and non-negative"));
        }
        if self.log_every == 0 {
            return Err(Error::invalid("training.log_every", "must be at least 1"));
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            ..AdamConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// `(epoch, loss)` pairs; the loss is evaluated before that epoch's update.
    pub loss_history: Vec<(usize, f64)>,
    /// Loss after the last update.
    pub final_loss: f64,
    /// Loss of the analytic flux on the training set (unsupervised runs).
    pub floor: Option<f64>,
    pub epochs: usize,
    pub wall_time: f64,
    pub parameters: usize,
}

fn run<F>(net: &mut OperatorNet, opts: &TrainOptions, mut loss_and_grad: F) -> Result<TrainReport>
where
    F: FnMut(&OperatorNet, usize) -> Result<(f64, Vec<Vec<f64>>)>,
{
    opts.validate()?;
    let start = Instant::now();
    let mut adam = AdamState::new(opts.adam(), &net.nets());
    let mut history = Vec::new();
    for epoch in 0..opts.epochs {
        let (loss, grads) = loss_and_grad(net, epoch)?;
        if epoch % opts.log_every == 0 || epoch + 1 == opts.epochs {
            history.push((epoch, loss));
        }
        adam.step(&mut net.nets_mut(), &grads)?;
    }
    let (final_loss, _) = loss_and_grad(net, opts.epochs)?;
    Ok(TrainReport {
        loss_history: history,
        final_loss,
        floor: None,
        epochs: opts.epochs,
        wall_time: start.elapsed().as_secs_f64(),
        parameters: net.total_count(),
    })
}

fn first_bad_row(net: &OperatorNet, set: &TrainingSet) -> usize {
    let t = match net.trunk_features(&set.points) {
        Ok(t) => t,
        Err(_) => return 0,
    };
    let nl = set.per_state;
    for r in 0..set.rows() {
        let (b, l) = (r / nl, r % nl);
        let mut inputs: Vec<&[f64]> = vec![set.branch_inputs[0].row(b)];
        if set.branch_inputs.len() > 1 {
            inputs.push(set.branch_inputs[1].row(l));
        }
        let Ok(bf) = net.branch_features(&inputs) else { return b };
        let j = net.flux_from_features(&bf, &t);
        let mut s = 0.0;
        for (a, jd) in set.a.iter().zip(&j) {
            for k in 0..jd.len() {
                s += a.get(r, k) * jd[k] + set.h.get(r, k) * jd[k] * jd[k];
            }
        }
        if !s.is_finite() {
            return b;
        }
    }
    0
}

/// Full-batch Adam on the discrete Rayleighian over a fixed sample set.
pub fn train_dool(net: &mut OperatorNet, set: &TrainingSet, opts: &TrainOptions) -> Result<TrainReport> {
    if set.branch_inputs.len() != net.branches.len() {
        return Err(Error::Config("training set and network disagree on branches".into()));
    }
    if set.a.len() != net.flux_dim {
        return Err(Error::Config("training set and network disagree on flux components".into()));
    }
    let mut report = run(net, opts, |net, epoch| {
        let (loss, grads) = loss_gradient(&net.nets(), |tape, vars| {
            let ov = OperatorVars {
                branches: vars[..vars.len() - 1].to_vec(),
                trunk: vars[vars.len() - 1].clone(),
            };
            Ok(build_loss_graph(tape, net, &ov, set))
        })?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                sample: first_bad_row(net, set),
            });
        }
        Ok((loss, grads))
    })?;
    report.floor = Some(set.analytic_floor());
    Ok(report)
}

/// Labeled data for the supervised baseline; the trunk takes `(x, t)`.
#[derive(Debug, Clone)]
pub struct LabeledSet {
    /// `n_functions × branch_width`
    pub branch_inputs: Matrix,
    /// `n_points × 2`, columns `(x, t)`
    pub points: Matrix,
    /// `n_functions × n_points`
    pub targets: Matrix,
}

/// Mean squared misfit `mean((G(u)(x,t) − u*)²)` as a tape node.
pub fn supervised_loss_graph(tape: &mut Tape, net: &OperatorNet, vars: &[NetVars], set: &LabeledSet) -> Var {
    let bi = tape.constant(set.branch_inputs.clone());
    let b = net.branches[0].forward_tape(tape, &vars[0], bi);
    let pi = tape.constant(set.points.clone());
    let t = net.trunk.forward_tape(tape, &vars[1], pi);
    let j = tape.matmul_nt(b, t);
    let n = set.targets.len() as f64;
    let a = set.targets.map(|y| -2.0 * y / n);
    let h = Matrix::filled(set.targets.rows(), set.targets.cols(), 1.0 / n);
    let c = set.targets.as_slice().iter().map(|y| y * y).sum::<f64>() / n;
    let q = tape.weighted_quadratic(j, a, h);
    tape.add_scalar(q, c)
}

/// Mean-squared-error training of a single-branch DeepONet.
pub fn train_supervised(net: &mut OperatorNet, set: &LabeledSet, opts: &TrainOptions) -> Result<TrainReport> {
    if net.branches.len() != 1 || net.flux_dim != 1 {
        return Err(Error::Config("supervised baseline uses one branch and one output".into()));
    }
    if set.points.cols() != net.trunk.input_dim() {
        return Err(Error::Config("trunk input must be (x, t)".into()));
    }
    run(net, opts, |net, epoch| {
        let (loss, grads) =
            loss_gradient(&net.nets(), |tape, vars| Ok(supervised_loss_graph(tape, net, vars, set)))?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, sample: 0 });
        }
        Ok((loss, grads))
    })
}
