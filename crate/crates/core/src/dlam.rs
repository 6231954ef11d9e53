//! Least-action training for the damped wave equation `u_tt + 2λu_t = u_xx`.

use std::f64::consts::PI;
use std::time::Instant;

use dool_nn::{AdamConfig, AdamState, LayerShape, Matrix, NetParams, NetVars, Tape, Var};
use serde::{Deserialize, Serialize};

use crate::config::{Boundary, DlamConfig};
use crate::error::{Error, Result};
use crate::operator::Architecture;
use crate::train::{TrainOptions, TrainReport};

/// A network whose output is mapped so that `u(·, 0) = f` and `u(·, T) = g`
/// hold for every parameter value:
/// `u = sin(πt/T)·y + sin(T − t)/sin T·f(x) + sin t/sin T·g(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ndnn {
    pub core: NetParams,
    pub half_width: f64,
    pub horizon: f64,
    pub lambda: f64,
    pub initial: Boundary,
    pub terminal: Boundary,
}

/// Pointwise coefficients of the output map and their time derivatives.
struct MapCoeffs {
    s: f64,
    ds: f64,
    a: f64,
    da: f64,
    b: f64,
    db: f64,
}

impl Ndnn {
    pub fn new(cfg: &DlamConfig, arch: &Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let core = NetParams::init(&LayerShape::stack(2, arch.width, arch.depth, 1, arch.activation), seed)?;
        Self::from_parts(core, cfg)
    }

    pub fn from_parts(core: NetParams, cfg: &DlamConfig) -> Result<Self> {
        if cfg.horizon.sin().abs() < 1e-8 {
            return Err(Error::invalid("dlam.horizon", "sin(T) must be nonzero"));
        }
        if core.input_dim() != 2 || core.output_dim() != 1 {
            return Err(Error::Config("core network must map (x, t) to one value".into()));
        }
        Ok(Self {
            core,
            half_width: cfg.half_width,
            horizon: cfg.horizon,
            lambda: cfg.lambda,
            initial: cfg.initial,
            terminal: cfg.terminal,
        })
    }

    fn coeffs(&self, t: f64) -> MapCoeffs {
        let big_t = self.horizon;
        let st = big_t.sin();
        let w = PI / big_t;
        MapCoeffs {
            s: (w * t).sin(),
            ds: w * (w * t).cos(),
            a: (big_t - t).sin() / st,
            da: -(big_t - t).cos() / st,
            b: t.sin() / st,
            db: t.cos() / st,
        }
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<f64> {
        let y = self.core.forward(&[x, t])?[0];
        let c = self.coeffs(t);
        Ok(c.s * y + c.a * self.initial.eval(x) + c.b * self.terminal.eval(x))
    }

    /// Records `(u_x, u_t)` at `points` (`n × 2`, columns `x, t`).
    pub fn derivative_graph(&self, tape: &mut Tape, vars: &NetVars, points: &Matrix) -> (Var, Var) {
        let n = points.rows();
        let mut ex = Matrix::zeros(n, 2);
        let mut et = Matrix::zeros(n, 2);
        let (mut s, mut ds) = (Vec::with_capacity(n), Vec::with_capacity(n));
        let (mut cx, mut ct) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for r in 0..n {
            ex.set(r, 0, 1.0);
            et.set(r, 1, 1.0);
            let (x, t) = (points.get(r, 0), points.get(r, 1));
            let c = self.coeffs(t);
            s.push(c.s);
            ds.push(c.ds);
            cx.push(c.a * self.initial.derivative(x) + c.b * self.terminal.derivative(x));
            ct.push(c.da * self.initial.eval(x) + c.db * self.terminal.eval(x));
        }
        let input = tape.constant(points.clone());
        let (y, d) = self.core.forward_tape_with_tangents(tape, vars, input, &[ex, et]);
        let s = tape.constant(Matrix::column(&s));
        let ds = tape.constant(Matrix::column(&ds));
        let cx = tape.constant(Matrix::column(&cx));
        let ct = tape.constant(Matrix::column(&ct));
        let sx = tape.mul(s, d[0]);
        let ux = tape.add(sx, cx);
        let a = tape.mul(ds, y);
        let b = tape.mul(s, d[1]);
        let ab = tape.add(a, b);
        let ut = tape.add(ab, ct);
        (ux, ut)
    }

    /// `(u, u_x, u_t)` at each point without recording parameter gradients.
    pub fn derivatives(&self, points: &Matrix) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let mut tape = Tape::new();
        let vars = self.core.register_frozen(&mut tape);
        let (ux, ut) = self.derivative_graph(&mut tape, &vars, points);
        let u = (0..points.rows())
            .map(|r| self.eval(points.get(r, 0), points.get(r, 1)))
            .collect::<Result<Vec<_>>>()?;
        Ok((u, tape.value(ux).as_slice().to_vec(), tape.value(ut).as_slice().to_vec()))
    }
}

/// Space-time grid `x_l = −I + 2Il/N_x`, `t_k = kT/N_t` (`l, k ≥ 1`), rows
/// ordered time-major.
pub fn action_grid(half_width: f64, horizon: f64, n_x: usize, n_t: usize) -> Matrix {
    let mut data = Vec::with_capacity(n_x * n_t * 2);
    for k in 1..=n_t {
        let t = k as f64 * horizon / n_t as f64;
        for l in 1..=n_x {
            data.push(-half_width + 2.0 * half_width * l as f64 / n_x as f64);
            data.push(t);
        }
    }
    Matrix::from_vec(n_x * n_t, 2, data)
}

/// Rectangle-rule weights `(2IT/(N_x N_t)) e^{2λt}` for [`action_grid`] points.
pub fn action_weights(half_width: f64, horizon: f64, lambda: f64, points: &Matrix, n_x: usize, n_t: usize) -> Matrix {
    let pre = 2.0 * half_width * horizon / (n_x * n_t) as f64;
    let w: Vec<f64> = (0..points.rows())
        .map(|r| pre * (2.0 * lambda * points.get(r, 1)).exp())
        .collect();
    Matrix::column(&w)
}

/// The discrete action of any field given its `(u_x, u_t)` at `(x, t)`.
pub fn field_action(
    half_width: f64,
    horizon: f64,
    lambda: f64,
    n_x: usize,
    n_t: usize,
    grad: impl Fn(f64, f64) -> (f64, f64),
) -> f64 {
    let pts = action_grid(half_width, horizon, n_x, n_t);
    let w = action_weights(half_width, horizon, lambda, &pts, n_x, n_t);
    (0..pts.rows())
        .map(|r| {
            let (ux, ut) = grad(pts.get(r, 0), pts.get(r, 1));
            w.get(r, 0) * (ut * ut - ux * ux)
        })
        .sum()
}

/// `(2IT/(N_x N_t)) Σ e^{2λt}(u_t² − u_x²)` as a tape node.
pub fn action_graph(tape: &mut Tape, ndnn: &Ndnn, vars: &NetVars, points: &Matrix, weights: &Matrix) -> Var {
    let (ux, ut) = ndnn.derivative_graph(tape, vars, points);
    let ut2 = tape.square(ut);
    let ux2 = tape.square(ux);
    let d = tape.sub(ut2, ux2);
    tape.weighted_sum(d, weights.clone())
}

pub fn action_loss(ndnn: &Ndnn, n_x: usize, n_t: usize) -> Result<f64> {
    let pts = action_grid(ndnn.half_width, ndnn.horizon, n_x, n_t);
    let w = action_weights(ndnn.half_width, ndnn.horizon, ndnn.lambda, &pts, n_x, n_t);
    let mut tape = Tape::new();
    let vars = ndnn.core.register_frozen(&mut tape);
    let root = action_graph(&mut tape, ndnn, &vars, &pts, &w);
    Ok(tape.scalar(root))
}

/// Adam on the discrete action over a fixed grid.
pub fn train_dlam(ndnn: &mut Ndnn, n_x: usize, n_t: usize, opts: &TrainOptions) -> Result<TrainReport> {
    opts.validate()?;
    let start = Instant::now();
    let pts = action_grid(ndnn.half_width, ndnn.horizon, n_x, n_t);
    let w = action_weights(ndnn.half_width, ndnn.horizon, ndnn.lambda, &pts, n_x, n_t);
    let mut adam = AdamState::new(
        AdamConfig {
            lr: opts.lr,
            ..AdamConfig::default()
        },
        &[&ndnn.core],
    );
    let mut history = Vec::new();
    for epoch in 0..opts.epochs {
        let snapshot = ndnn.clone();
        let (loss, grads) = dool_nn::loss_gradient(&[&snapshot.core], |tape, vars| {
            Ok(action_graph(tape, &snapshot, &vars[0], &pts, &w))
        })?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, sample: 0 });
        }
        if epoch % opts.log_every == 0 || epoch + 1 == opts.epochs {
            history.push((epoch, loss));
        }
        adam.step(&mut [&mut ndnn.core], &grads)?;
    }
    Ok(TrainReport {
        loss_history: history,
        final_loss: action_loss(ndnn, n_x, n_t)?,
        floor: None,
        epochs: opts.epochs,
        wall_time: start.elapsed().as_secs_f64(),
        parameters: ndnn.core.total_count(),
    })
}

/// Solution on a test grid including `t = 0`: `u[k][l]` at
/// `t_k = kT/n_t` (`k = 0..=n_t`) and `x_l = −I + 2Il/n_x` (`l = 1..=n_x`).
pub fn solution_field(ndnn: &Ndnn, n_x: usize, n_t: usize) -> Result<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>)> {
    let xs: Vec<f64> = (1..=n_x)
        .map(|l| -ndnn.half_width + 2.0 * ndnn.half_width * l as f64 / n_x as f64)
        .collect();
    let ts: Vec<f64> = (0..=n_t).map(|k| k as f64 * ndnn.horizon / n_t as f64).collect();
    let u = ts
        .iter()
        .map(|&t| xs.iter().map(|&x| ndnn.eval(x, t)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok((xs, ts, u))
}

/// `½∫(u_t² + u_x²)dx` at each of `times`.
pub fn wave_energy(ndnn: &Ndnn, n_x: usize, times: &[f64]) -> Result<Vec<f64>> {
    let dx = 2.0 * ndnn.half_width / n_x as f64;
    times
        .iter()
        .map(|&t| {
            let mut data = Vec::with_capacity(2 * n_x);
            for l in 1..=n_x {
                data.push(-ndnn.half_width + l as f64 * dx);
                data.push(t);
            }
            let (_, ux, ut) = ndnn.derivatives(&Matrix::from_vec(n_x, 2, data))?;
            Ok(0.5 * dx * ux.iter().zip(&ut).map(|(a, b)| a * a + b * b).sum::<f64>())
        })
        .collect()
}
