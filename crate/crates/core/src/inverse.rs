//! Recovery of `γ₁` from observed trajectories by golden-section search.

use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::operator::OperatorNet;
use crate::stepper::{evolve, NetFlux, StepOptions};

/// `ρ = (√5 − 1)/2`
pub const RHO: f64 = 0.618_033_988_749_894_9;

/// Misfit assigned when a forward solve fails.
pub const PENALTY: f64 = 1e30;

/// Interval reductions needed to reach `tol`.
pub fn golden_iterations(a: f64, b: f64, tol: f64) -> usize {
    if b - a <= tol {
        return 0;
    }
    (((b - a) / tol).ln() / (1.0 / RHO).ln()).ceil() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenResult {
    /// Midpoint of the final bracket.
    pub argmin: f64,
    /// Smallest sampled value.
    pub min_value: f64,
    pub evaluations: usize,
    /// Every `(x, f(x))` in evaluation order.
    pub samples: Vec<(f64, f64)>,
    pub bracket: [f64; 2],
}

/// Golden-section search on `[a, b]`. Uses exactly
/// `golden_iterations(a, b, tol) + 2` evaluations; unimodality is assumed.
pub fn golden_section_search(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<GoldenResult> {
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(Error::invalid("interval", format!("need a < b, got [{a}, {b}]")));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let n = golden_iterations(a, b, tol);
    let mut samples = Vec::with_capacity(n + 2);
    let mut eval = |x: f64, s: &mut Vec<(f64, f64)>| {
        let v = f(x);
        let v = if v.is_nan() { PENALTY } else { v };
        s.push((x, v));
        v
    };
    let (mut lo, mut hi) = (a, b);
    let mut c = hi - RHO * (hi - lo);
    let mut d = lo + RHO * (hi - lo);
    let mut fc = eval(c, &mut samples);
    let mut fd = eval(d, &mut samples);
    for _ in 0..n {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - RHO * (hi - lo);
            fc = eval(c, &mut samples);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + RHO * (hi - lo);
            fd = eval(d, &mut samples);
        }
    }
    let min_value = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    Ok(GoldenResult {
        argmin: 0.5 * (lo + hi),
        min_value,
        evaluations: samples.len(),
        samples,
        bracket: [lo, hi],
    })
}

/// Observed states `values[n]` at `times[n]` on the grid `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observations {
    pub x: Vec<f64>,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl Observations {
    pub fn validate(&self) -> Result<()> {
        if self.times.is_empty() || self.x.is_empty() {
            return Err(Error::invalid("observations", "no data"));
        }
        if self.times[0].abs() > 1e-12 {
            return Err(Error::invalid("observations", format!("first time is {}, the t = 0 slice is required", self.times[0])));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("observations", "times must increase"));
        }
        if self.values.len() != self.times.len() || self.values.iter().any(|v| v.len() != self.x.len()) {
            return Err(Error::invalid("observations", "every time needs a value at every point"));
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,u\n");
        for (t, row) in self.times.iter().zip(&self.values) {
            for (x, u) in self.x.iter().zip(row) {
                out.push_str(&format!("{t},{x},{u}\n"));
            }
        }
        out
    }
}

fn parse_err(source: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source.to_string(),
        line,
        message: message.into(),
    }
}

/// Reads `t,x,u` rows grouped by time; every time must list the same points
/// in the same order.
pub fn parse_observations_csv(text: &str, source: &str) -> Result<Observations> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(source, 1, e.to_string()))?
        .clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols != ["t", "x", "u"] {
        return Err(parse_err(source, 1, format!("expected header t,x,u, found {}", cols.join(","))));
    }
    let mut times: Vec<f64> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    let mut xs: Vec<Vec<f64>> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(source, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 3 {
            return Err(parse_err(source, line, format!("expected 3 fields, found {}", rec.len())));
        }
        let mut nums = [0.0; 3];
        for (k, field) in rec.iter().enumerate() {
            nums[k] = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(source, line, format!("field {} is not a finite number: {field:?}", k + 1)))?;
        }
        let [t, x, u] = nums;
        match times.last() {
            Some(&last) if t == last => {}
            Some(&last) if t < last => {
                return Err(parse_err(source, line, format!("time {t} after {last}: rows must be grouped by increasing t")));
            }
            _ => {
                times.push(t);
                values.push(Vec::new());
                xs.push(Vec::new());
            }
        }
        values.last_mut().expect("row group").push(u);
        xs.last_mut().expect("row group").push(x);
    }
    if times.is_empty() {
        return Err(parse_err(source, 2, "no data rows"));
    }
    let x = xs[0].clone();
    for (n, row) in xs.iter().enumerate().skip(1) {
        if row.len() != x.len() || row.iter().zip(&x).any(|(a, b)| (a - b).abs() > 1e-9) {
            return Err(parse_err(source, 0, format!("points at t = {} differ from those at t = {}", times[n], times[0])));
        }
    }
    let obs = Observations { x, times, values };
    obs.validate()?;
    Ok(obs)
}

#[derive(Debug, Clone)]
pub struct InversionProblem {
    pub observations: Observations,
    pub interval: [f64; 2],
    pub tol: f64,
    pub dt: f64,
}

/// Sum of squared differences between observations and the network
/// prediction started from the observed `t = 0` slice.
pub fn misfit(gamma1: f64, problem: &InversionProblem, net: &OperatorNet, model: &ModelSpec, basis: &BasisSpec) -> Result<f64> {
    let obs = &problem.observations;
    let grid = basis.axis(0);
    if grid.len() != obs.x.len() || grid.iter().zip(&obs.x).any(|(a, b)| (a - b).abs() > 1e-9) {
        return Err(Error::Config("observation points differ from the model grid".into()));
    }
    let mut steps = Vec::with_capacity(obs.times.len());
    for &t in &obs.times {
        let s = t / problem.dt;
        if (s - s.round()).abs() > 1e-6 {
            return Err(Error::Config(format!("observation time {t} is not a multiple of dt")));
        }
        steps.push(s.round() as usize);
    }
    let mut m = model.clone();
    m.gamma1 = gamma1;
    let mut flux = NetFlux::new(net, basis, Some(gamma1))?;
    let opts = StepOptions {
        every: 1,
        fluxes: false,
        project: Some(basis.truncation),
    };
    let n = *steps.last().expect("observations validated");
    let traj = match evolve(&m, basis, &obs.values[0], &mut flux, problem.dt, n, opts) {
        Ok(t) => t,
        Err(Error::BlowUp { .. }) => return Ok(PENALTY),
        Err(e) => return Err(e),
    };
    let mut s = 0.0;
    for (&k, o) in steps.iter().zip(&obs.values) {
        for (p, q) in traj.states[k].iter().zip(o) {
            s += (p - q) * (p - q);
        }
    }
    Ok(if s.is_finite() { s } else { PENALTY })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionReport {
    pub schema_version: u32,
    pub recovered: f64,
    pub min_misfit: f64,
    pub evaluations: usize,
    pub interval: [f64; 2],
    pub tol: f64,
    /// `(γ₁, misfit)` in evaluation order.
    pub misfit_curve: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_error: Option<f64>,
}

pub fn invert(problem: &InversionProblem, net: &OperatorNet, model: &ModelSpec, basis: &BasisSpec) -> Result<InversionReport> {
    problem.observations.validate()?;
    let [a, b] = problem.interval;
    let mut failure = None;
    let res = golden_section_search(
        |g| match misfit(g, problem, net, model, basis) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                PENALTY
            }
        },
        a,
        b,
        problem.tol,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(InversionReport {
        schema_version: crate::SCHEMA_VERSION,
        recovered: res.argmin,
        min_misfit: res.min_value,
        evaluations: res.evaluations,
        interval: problem.interval,
        tol: problem.tol,
        misfit_curve: res.samples,
        truth: None,
        relative_error: None,
    })
}
