//! Declarative experiment configuration and the shipped presets.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::basis::{synthesize_values, BasisSpec, CoeffVector, SamplingSpec};
use crate::error::{Error, Result};
use crate::models::{ModelName, ModelSpec};
use crate::operator::Architecture;
use crate::train::TrainOptions;
use crate::SCHEMA_VERSION;
use dool_nn::Activation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub n_samples: usize,
    /// Center of the zero mode.
    pub background: f64,
    /// Half-width of the zero-mode rectangle; mode `k` gets `r0·2^{−|k|}`.
    pub r0: f64,
    #[serde(default)]
    pub positivity_floor: f64,
    #[serde(default = "default_retries")]
    pub max_retries: usize,
}

fn default_retries() -> usize {
    1000
}

impl SamplingConfig {
    pub fn spec(&self, basis: &BasisSpec, shift: f64) -> SamplingSpec {
        let mut s = SamplingSpec::geometric(basis, self.background, self.r0);
        s.positivity_floor = self.positivity_floor;
        s.shift = shift;
        s.max_retries = self.max_retries;
        s
    }
}

/// Second-branch parameter draws (`γ₁`), evenly spaced on `[min, max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterConfig {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl ParameterConfig {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![0.5 * (self.min + self.max)];
        }
        (0..self.count)
            .map(|l| self.min + (self.max - self.min) * l as f64 / (self.count - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FluxSource {
    Net,
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteppingConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Points per axis of the evaluation grid.
    pub test_grid: usize,
    /// Initial condition spec (see [`InitialCondition::parse`]).
    pub initial: String,
    #[serde(default = "default_flux")]
    pub flux: FluxSource,
    /// Band limit for the analytic flux; the basis truncation when unset.
    #[serde(default)]
    pub band: Option<usize>,
    #[serde(default = "default_every")]
    pub record_every: usize,
    /// Value of the second-branch parameter while stepping.
    #[serde(default)]
    pub parameter: Option<f64>,
}

fn default_flux() -> FluxSource {
    FluxSource::Net
}

fn default_every() -> usize {
    1
}

impl SteppingConfig {
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceKind {
    Exact,
    Solver,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub kind: ReferenceKind,
    /// Solver grid per axis (a multiple of the test grid).
    #[serde(default = "default_ref_grid")]
    pub grid: usize,
    #[serde(default = "default_ref_dt")]
    pub dt: f64,
}

fn default_ref_grid() -> usize {
    1024
}

fn default_ref_dt() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InversionConfig {
    /// Search interval `Γ`.
    pub interval: [f64; 2],
    pub tol: f64,
    /// Parameters used to synthesize observations when none are supplied.
    #[serde(default)]
    pub truths: Vec<f64>,
    /// Observation grid points and number of time intervals.
    pub obs_grid: usize,
    pub obs_times: usize,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    /// Horizon of the supervised training labels.
    pub train_t_end: f64,
    /// Label time intervals on `[0, train_t_end]`.
    pub n_t: usize,
    /// Number of labeled training functions.
    pub n_functions: usize,
    /// Points of the label grid.
    pub label_grid: usize,
    pub epochs: usize,
    /// Test initial conditions.
    pub test_ics: Vec<String>,
    /// Evaluation horizons, e.g. the training interval and an extrapolation.
    pub horizons: Vec<f64>,
}

/// Boundary data for the least-action problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Zero,
    Cos,
    Sin,
    Constant(f64),
}

impl Boundary {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Boundary::Zero => 0.0,
            Boundary::Cos => x.cos(),
            Boundary::Sin => x.sin(),
            Boundary::Constant(c) => c,
        }
    }

    /// `d/dx`
    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            Boundary::Zero | Boundary::Constant(_) => 0.0,
            Boundary::Cos => -x.sin(),
            Boundary::Sin => x.cos(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DlamConfig {
    pub half_width: f64,
    pub horizon: f64,
    pub n_x: usize,
    pub n_t: usize,
    /// Damping rate `λ`: the equation is `u_tt + 2λu_t = u_xx`.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    pub initial: Boundary,
    pub terminal: Boundary,
    pub test_n_x: usize,
    pub test_n_t: usize,
}

fn default_lambda() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<BasisSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameter: Option<ParameterConfig>,
    pub net: Architecture,
    pub training: TrainOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stepping: Option<SteppingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inversion: Option<InversionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dlam: Option<DlamConfig>,
    pub output: OutputConfig,
}

fn need<'a, T>(v: &'a Option<T>, field: &str) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| Error::invalid(field, "section is required for this experiment"))
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn is_dlam(&self) -> bool {
        self.dlam.is_some()
    }

    pub fn model(&self) -> Result<&ModelSpec> {
        need(&self.model, "model")
    }

    pub fn basis(&self) -> Result<&BasisSpec> {
        need(&self.basis, "basis")
    }

    pub fn stepping(&self) -> Result<&SteppingConfig> {
        need(&self.stepping, "stepping")
    }

    /// Checks every section; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        if self.name.trim().is_empty() {
            return Err(Error::invalid("name", "must not be empty"));
        }
        self.net.validate()?;
        self.training.validate()?;
        if self.output.dir.trim().is_empty() {
            return Err(Error::invalid("output.dir", "must not be empty"));
        }
        if let Some(d) = &self.dlam {
            positive("dlam.half_width", d.half_width)?;
            positive("dlam.horizon", d.horizon)?;
            positive("dlam.lambda", d.lambda)?;
            if d.horizon.sin().abs() < 1e-8 {
                return Err(Error::invalid("dlam.horizon", "sin(T) must be nonzero"));
            }
            for (f, n) in [("dlam.n_x", d.n_x), ("dlam.n_t", d.n_t), ("dlam.test_n_x", d.test_n_x), ("dlam.test_n_t", d.test_n_t)] {
                if n < 2 {
                    return Err(Error::invalid(f, "must be at least 2"));
                }
            }
            return Ok(());
        }
        let model = self.model()?;
        let basis = self.basis()?;
        basis.validate()?;
        model.validate(basis)?;
        let s = need(&self.sampling, "sampling")?;
        if s.n_samples == 0 {
            return Err(Error::invalid("sampling.n_samples", "must be at least 1"));
        }
        if !(s.r0 >= 0.0 && s.r0.is_finite()) {
            return Err(Error::invalid("sampling.r0", "must be finite and non-negative"));
        }
        if !s.background.is_finite() {
            return Err(Error::invalid("sampling.background", "must be finite"));
        }
        if !(s.positivity_floor >= 0.0 && s.positivity_floor.is_finite()) {
            return Err(Error::invalid("sampling.positivity_floor", "must be non-negative"));
        }
        if let Some(p) = &self.parameter {
            if !(p.min.is_finite() && p.max.is_finite() && p.min <= p.max) {
                return Err(Error::invalid("parameter", "need finite min <= max"));
            }
            if p.count == 0 {
                return Err(Error::invalid("parameter.count", "must be at least 1"));
            }
            if model.name != ModelName::CahnHilliard1d {
                return Err(Error::invalid("parameter", "only cahn_hilliard_1d has a parameter branch"));
            }
        }
        let st = self.stepping()?;
        positive("stepping.dt", st.dt)?;
        positive("stepping.t_end", st.t_end)?;
        if st.test_grid <= 2 * basis.truncation {
            return Err(Error::invalid("stepping.test_grid", "must exceed twice the truncation"));
        }
        if st.record_every == 0 {
            return Err(Error::invalid("stepping.record_every", "must be at least 1"));
        }
        if st.parameter.is_some_and(|g| !g.is_finite()) {
            return Err(Error::invalid("stepping.parameter", "must be finite"));
        }
        if self.parameter.is_some() && st.parameter.is_none() && st.flux == FluxSource::Net {
            return Err(Error::invalid("stepping.parameter", "required for a two-branch network"));
        }
        InitialCondition::parse(&st.initial)?;
        if let Some(r) = &self.reference {
            positive("reference.dt", r.dt)?;
            if r.kind == ReferenceKind::Solver && (r.grid == 0 || r.grid % st.test_grid != 0) {
                return Err(Error::invalid("reference.grid", "must be a multiple of stepping.test_grid"));
            }
        }
        if let Some(inv) = &self.inversion {
            let [a, b] = inv.interval;
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::invalid("inversion.interval", format!("need min < max, got [{a}, {b}]")));
            }
            positive("inversion.tol", inv.tol)?;
            if inv.truths.iter().any(|g| !g.is_finite()) {
                return Err(Error::invalid("inversion.truths", "must be finite"));
            }
            positive("inversion.t_end", inv.t_end)?;
            if inv.obs_grid == 0 || inv.obs_times == 0 {
                return Err(Error::invalid("inversion.obs_grid", "observation grid must be non-empty"));
            }
            if self.parameter.is_none() {
                return Err(Error::invalid("parameter", "inversion needs a two-branch network"));
            }
        }
        if let Some(c) = &self.compare {
            positive("compare.train_t_end", c.train_t_end)?;
            if c.n_t == 0 || c.n_functions == 0 || c.label_grid == 0 || c.epochs == 0 {
                return Err(Error::invalid("compare", "counts must be at least 1"));
            }
            if c.test_ics.is_empty() {
                return Err(Error::invalid("compare.test_ics", "need at least one initial condition"));
            }
            for ic in &c.test_ics {
                InitialCondition::parse(ic)?;
            }
            if c.horizons.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
                return Err(Error::invalid("compare.horizons", "must be positive"));
            }
        }
        Ok(())
    }
}

/// An initial state: a named shape or explicit coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Preset(String),
    Coefficients(Vec<[f64; 2]>),
}

pub const IC_PRESETS: &[&str] = &[
    "heat", "heat_source", "fp", "ch1d", "ch2d", "ac", "test1", "test2", "test3", "test4", "test5",
];

impl InitialCondition {
    /// `preset:<name>` or a JSON list of `[re, im]` pairs, one per stored mode.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if let Some(name) = spec.strip_prefix("preset:") {
            if !IC_PRESETS.contains(&name) {
                return Err(Error::invalid(
                    "initial",
                    format!("unknown preset {name:?}; known: {}", IC_PRESETS.join(", ")),
                ));
            }
            return Ok(Self::Preset(name.to_string()));
        }
        if spec.starts_with('[') {
            return Ok(Self::Coefficients(parse_coefficients(spec)?));
        }
        Err(Error::invalid("initial", "expected preset:<name> or a JSON coefficient list"))
    }

    /// Grid values on `basis`.
    pub fn values(&self, basis: &BasisSpec) -> Result<Vec<f64>> {
        match self {
            Self::Coefficients(c) => {
                if c.len() != basis.n_modes() {
                    return Err(Error::invalid(
                        "initial",
                        format!("{} coefficients given, basis stores {}", c.len(), basis.n_modes()),
                    ));
                }
                let cv = CoeffVector::new(c.iter().map(|p| num_complex(p[0], p[1])).collect());
                cv.check(basis)?;
                synthesize_values(basis, &cv)
            }
            Self::Preset(name) => {
                let want = if name == "ch2d" { 2 } else { 1 };
                if basis.dim != want {
                    return Err(Error::invalid(
                        "initial",
                        format!("preset {name:?} is {want}-dimensional, the basis is {}-dimensional", basis.dim),
                    ));
                }
                let pts = basis.points();
                let f: Box<dyn Fn(&[f64]) -> f64> = match name.as_str() {
                    "heat" => Box::new(|p| p[0].sin() + 2.0),
                    "heat_source" => Box::new(|_| 2.0),
                    "fp" => Box::new(|p| (-p[0] * p[0] / 2.0).exp() / (2.0 * PI).sqrt()),
                    "ch1d" => Box::new(|p| 0.5 * (PI * p[0]).sin() + 1.0),
                    "ch2d" => Box::new(|p| p[0].sin() * p[1].sin()),
                    "ac" => Box::new(|p| 0.5 * (PI * p[0]).cos()),
                    "test1" => Box::new(|p| 1.0 + 0.25 * (PI * p[0]).sin()),
                    "test2" => Box::new(|p| 1.0 + 0.2 * (PI * p[0]).cos()),
                    "test3" => Box::new(|p| 1.0 + 0.15 * (PI * p[0]).sin() + 0.1 * (2.0 * PI * p[0]).cos()),
                    "test4" => Box::new(|p| 0.9 + 0.2 * (PI * p[0]).cos() - 0.1 * (2.0 * PI * p[0]).sin()),
                    "test5" => Box::new(|p| 1.1 + 0.1 * (PI * p[0]).sin() + 0.1 * (2.0 * PI * p[0]).sin()),
                    other => return Err(Error::invalid("initial", format!("unknown preset {other:?}"))),
                };
                Ok((0..pts.rows()).map(|r| f(pts.row(r))).collect())
            }
        }
    }
}

fn num_complex(re: f64, im: f64) -> rustfft::num_complex::Complex64 {
    rustfft::num_complex::Complex64::new(re, im)
}

/// Parses a JSON list of `[re, im]` pairs.
pub fn parse_coefficients(text: &str) -> Result<Vec<[f64; 2]>> {
    let v: Vec<[f64; 2]> = serde_json::from_str(text)
        .map_err(|e| Error::invalid("coefficients", format!("expected [[re, im], ...]: {e}")))?;
    if v.is_empty() {
        return Err(Error::invalid("coefficients", "list is empty"));
    }
    if v.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::invalid("coefficients", "entries must be finite"));
    }
    Ok(v)
}

fn arch(depth: usize, width: usize, latent: usize, activation: Activation) -> Architecture {
    Architecture {
        depth,
        width,
        latent,
        activation,
    }
}

fn training(epochs: usize) -> TrainOptions {
    TrainOptions {
        epochs,
        lr: 5e-4,
        log_every: 100,
    }
}

fn stepping(dt: f64, t_end: f64, test_grid: usize, initial: &str) -> SteppingConfig {
    SteppingConfig {
        dt,
        t_end,
        test_grid,
        initial: initial.into(),
        flux: FluxSource::Net,
        band: None,
        record_every: 1,
        parameter: None,
    }
}

fn dool(
    name: &str,
    model: ModelSpec,
    basis: BasisSpec,
    sampling: SamplingConfig,
    net: Architecture,
    epochs: usize,
    st: SteppingConfig,
    reference: Option<ReferenceConfig>,
) -> ExperimentConfig {
    ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        name: name.into(),
        seed: 0,
        model: Some(model),
        basis: Some(basis),
        sampling: Some(sampling),
        parameter: None,
        net,
        training: training(epochs),
        stepping: Some(st),
        reference,
        inversion: None,
        compare: None,
        dlam: None,
        output: OutputConfig {
            dir: format!("runs/{name}"),
        },
    }
}

fn sampling(n: usize, background: f64, r0: f64, floor: f64) -> SamplingConfig {
    SamplingConfig {
        n_samples: n,
        background,
        r0,
        positivity_floor: floor,
        max_retries: 1000,
    }
}

fn solver_ref() -> Option<ReferenceConfig> {
    Some(ReferenceConfig {
        kind: ReferenceKind::Solver,
        grid: 1024,
        dt: 1e-4,
    })
}

fn exact_ref() -> Option<ReferenceConfig> {
    Some(ReferenceConfig {
        kind: ReferenceKind::Exact,
        grid: 1024,
        dt: 1e-4,
    })
}

/// Allen-Cahn needs more and narrower samples than the other models, and a
/// larger step size.
fn ac_preset(name: &str, model: ModelSpec, basis: BasisSpec) -> ExperimentConfig {
    let mut c = dool(
        name,
        model,
        basis,
        sampling(400, 0.0, 0.6, 0.0),
        arch(4, 35, 120, Activation::Sin),
        40_000,
        stepping(1e-3, 2.0, 1024, "preset:ac"),
        solver_ref(),
    );
    c.training.lr = 2e-3;
    c
}

pub const PRESETS: &[&str] = &[
    "heat",
    "heat_source",
    "fp",
    "ch1d",
    "ch1d_g001",
    "ch2d",
    "ac",
    "ac_g001",
    "multi_input",
    "inversion",
    "dlam",
    "compare",
];

fn ch(gamma1: f64, gamma2: f64) -> ModelSpec {
    let mut m = ModelSpec::new(ModelName::CahnHilliard1d);
    m.gamma1 = gamma1;
    m.gamma2 = gamma2;
    m
}

fn ac(gamma1: f64) -> ModelSpec {
    let mut m = ModelSpec::new(ModelName::AllenCahn);
    m.gamma1 = gamma1;
    m.gamma2 = 1.0;
    m
}

/// Desk-scale presets. Full-size runs change `net.width` and
/// `training.epochs` (and the sample counts noted per preset).
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let tanh = Activation::Tanh;
    let sin = Activation::Sin;
    let cfg = match name {
        "heat" => dool(
            name,
            ModelSpec::new(ModelName::Heat),
            BasisSpec::fourier_1d(PI, 1, 128),
            sampling(50, 2.0, 1.0, 0.2),
            arch(3, 50, 120, tanh),
            20_000,
            stepping(1e-3, 1.0, 1024, "preset:heat"),
            exact_ref(),
        ),
        "heat_source" => dool(
            name,
            ModelSpec::new(ModelName::HeatSource),
            BasisSpec::fourier_1d(PI, 1, 128),
            sampling(50, 2.0, 1.0, 0.2),
            arch(3, 50, 120, tanh),
            20_000,
            stepping(1e-3, 1.0, 1024, "preset:heat_source"),
            exact_ref(),
        ),
        "fp" => {
            let mut m = ModelSpec::new(ModelName::FokkerPlanck);
            m.shift = 1.0;
            dool(
                name,
                m,
                BasisSpec::hermite(5.0, 5, 400),
                sampling(200, 0.5311, 0.5, 0.5),
                arch(4, 35, 120, tanh),
                10_000,
                stepping(1e-3, 0.5, 400, "preset:fp"),
                exact_ref(),
            )
        }
        "ch1d" => dool(
            name,
            ch(0.1, 0.1),
            BasisSpec::fourier_1d(1.0, 2, 128),
            sampling(100, 1.0, 0.6, 0.0),
            arch(4, 35, 120, sin),
            20_000,
            stepping(1e-3, 0.5, 1024, "preset:ch1d"),
            solver_ref(),
        ),
        "ch1d_g001" => dool(
            name,
            ch(0.01, 0.1),
            BasisSpec::fourier_1d(1.0, 3, 128),
            sampling(250, 1.0, 0.6, 0.0),
            arch(4, 35, 120, sin),
            20_000,
            stepping(1e-3, 1.0, 1024, "preset:ch1d"),
            solver_ref(),
        ),
        "ch2d" => {
            let mut m = ModelSpec::new(ModelName::CahnHilliard2d);
            m.gamma1 = 1.0;
            m.gamma2 = 1.0;
            let mut st = stepping(1e-3, 0.5, 64, "preset:ch2d");
            st.record_every = 50;
            dool(
                name,
                m,
                BasisSpec::fourier_2d(PI, 1, 64),
                sampling(100, 0.0, 1.0, 0.0),
                arch(4, 35, 120, sin),
                2_000,
                st,
                Some(ReferenceConfig {
                    kind: ReferenceKind::Solver,
                    grid: 128,
                    dt: 1e-4,
                }),
            )
        }
        "ac" => ac_preset(
            name,
            ac(0.1),
            BasisSpec::fourier_1d(1.0, 9, 128),
        ),
        "ac_g001" => ac_preset(
            name,
            ac(0.01),
            BasisSpec::fourier_1d(1.0, 9, 128),
        ),
        "multi_input" | "inversion" => {
            let mut st = stepping(1e-3, 0.5, 1024, "preset:test1");
            st.parameter = Some(0.05);
            let mut c = dool(
                name,
                ch(0.05, 0.1),
                BasisSpec::fourier_1d(1.0, 3, 128),
                sampling(120, 1.0, 0.6, 0.0),
                arch(4, 35, 120, sin),
                20_000,
                st,
                solver_ref(),
            );
            c.parameter = Some(ParameterConfig {
                min: 0.01,
                max: 0.1,
                count: 10,
            });
            if name == "inversion" {
                c.inversion = Some(InversionConfig {
                    interval: [0.0, 0.1],
                    tol: 1e-4,
                    truths: vec![0.02, 0.06, 0.1],
                    obs_grid: 128,
                    obs_times: 100,
                    t_end: 1.0,
                });
            }
            c
        }
        "compare" => {
            let mut c = preset("ch1d")?;
            c.name = name.into();
            c.output.dir = format!("runs/{name}");
            c.compare = Some(CompareConfig {
                train_t_end: 0.2,
                n_t: 20,
                n_functions: 20,
                label_grid: 64,
                epochs: 20_000,
                test_ics: (1..=5).map(|i| format!("preset:test{i}")).collect(),
                horizons: vec![0.5, 1.0],
            });
            c
        }
        "dlam" => ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            name: name.into(),
            seed: 0,
            model: None,
            basis: None,
            sampling: None,
            parameter: None,
            net: arch(4, 35, 1, sin),
            training: TrainOptions {
                epochs: 1_200,
                lr: 1e-3,
                log_every: 100,
            },
            stepping: None,
            reference: None,
            inversion: None,
            compare: None,
            dlam: Some(DlamConfig {
                half_width: PI,
                horizon: 1.0,
                n_x: 64,
                n_t: 64,
                lambda: 1.0,
                initial: Boundary::Cos,
                terminal: Boundary::Zero,
                test_n_x: 128,
                test_n_t: 128,
            }),
            output: OutputConfig {
                dir: format!("runs/{name}"),
            },
        },
        other => {
            return Err(Error::Config(format!(
                "unknown preset {other:?}; known: {}",
                PRESETS.join(", ")
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

/// A path to a TOML file, or `preset:<name>`.
pub fn load(spec: &str) -> Result<ExperimentConfig> {
    if let Some(name) = spec.strip_prefix("preset:") {
        return preset(name);
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| Error::Config(format!("cannot read config {spec}: {e}")))?;
    ExperimentConfig::from_toml(&text)
}
