use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dool_core::config::{self, ExperimentConfig, FluxSource, PRESETS};
use dool_core::inverse::parse_observations_csv;
use dool_core::pipeline::{self, Checkpoint, SolveRequest};
use dool_core::reference::ExactSolution;
use dool_core::stepper::{error_series, relative_l2, Trajectory};
use dool_core::train::TrainReport;
use dool_core::{Error, Result, SCHEMA_VERSION};

#[derive(Parser)]
#[command(name = "dool", version, about = "Rayleighian-trained operator networks for gradient-flow PDEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a network and write checkpoint.json, train_report.json, loss.csv.
    Train(TrainArgs),
    /// Step a PDE with a trained (or analytic) flux; writes fields.csv, energy.csv.
    Solve(SolveArgs),
    /// Error of a solved trajectory against its reference or another run.
    Evaluate(EvaluateArgs),
    /// Recover the first model parameter from observations.
    Invert(InvertArgs),
    /// Train both the Rayleighian network and the supervised baseline and tabulate errors.
    Compare(TrainArgs),
    /// Least-action training for the damped wave.
    Dlam(TrainArgs),
    /// List the shipped presets, or print one as TOML.
    PresetsList {
        #[arg(long)]
        show: Option<String>,
    },
}

#[derive(Args)]
struct Output {
    /// Artifact directory (defaults to the config's output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write into a non-empty directory.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// TOML file or preset:NAME.
    #[arg(long)]
    config: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SolveArgs {
    /// Checkpoint from `train`; the flux comes from the network.
    #[arg(long, conflicts_with = "config")]
    checkpoint: Option<PathBuf>,
    /// Config for an analytic-flux solve.
    #[arg(long, required_unless_present = "checkpoint")]
    config: Option<String>,
    /// Model the caller expects; must match the checkpoint.
    #[arg(long)]
    model: Option<String>,
    /// preset:NAME or a JSON list of [re, im] coefficients.
    #[arg(long)]
    initial: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Evaluation grid size.
    #[arg(long)]
    grid: Option<usize>,
    /// Second-branch parameter for two-branch networks.
    #[arg(long)]
    parameter: Option<f64>,
    #[arg(long)]
    record_every: Option<usize>,
    /// Also record the flux at each recorded state.
    #[arg(long)]
    fluxes: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Directory written by `solve`.
    #[arg(long)]
    run: PathBuf,
    /// Another `solve` directory to use as the reference instead of the configured one.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Metrics file (defaults to RUN/metrics.json).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InvertArgs {
    /// Two-branch checkpoint.
    #[arg(long)]
    checkpoint: PathBuf,
    /// `t,x,u` observations; without it, observations are generated by the reference solver.
    #[arg(long, conflicts_with = "gamma")]
    observations: Option<PathBuf>,
    /// Ground truth used to generate observations (defaults to the first configured truth).
    #[arg(long)]
    gamma: Option<f64>,
    #[command(flatten)]
    output: Output,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Train(a) => train(a),
        Command::Solve(a) => solve(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Invert(a) => invert(a),
        Command::Compare(a) => compare(a),
        Command::Dlam(a) => dlam(a),
        Command::PresetsList { show } => {
            let text = match show {
                Some(name) => config::preset(&name)?.to_toml(),
                None => PRESETS.iter().map(|p| format!("{p}\n")).collect(),
            };
            // a closed pipe is not an error here
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn load_config(a: &TrainArgs) -> Result<ExperimentConfig> {
    let mut cfg = config::load(&a.config)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(e) = a.epochs {
        cfg.training.epochs = e;
        if let Some(c) = cfg.compare.as_mut() {
            c.epochs = e;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(o: &Output, cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = o.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    if !o.force {
        if let Ok(mut entries) = std::fs::read_dir(&dir) {
            if entries.next().is_some() {
                return Err(Error::Config(format!("{} is not empty; pass --force to overwrite", dir.display())));
            }
        }
    }
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn loss_csv(report: &TrainReport) -> String {
    let mut s = String::from("epoch,loss\n");
    for (e, l) in &report.loss_history {
        s.push_str(&format!("{e},{l}\n"));
    }
    s
}

fn train(a: TrainArgs) -> Result<()> {
    let cfg = load_config(&a)?;
    if cfg.is_dlam() {
        return Err(Error::Config("this config describes a least-action run; use `dool dlam`".into()));
    }
    let dir = out_dir(&a.output, &cfg)?;
    let (net, report) = pipeline::train(&cfg)?;
    Checkpoint::new(cfg.clone(), net).save(&dir.join("checkpoint.json"))?;
    write_json(&dir.join("train_report.json"), &report)?;
    std::fs::write(dir.join("loss.csv"), loss_csv(&report))?;
    write_json(&dir.join("meta.json"), &pipeline::meta(&cfg))?;
    println!(
        "trained {} epochs: loss {:.6e} (floor {})",
        report.epochs,
        report.final_loss,
        report.floor.map_or("n/a".into(), |f| format!("{f:.6e}"))
    );
    Ok(())
}

fn solve(a: SolveArgs) -> Result<()> {
    let (mut cfg, net) = match (&a.checkpoint, &a.config) {
        (Some(p), _) => {
            let ck = Checkpoint::load(p)?;
            (ck.config, Some(ck.net))
        }
        (None, Some(c)) => (config::load(c)?, None),
        (None, None) => return Err(Error::Config("need --checkpoint or --config".into())),
    };
    if let Some(m) = &a.model {
        let have = cfg.model()?.name.as_str();
        if have != m {
            return Err(Error::Config(format!("checkpoint was trained for {have}, not {m}")));
        }
    }
    {
        let st = cfg
            .stepping
            .as_mut()
            .ok_or_else(|| Error::invalid("stepping", "section is required"))?;
        st.flux = if net.is_some() { FluxSource::Net } else { FluxSource::Analytic };
        if let Some(v) = &a.initial {
            st.initial = v.clone();
        }
        if let Some(v) = a.dt {
            st.dt = v;
        }
        if let Some(v) = a.t_end {
            st.t_end = v;
        }
        if let Some(v) = a.grid {
            st.test_grid = v;
        }
        if let Some(v) = a.parameter {
            st.parameter = Some(v);
        }
        if let Some(v) = a.record_every {
            st.record_every = v;
        }
    }
    cfg.validate()?;
    let dir = out_dir(&a.output, &cfg)?;
    let mut req = SolveRequest::from_config(&cfg)?;
    req.fluxes = a.fluxes;
    let traj = pipeline::solve(&cfg, net.as_ref(), &req)?;
    let mut meta = pipeline::meta(&cfg);
    meta["request"] = serde_json::json!({
        "initial": req.initial,
        "dt": req.dt,
        "t_end": req.t_end,
        "parameter": req.parameter,
        "flux": if net.is_some() { "net" } else { "analytic" },
    });
    traj.export(&dir, &meta)?;
    write_json(&dir.join("trajectory.json"), &traj)?;
    for w in &traj.warnings {
        eprintln!("warning: {w}");
    }
    println!("{} steps, {} states recorded", traj.n_steps, traj.times.len());
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let traj: Trajectory = read_json(&a.run.join("trajectory.json"))?;
    let metrics = match &a.reference {
        Some(r) => {
            let reference: Trajectory = read_json(&r.join("trajectory.json"))?;
            if reference.basis != traj.basis {
                return Err(Error::Config("runs are on different grids".into()));
            }
            if reference.times.len() != traj.times.len()
                || reference.times.iter().zip(&traj.times).any(|(p, q)| (p - q).abs() > 1e-9)
            {
                return Err(Error::Config("runs recorded different times".into()));
            }
            let per = error_series(&traj.states, &reference.states)?;
            pipeline::Metrics {
                schema_version: SCHEMA_VERSION,
                relative_l2: relative_l2(&traj.states, &reference.states)?,
                per_time: traj.times.iter().cloned().zip(per).collect(),
                flux_relative_l2: None,
            }
        }
        None => {
            let meta: serde_json::Value = read_json(&a.run.join("meta.json"))?;
            let cfg: ExperimentConfig = serde_json::from_value(meta["config"].clone())
                .map_err(|e| Error::Config(format!("meta.json config: {e}")))?;
            let req = &meta["request"];
            let initial = req["initial"]
                .as_str()
                .ok_or_else(|| Error::Config("meta.json has no request.initial".into()))?;
            pipeline::evaluate(&cfg, &traj, initial, req["parameter"].as_f64())?
        }
    };
    let out = a.out.unwrap_or_else(|| a.run.join("metrics.json"));
    write_json(&out, &metrics)?;
    println!("relative L2 error {:.6e}", metrics.relative_l2);
    Ok(())
}

fn invert(a: InvertArgs) -> Result<()> {
    let ck = Checkpoint::load(&a.checkpoint)?;
    let cfg = ck.config;
    cfg.validate()?;
    let dir = out_dir(&a.output, &cfg)?;
    let (obs, truth) = match &a.observations {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            (parse_observations_csv(&text, &p.display().to_string())?, None)
        }
        None => {
            let inv = cfg
                .inversion
                .as_ref()
                .ok_or_else(|| Error::invalid("inversion", "section is required"))?;
            let g = a
                .gamma
                .or_else(|| inv.truths.first().cloned())
                .ok_or_else(|| Error::invalid("inversion.truths", "no ground truth to synthesize from"))?;
            let obs = pipeline::synthesize_observations(&cfg, g)?;
            std::fs::write(dir.join("observations.csv"), obs.to_csv())?;
            (obs, Some(g))
        }
    };
    let report = pipeline::run_inversion(&cfg, &ck.net, obs, truth)?;
    write_json(&dir.join("inversion.json"), &report)?;
    let mut curve = String::from("gamma1,misfit\n");
    for (g, m) in &report.misfit_curve {
        curve.push_str(&format!("{g},{m}\n"));
    }
    std::fs::write(dir.join("misfit.csv"), curve)?;
    write_json(&dir.join("meta.json"), &pipeline::meta(&cfg))?;
    println!("recovered gamma1 = {:.6} after {} evaluations", report.recovered, report.evaluations);
    Ok(())
}

fn compare(a: TrainArgs) -> Result<()> {
    let cfg = load_config(&a)?;
    if cfg.compare.is_none() {
        return Err(Error::invalid("compare", "section is required"));
    }
    let dir = out_dir(&a.output, &cfg)?;
    let dool = pipeline::train(&cfg)?;
    let base = pipeline::train_baseline(&cfg)?;
    let report = pipeline::compare(&cfg, (&dool.0, &dool.1), (&base.0, &base.1))?;
    std::fs::write(dir.join("compare.csv"), report.to_csv())?;
    write_json(&dir.join("compare.json"), &report)?;
    write_json(&dir.join("meta.json"), &pipeline::meta(&cfg))?;
    print!("{}", report.to_csv());
    Ok(())
}

fn dlam(a: TrainArgs) -> Result<()> {
    let cfg = load_config(&a)?;
    let d = cfg
        .dlam
        .clone()
        .ok_or_else(|| Error::invalid("dlam", "section is required"))?;
    let dir = out_dir(&a.output, &cfg)?;
    let (ndnn, report) = pipeline::train_least_action(&cfg)?;
    let metrics = pipeline::dlam_metrics(&cfg, &ndnn)?;
    let (xs, ts, u) = dool_core::dlam::solution_field(&ndnn, d.test_n_x, d.test_n_t)?;
    let exact = ExactSolution::DampedWave { horizon: d.horizon };
    let mut field = String::from("t,x,u,exact\n");
    for (t, row) in ts.iter().zip(&u) {
        for (x, v) in xs.iter().zip(row) {
            field.push_str(&format!("{t},{x},{v},{}\n", exact.eval(*x, *t)));
        }
    }
    std::fs::write(dir.join("field.csv"), field)?;
    std::fs::write(dir.join("loss.csv"), loss_csv(&report))?;
    write_json(&dir.join("train_report.json"), &report)?;
    write_json(&dir.join("dlam_metrics.json"), &metrics)?;
    write_json(&dir.join("network.json"), &ndnn.core)?;
    write_json(&dir.join("meta.json"), &pipeline::meta(&cfg))?;
    println!("relative L2 error {:.6e}, action {:.6e}", metrics.relative_l2, metrics.final_action);
    Ok(())
}
