//! The `ctrap` command-line front end.
//!
//! Every subcommand resolves its settings from built-in defaults, an
//! optional `--config` file (TOML, or JSON such as a previous run's
//! `manifest.json`) and command-line flags, in increasing priority. Outputs
//! are computed in memory, then written to `--out-dir` together with a
//! manifest of the resolved config and file hashes.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::abm::{self, AbmConfig, AbmPolicy};
use crate::analysis::{self, CountryColumns, InvertedUReport};
use crate::error::{Error, Result};
use crate::meanfield::{
    detect_cycle, integrate, phase_diagram, phase_portrait_for, redundancy_sweep, trap_basin_for,
    Policy, Trajectory,
};
use crate::numerics::Probability;
use crate::strategy::{analytic_breakpoints, ModelParams, Strategy};

use config::{load_config_file, resolve, Grid, Overrides};
use output::{format_float, json_bytes, manifest, write_all, Artifact, CsvTable};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DATA: i32 = 4;

const DEFAULT_EPS: f64 = 0.001;
const DEFAULT_SEED: u64 = 20_240_611;

#[derive(Debug, Parser)]
#[command(name = "ctrap", version, about = "Poverty traps, overshooting and buffers in a model of contagious production failures")]
pub struct Cli {
    /// TOML or JSON file of settings; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, env = "CTRAP_OUT_DIR", default_value = "out")]
    pub out_dir: PathBuf,
    /// Worker threads for parallel scans and replicas.
    #[arg(long, global = true, env = "CTRAP_THREADS")]
    pub threads: Option<usize>,
    /// Print one line to stdout on completion.
    #[arg(long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Best response and drift sign along F, trap basin, breakpoints.
    Portrait(PortraitArgs),
    /// Integrate F(t) under a policy and look for a limit cycle.
    Trajectory(TrajectoryArgs),
    /// Best response and drift sign on an (alpha, F) grid.
    Diagram(DiagramArgs),
    /// Phase portrait when agents overshoot the best response by s.
    Overshoot(OvershootArgs),
    /// Complexity and buffer of the best response across beta and F.
    Sweep(SweepArgs),
    /// Agent-based ensemble with sticky links and preferential attachment.
    Abm(AbmArgs),
    /// Quadratic fit of inventories against complexity from a CSV file.
    Fit(FitArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Portrait(_) => "portrait",
            Command::Trajectory(_) => "trajectory",
            Command::Diagram(_) => "diagram",
            Command::Overshoot(_) => "overshoot",
            Command::Sweep(_) => "sweep",
            Command::Abm(_) => "abm",
            Command::Fit(_) => "fit",
        }
    }
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Cost per attempted input.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Returns to complexity, in (0, 1).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Exogenous failure rate [default: 0.001].
    #[arg(long)]
    pub eps: Option<f64>,
}

impl ModelArgs {
    fn overrides(&self, o: &mut Overrides) {
        o.set("alpha", &self.alpha).set("beta", &self.beta).set("eps", &self.eps);
    }
}

#[derive(Debug, Args)]
pub struct PortraitArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Grid intervals used before boundary refinement [default: 1000].
    #[arg(long)]
    pub resolution: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OvershootArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Extra inputs and extra required inputs over the best response [default: 2].
    #[arg(long)]
    pub s: Option<u32>,
    /// Grid intervals used before boundary refinement [default: 1000].
    #[arg(long)]
    pub resolution: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    BestResponse,
    Overshoot,
    Fixed,
}

fn parse_strategy(s: &str) -> std::result::Result<Strategy, String> {
    let (m, tau) = s
        .split_once(',')
        .ok_or_else(|| format!("strategy {s:?} is not of the form m,tau"))?;
    let m: u32 = m.trim().parse().map_err(|e| format!("m: {e}"))?;
    let tau: u32 = tau.trim().parse().map_err(|e| format!("tau: {e}"))?;
    if tau > m {
        return Err(format!("tau ({tau}) exceeds m ({m})"));
    }
    Ok(Strategy::new(m, tau))
}

#[derive(Debug, Args)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Initial functional fraction [default: 0.5].
    #[arg(long)]
    pub f0: Option<f64>,
    /// Integration horizon [default: 200].
    #[arg(long)]
    pub t_end: Option<f64>,
    /// RK4 step [default: 0.001].
    #[arg(long)]
    pub dt: Option<f64>,
    /// Commitment interval; 0 re-optimises every step [default: 0].
    #[arg(long = "commit-T")]
    pub commit: Option<f64>,
    /// Strategy rule [default: best-response].
    #[arg(long, value_enum)]
    pub policy: Option<PolicyKind>,
    /// Overshoot size for --policy overshoot [default: 2].
    #[arg(long)]
    pub s: Option<u32>,
    /// Strategy for --policy fixed, as m,tau.
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: Option<Strategy>,
    /// Spacing of output rows [default: 0.01].
    #[arg(long)]
    pub sample_dt: Option<f64>,
    /// Time before which switches are ignored by cycle detection [default: t_end / 2].
    #[arg(long)]
    pub transient: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DiagramArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Cost grid lo:hi:count [default: 0.01:0.5:50].
    #[arg(long)]
    pub alpha_grid: Option<Grid>,
    /// Functional-fraction grid lo:hi:count [default: 0:1:101].
    #[arg(long)]
    pub f_grid: Option<Grid>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated returns to complexity [default: 0.3,0.35,0.4,0.45,0.5].
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    /// Functional-fraction grid lo:hi:count [default: 0:1:1001].
    #[arg(long)]
    pub f_grid: Option<Grid>,
}

#[derive(Debug, Args)]
pub struct AbmArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of agents [default: 200].
    #[arg(long)]
    pub n: Option<usize>,
    /// Stickiness of links that delivered [default: 1].
    #[arg(long)]
    pub r: Option<f64>,
    /// Preferential-attachment exponent [default: 0].
    #[arg(long)]
    pub xi: Option<f64>,
    /// Initial functional fraction [default: 0.5].
    #[arg(long)]
    pub f0: Option<f64>,
    /// Simulated time [default: 1000].
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Spacing of sampled F values [default: 1].
    #[arg(long)]
    pub sample_dt: Option<f64>,
    /// Number of independent runs [default: 100].
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Random seed [default: 20240611].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Strategy rule: best-response or fixed [default: best-response].
    #[arg(long, value_enum)]
    pub policy: Option<PolicyKind>,
    /// Strategy for --policy fixed, as m,tau.
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: Option<Strategy>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Regressor column [default: eci].
    #[arg(long)]
    pub x_col: Option<String>,
    /// Response column [default: inventory_days].
    #[arg(long)]
    pub y_col: Option<String>,
    /// Identifier column [default: country].
    #[arg(long)]
    pub id_col: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PortraitConfig {
    alpha: f64,
    beta: f64,
    eps: f64,
    resolution: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OvershootConfig {
    alpha: f64,
    beta: f64,
    eps: f64,
    s: u32,
    resolution: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryConfig {
    alpha: f64,
    beta: f64,
    eps: f64,
    f0: f64,
    t_end: f64,
    dt: f64,
    commit: f64,
    policy: PolicyKind,
    s: u32,
    strategy: Option<Strategy>,
    sample_dt: f64,
    transient: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiagramConfig {
    beta: f64,
    eps: f64,
    alpha_grid: Grid,
    f_grid: Grid,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepConfig {
    alpha: f64,
    eps: f64,
    betas: Vec<f64>,
    f_grid: Grid,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AbmRunConfig {
    alpha: f64,
    beta: f64,
    eps: f64,
    n: usize,
    r: f64,
    xi: f64,
    f0: f64,
    t_end: f64,
    sample_dt: f64,
    replicas: usize,
    seed: u64,
    policy: PolicyKind,
    strategy: Option<Strategy>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitConfig {
    input: PathBuf,
    x_col: String,
    y_col: String,
    id_col: String,
}

fn params(alpha: f64, beta: f64, eps: f64) -> Result<ModelParams> {
    ModelParams::new(alpha, beta, eps)
}

fn fmt_prob(p: Probability) -> String {
    format_float(p.value())
}

#[derive(Serialize)]
struct PortraitSummary {
    trap_basin: f64,
    breakpoints: BreakpointSummary,
}

#[derive(Serialize)]
struct BreakpointSummary {
    f_exit_trap: f64,
    f_11_22: Option<f64>,
}

fn portrait_artifacts(params: &ModelParams, policy: Policy, resolution: usize) -> Result<Vec<Artifact>> {
    let portrait = phase_portrait_for(params, policy, resolution)?;
    let mut table = CsvTable::new(&["f_lo", "f_hi", "m", "tau", "sign"]);
    for seg in &portrait.segments {
        table.push(vec![
            fmt_prob(seg.f_lo),
            fmt_prob(seg.f_hi),
            seg.strategy.m.to_string(),
            seg.strategy.tau.to_string(),
            seg.drift_sign.as_str().to_string(),
        ]);
    }
    let basin = trap_basin_for(params, policy, resolution)?;
    let b = analytic_breakpoints(params);
    let summary = PortraitSummary {
        trap_basin: basin.f_star.value(),
        breakpoints: BreakpointSummary {
            f_exit_trap: b.f_exit_trap.value(),
            f_11_22: b.f_11_22.map(Probability::value),
        },
    };
    Ok(vec![
        Artifact::new("portrait.csv", table.to_bytes()?),
        Artifact::new("portrait.json", json_bytes(&summary)?),
    ])
}

fn trajectory_policy(cfg: &TrajectoryConfig) -> Result<Policy> {
    match cfg.policy {
        PolicyKind::BestResponse => Ok(Policy::BestResponse { commit: cfg.commit }),
        PolicyKind::Overshoot => Ok(Policy::Overshoot { s: cfg.s }),
        PolicyKind::Fixed => cfg
            .strategy
            .map(|strategy| Policy::Fixed { strategy })
            .ok_or_else(|| Error::InvalidParameter("--policy fixed needs --strategy m,tau".into())),
    }
}

fn trajectory_artifacts(cfg: &TrajectoryConfig) -> Result<Vec<Artifact>> {
    let p = params(cfg.alpha, cfg.beta, cfg.eps)?;
    let policy = trajectory_policy(cfg)?;
    if !(cfg.sample_dt.is_finite() && cfg.sample_dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sample_dt must be positive, got {}",
            cfg.sample_dt
        )));
    }
    let traj = integrate(&p, Probability::new(cfg.f0)?, policy, cfg.t_end, cfg.dt)?;
    let stride = ((cfg.sample_dt / cfg.dt).round() as usize).max(1);

    let mut table = CsvTable::new(&["t", "f", "m", "tau"]);
    let last = traj.len() - 1;
    for i in (0..traj.len()).filter(|&i| i % stride == 0 || i == last) {
        let s = traj.strategies[i];
        table.push(vec![
            format_float(traj.times[i]),
            fmt_prob(traj.f_values[i]),
            s.m.to_string(),
            s.tau.to_string(),
        ]);
    }
    let mut switches = CsvTable::new(&["t", "f", "old_m", "old_tau", "new_m", "new_tau"]);
    for e in &traj.switch_events {
        switches.push(vec![
            format_float(e.time),
            fmt_prob(e.f),
            e.old.m.to_string(),
            e.old.tau.to_string(),
            e.new.m.to_string(),
            e.new.tau.to_string(),
        ]);
    }
    let transient = cfg.transient.unwrap_or(cfg.t_end / 2.0);
    Ok(vec![
        Artifact::new("trajectory.csv", table.to_bytes()?),
        Artifact::new("switches.csv", switches.to_bytes()?),
        Artifact::new("cycle.json", cycle_json(&traj, transient)?),
    ])
}

fn cycle_json(traj: &Trajectory, transient: f64) -> Result<Vec<u8>> {
    match detect_cycle(traj, transient) {
        Ok(report) => json_bytes(&report),
        Err(Error::InsufficientData(reason)) => json_bytes(&json!({
            "detected": Value::Null,
            "reason": reason,
        })),
        Err(e) => Err(e),
    }
}

fn diagram_artifacts(cfg: &DiagramConfig) -> Result<Vec<Artifact>> {
    let cells = phase_diagram(cfg.beta, cfg.eps, &cfg.alpha_grid.points(), &cfg.f_grid.points())?;
    let mut table = CsvTable::new(&["alpha", "f", "m", "tau", "sign"]);
    for c in &cells {
        table.push(vec![
            format_float(c.alpha),
            fmt_prob(c.f),
            c.strategy.m.to_string(),
            c.strategy.tau.to_string(),
            c.drift_sign.as_str().to_string(),
        ]);
    }
    Ok(vec![Artifact::new("diagram.csv", table.to_bytes()?)])
}

#[derive(Serialize)]
struct BetaFit {
    beta: f64,
    n_points: usize,
    #[serde(flatten)]
    report: Option<InvertedUReport>,
    error: Option<String>,
}

fn sweep_artifacts(cfg: &SweepConfig) -> Result<Vec<Artifact>> {
    let points = redundancy_sweep(cfg.alpha, cfg.eps, &cfg.betas, &cfg.f_grid.points())?;
    let mut table = CsvTable::new(&["beta", "f", "tau_star", "buffer"]);
    for p in &points {
        table.push(vec![
            format_float(p.beta),
            fmt_prob(p.f),
            p.tau_star.to_string(),
            p.buffer.to_string(),
        ]);
    }
    let mut fits = Vec::with_capacity(cfg.betas.len());
    for &beta in &cfg.betas {
        let subset: Vec<_> = points.iter().filter(|p| p.beta == beta).copied().collect();
        let (report, error) = match analysis::sweep_report(&subset) {
            Ok(r) => (Some(r), None),
            Err(e @ (Error::InsufficientData(_) | Error::RankDeficient)) => (None, Some(e.to_string())),
            Err(e) => return Err(e),
        };
        fits.push(BetaFit {
            beta,
            n_points: subset.len(),
            report,
            error,
        });
    }
    Ok(vec![
        Artifact::new("sweep.csv", table.to_bytes()?),
        Artifact::new("fits.json", json_bytes(&fits)?),
    ])
}

#[derive(Serialize)]
struct AbmSummary {
    n_replicas: usize,
    mean_final_f: f64,
    sem_final_f: f64,
    /// Mean over replicas of each run's standard deviation of F(t).
    mean_time_series_sd: f64,
}

fn abm_artifacts(cfg: &AbmRunConfig) -> Result<Vec<Artifact>> {
    let policy = match cfg.policy {
        PolicyKind::BestResponse => AbmPolicy::BestResponseToGlobalF,
        PolicyKind::Fixed => AbmPolicy::Fixed {
            strategy: cfg.strategy.ok_or_else(|| {
                Error::InvalidParameter("--policy fixed needs --strategy m,tau".into())
            })?,
        },
        PolicyKind::Overshoot => {
            return Err(Error::InvalidParameter(
                "the agent-based model supports best-response and fixed policies".into(),
            ))
        }
    };
    let config = AbmConfig {
        n_agents: cfg.n,
        params: params(cfg.alpha, cfg.beta, cfg.eps)?,
        r: cfg.r,
        xi: cfg.xi,
        f0: Probability::new(cfg.f0)?,
        policy,
        t_end: cfg.t_end,
        sample_dt: cfg.sample_dt,
        seed: cfg.seed,
    };
    let runs = abm::run_replica_set(config, cfg.replicas)?;
    let summary = abm::summarize(&runs)?;

    let mut series = CsvTable::new(&["t", "mean_f", "sd_f", "sem_f"]);
    for i in 0..summary.sample_times.len() {
        series.push(vec![
            format_float(summary.sample_times[i]),
            fmt_prob(summary.mean_f[i]),
            format_float(summary.sd_f[i]),
            format_float(summary.sem_f[i]),
        ]);
    }
    let mut finals = CsvTable::new(&["replica", "final_f"]);
    for (i, f) in summary.final_f_samples.iter().enumerate() {
        finals.push(vec![i.to_string(), fmt_prob(*f)]);
    }
    let stats = AbmSummary {
        n_replicas: summary.n_replicas,
        mean_final_f: summary.mean_final_f(),
        sem_final_f: summary.sem_final_f(),
        mean_time_series_sd: runs.iter().map(|r| r.time_series_sd(0.0)).sum::<f64>() / runs.len() as f64,
    };
    Ok(vec![
        Artifact::new("abm_series.csv", series.to_bytes()?),
        Artifact::new("abm_final.csv", finals.to_bytes()?),
        Artifact::new("abm_summary.json", json_bytes(&stats)?),
    ])
}

#[derive(Serialize)]
struct FitReport {
    #[serde(flatten)]
    fit: analysis::FitResult,
    skipped_rows: usize,
    is_inverted_u: bool,
}

fn fit_artifacts(cfg: &FitConfig) -> Result<Vec<Artifact>> {
    let cols = CountryColumns {
        id: cfg.id_col.clone(),
        inventory: cfg.y_col.clone(),
        eci: cfg.x_col.clone(),
    };
    let data = analysis::load_country_csv(&cfg.input, &cols)?;
    let report = analysis::country_report(&data.records)?;
    let out = FitReport {
        fit: report.fit,
        skipped_rows: data.skipped,
        is_inverted_u: report.is_inverted_u,
    };
    Ok(vec![Artifact::new("fit.json", json_bytes(&out)?)])
}

fn model_defaults(extra: Value) -> Value {
    let mut base = json!({ "eps": DEFAULT_EPS });
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

/// Resolves the configuration and computes every artifact of `cli`,
/// manifest last, without touching the file system.
pub fn build(cli: &Cli) -> Result<Vec<Artifact>> {
    let file = cli.config.as_deref().map(load_config_file).transpose()?;
    let file = file.as_ref();
    let mut o = Overrides::default();
    let (mut artifacts, resolved) = match &cli.command {
        Command::Portrait(a) => {
            a.model.overrides(&mut o);
            o.set("resolution", &a.resolution);
            let (c, v): (PortraitConfig, _) =
                resolve(model_defaults(json!({"resolution": 1000})), file, o.into_map())?;
            let p = params(c.alpha, c.beta, c.eps)?;
            (portrait_artifacts(&p, Policy::INSTANT_BEST_RESPONSE, c.resolution)?, v)
        }
        Command::Overshoot(a) => {
            a.model.overrides(&mut o);
            o.set("s", &a.s).set("resolution", &a.resolution);
            let (c, v): (OvershootConfig, _) =
                resolve(model_defaults(json!({"s": 2, "resolution": 1000})), file, o.into_map())?;
            let p = params(c.alpha, c.beta, c.eps)?;
            (portrait_artifacts(&p, Policy::Overshoot { s: c.s }, c.resolution)?, v)
        }
        Command::Trajectory(a) => {
            a.model.overrides(&mut o);
            o.set("f0", &a.f0)
                .set("t_end", &a.t_end)
                .set("dt", &a.dt)
                .set("commit", &a.commit)
                .set("policy", &a.policy)
                .set("s", &a.s)
                .set("strategy", &a.strategy)
                .set("sample_dt", &a.sample_dt)
                .set("transient", &a.transient);
            let defaults = model_defaults(json!({
                "f0": 0.5, "t_end": 200.0, "dt": 1e-3, "commit": 0.0,
                "policy": "best_response", "s": 2, "strategy": null,
                "sample_dt": 0.01, "transient": null,
            }));
            let (c, v): (TrajectoryConfig, _) = resolve(defaults, file, o.into_map())?;
            (trajectory_artifacts(&c)?, v)
        }
        Command::Diagram(a) => {
            o.set("beta", &a.model.beta).set("eps", &a.model.eps);
            if a.model.alpha.is_some() {
                return Err(Error::InvalidParameter(
                    "diagram scans alpha; use --alpha-grid".into(),
                ));
            }
            o.set("alpha_grid", &a.alpha_grid).set("f_grid", &a.f_grid);
            let defaults = model_defaults(json!({"alpha_grid": "0.01:0.5:50", "f_grid": "0:1:101"}));
            let (c, v): (DiagramConfig, _) = resolve(defaults, file, o.into_map())?;
            (diagram_artifacts(&c)?, v)
        }
        Command::Sweep(a) => {
            o.set("alpha", &a.model.alpha).set("eps", &a.model.eps);
            if a.model.beta.is_some() {
                return Err(Error::InvalidParameter("sweep scans beta; use --betas".into()));
            }
            o.set("betas", &a.betas).set("f_grid", &a.f_grid);
            let defaults = model_defaults(json!({
                "alpha": 0.1, "betas": [0.3, 0.35, 0.4, 0.45, 0.5], "f_grid": "0:1:1001",
            }));
            let (c, v): (SweepConfig, _) = resolve(defaults, file, o.into_map())?;
            (sweep_artifacts(&c)?, v)
        }
        Command::Abm(a) => {
            a.model.overrides(&mut o);
            o.set("n", &a.n)
                .set("r", &a.r)
                .set("xi", &a.xi)
                .set("f0", &a.f0)
                .set("t_end", &a.t_end)
                .set("sample_dt", &a.sample_dt)
                .set("replicas", &a.replicas)
                .set("seed", &a.seed)
                .set("policy", &a.policy)
                .set("strategy", &a.strategy);
            let defaults = model_defaults(json!({
                "n": 200, "r": 1.0, "xi": 0.0, "f0": 0.5, "t_end": 1000.0,
                "sample_dt": 1.0, "replicas": 100, "seed": DEFAULT_SEED,
                "policy": "best_response", "strategy": null,
            }));
            let (c, v): (AbmRunConfig, _) = resolve(defaults, file, o.into_map())?;
            (abm_artifacts(&c)?, v)
        }
        Command::Fit(a) => {
            o.set("input", &a.input)
                .set("x_col", &a.x_col)
                .set("y_col", &a.y_col)
                .set("id_col", &a.id_col);
            let defaults = json!({"x_col": "eci", "y_col": "inventory_days", "id_col": "country"});
            let (c, v): (FitConfig, _) = resolve(defaults, file, o.into_map())?;
            (fit_artifacts(&c)?, v)
        }
    };
    let m = manifest(cli.command.name(), &resolved, &artifacts)?;
    artifacts.push(m);
    Ok(artifacts)
}

/// Exit status for a failed run.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Domain { .. } | Error::InvalidParameter(_) => EXIT_USAGE,
        Error::Io(_) | Error::FileNotFound(_) => EXIT_IO,
        Error::InsufficientData(_)
        | Error::RankDeficient
        | Error::LengthMismatch { .. }
        | Error::MalformedHeader(_)
        | Error::AllRowsSkipped(_)
        | Error::Csv(_) => EXIT_DATA,
    }
}

fn configure_threads(threads: Option<usize>) {
    if let Some(n) = threads.filter(|&n| n > 0) {
        // A pool may already exist when called more than once in-process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Parses `args`, runs the command and writes its outputs. Returns the
/// process exit code; diagnostics go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    configure_threads(cli.threads);
    let result = build(&cli).and_then(|artifacts| {
        write_all(&cli.out_dir, &artifacts)?;
        Ok(artifacts.len())
    });
    match result {
        Ok(n) => {
            if cli.verbose {
                println!("{}: wrote {n} files to {}", cli.command.name(), cli.out_dir.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = exit_code(&e);
            if code == EXIT_USAGE {
                let mut cmd = Cli::command();
                if let Some(sub) = cmd.find_subcommand_mut(cli.command.name()) {
                    eprintln!("\n{}", sub.render_usage());
                }
            }
            code
        }
    }
}
