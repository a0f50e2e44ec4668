use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use avgrew_core::envs::{AccessControlParams, TabularEnv};
use avgrew_core::harness::{
    run_plan, solve_command, sweep, Algorithm, ExperimentConfig, ScheduleShape, SolveTarget, SweepSpec,
};
use avgrew_core::planning::SelectorKind;
use avgrew_core::{Error, Result};

#[derive(Parser)]
#[command(name = "avgrew", version, about = "Average-reward learning experiments and exact solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact reward rate, stationary distribution and values.
    Solve(SolveArgs),
    /// Independent seeded runs of one configuration; CSV log output.
    Run(RunArgs),
    /// Cross-product parameter sweep; summary table plus per-cell logs.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    env: String,
    /// JSON object of environment parameters.
    #[arg(long)]
    env_params: Option<String>,
    /// Policy spec: uniform, always:K, probs:P0,P1,.., optimal, eps_optimal:E.
    #[arg(long, conflicts_with = "optimal")]
    policy: Option<String>,
    /// Solve for the optimal reward rate.
    #[arg(long)]
    optimal: bool,
    /// Write the JSON report here; `-` prints it instead of the table.
    #[arg(long)]
    json: Option<PathBuf>,
}

/// Flags that override fields of the configuration file.
#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    env_params: Option<String>,
    #[arg(long)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// constant, exp_decay:FACTOR or per_pair_count:EXPONENT.
    #[arg(long)]
    alpha_schedule: Option<ScheduleShape>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// mean, max or pair:S-A.
    #[arg(long)]
    reference: Option<String>,
    #[arg(long)]
    target_policy: Option<String>,
    #[arg(long)]
    behavior_policy: Option<String>,
    #[arg(long)]
    selector: Option<SelectorKind>,
    #[arg(long)]
    tie_eps: Option<f64>,
    #[arg(long)]
    tilings: Option<usize>,
    #[arg(long)]
    tiles: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    /// Base seed; falls back to the config file, then AVGREW_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eval_every: Option<usize>,
    /// Comma-separated: rmsve_tvr, rmsve_plain, rre, rbar, window_rate(W).
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<String>>,
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    /// Worker threads (default: available cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// CSV destination (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-run summaries as JSON.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON sweep file: {"base": {..}, "grid": {..}}.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Grid axis `name=v1,v2,..`; repeatable.
    #[arg(long = "grid")]
    grid: Vec<String>,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long)]
    jobs: Option<usize>,
    /// Summary table destination (default: stdout).
    #[arg(long)]
    table: Option<PathBuf>,
    /// Directory for one run-log CSV per cell.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_solver_error() {
        3
    } else if matches!(e, Error::Io(_)) {
        1
    } else {
        2
    }
}

fn parse_json(text: &str, what: &str) -> Result<serde_json::Value> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("{what}: {e}")))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) if p != Path::new("-") => Ok(fs::write(p, text)?),
        _ => emit(text),
    }
}

/// Writes to stdout; a closed pipe is not an error.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn cmd_solve(a: SolveArgs) -> Result<()> {
    let mut env: TabularEnv = a.env.parse()?;
    if let Some(p) = &a.env_params {
        match &mut env {
            TabularEnv::AccessControl(params) => {
                *params = serde_json::from_value::<AccessControlParams>(parse_json(p, "env-params")?)
                    .map_err(|e| Error::Config(format!("env-params: {e}")))?;
                params.validate()?;
            }
            _ => return Err(Error::Config(format!("{} takes no parameters", env.name()))),
        }
    }
    let target = match (&a.policy, a.optimal) {
        (_, true) => SolveTarget::Optimal,
        (Some(p), false) => SolveTarget::Policy(p.parse()?),
        (None, false) => return Err(Error::Config("give --policy SPEC or --optimal".into())),
    };
    let report = solve_command(&env, &target)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    match a.json.as_deref() {
        Some(p) if p == Path::new("-") => emit(&(report.to_json() + "\n"))?,
        Some(p) => {
            fs::write(p, report.to_json() + "\n")?;
            emit(&report.to_table())?;
        }
        None => emit(&report.to_table())?,
    }
    Ok(())
}

/// Applies file, then environment seed, then flags.
fn build_config(file: Option<&Path>, o: &Overrides) -> Result<ExperimentConfig> {
    let mut doc = match file {
        Some(p) => parse_json(&fs::read_to_string(p)?, &p.display().to_string())?,
        None => serde_json::json!({}),
    };
    if !doc.is_object() {
        return Err(Error::Config("configuration must be a JSON object".into()));
    }
    if doc.get("seed").is_none() {
        if let Some(seed) = env_seed()? {
            doc["seed"] = seed.into();
        }
    }
    let mut cfg: ExperimentConfig = serde_json::from_value(doc).map_err(|e| Error::Config(format!("config: {e}")))?;
    apply_overrides(&mut cfg, o)?;
    Ok(cfg)
}

fn apply_overrides(cfg: &mut ExperimentConfig, o: &Overrides) -> Result<()> {
    macro_rules! set {
        ($field:ident) => {
            if let Some(v) = &o.$field {
                cfg.$field = v.clone();
            }
        };
        (opt $field:ident) => {
            if let Some(v) = &o.$field {
                cfg.$field = Some(v.clone());
            }
        };
    }
    set!(env);
    if let Some(p) = &o.env_params {
        cfg.env_params = Some(parse_json(p, "env-params")?);
    }
    set!(algorithm);
    set!(alpha);
    set!(opt eta);
    set!(opt beta);
    set!(opt kappa);
    set!(alpha_schedule);
    set!(epsilon);
    set!(opt reference);
    set!(opt target_policy);
    set!(opt behavior_policy);
    set!(selector);
    set!(tie_eps);
    set!(tilings);
    set!(tiles);
    set!(steps);
    set!(runs);
    set!(seed);
    set!(eval_every);
    set!(metrics);
    Ok(())
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let cfg = build_config(a.config.as_deref(), &a.overrides)?;
    let plan = cfg.plan()?;
    let log = run_plan(&plan, a.jobs)?;
    write_out(a.out.as_deref(), &log.to_csv())?;
    if let Some(p) = &a.summary {
        fs::write(p, serde_json::to_string_pretty(&log.runs).expect("summaries serialize") + "\n")?;
    }
    for r in &log.runs {
        eprintln!(
            "run {:>3}  seed {:>20}  {:<9}  steps {:>8}  mean reward {:.6}  rbar {:.6}",
            r.run,
            r.seed,
            format!("{:?}", r.status).to_lowercase(),
            r.steps_done,
            r.mean_reward,
            r.final_rbar
        );
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let mut doc = match &a.config {
        Some(p) => parse_json(&fs::read_to_string(p)?, &p.display().to_string())?,
        None => serde_json::json!({}),
    };
    if !doc.is_object() {
        return Err(Error::Config("sweep file must be a JSON object".into()));
    }
    if doc.get("base").is_none() {
        doc["base"] = serde_json::json!({});
    }
    if doc["base"].get("seed").is_none() {
        if let Some(seed) = env_seed()? {
            doc["base"]["seed"] = seed.into();
        }
    }
    let mut spec: SweepSpec = serde_json::from_value(doc).map_err(|e| Error::Config(format!("sweep: {e}")))?;
    apply_overrides(&mut spec.base, &a.overrides)?;
    for axis in &a.grid {
        spec.add_axis(axis)?;
    }
    let result = sweep(&spec, a.jobs)?;
    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir)?;
        for (cell, log) in result.cells.iter().zip(&result.logs) {
            fs::write(dir.join(format!("{}.csv", cell.file_stem())), log.to_csv())?;
        }
    }
    write_out(a.table.as_deref(), &result.table_csv())
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var("AVGREW_SEED") {
        Ok(s) => s.trim().parse().map(Some).map_err(|_| Error::Config(format!("AVGREW_SEED '{s}' is not a u64"))),
        Err(_) => Ok(None),
    }
}
