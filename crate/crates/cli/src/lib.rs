//! `lendgame` command-line interface.
//!
//! Exit codes: 0 success, 1 dynamics step error, 2 invalid input or flags,
//! 3 I/O failure, 4 iteration cap reached, 5 verification failure.

pub mod bench;
pub mod output;
pub mod scenario;
pub mod verify;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use lendgame_core::{run, DynamicsConfig, StrategyProfile, Termination, Variant};

pub const EXIT_OK: i32 = 0;
pub const EXIT_STEP_ERROR: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_ITERATION_CAP: i32 = 4;
pub const EXIT_VERIFY_FAILED: i32 = 5;

/// Directory for output files when no explicit path is given.
pub const OUT_DIR_ENV: &str = "LENDGAME_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lendgame", version, about = "Interbank lending game solver and simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the equilibrium of a scenario and write a JSON report.
    Solve(SolveArgs),
    /// Simulate learning dynamics and write the trajectory as CSV.
    Dynamics(DynamicsArgs),
    /// Check the model's invariants on a scenario or on random games.
    Verify(VerifyArgs),
    /// Time the equilibrium solver on a random game.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub scenario: PathBuf,
    /// Report path; defaults to `$LENDGAME_OUT_DIR/<name>.solution.json`, else stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DynamicsArgs {
    pub scenario: PathBuf,
    /// eager, randomised, pseudo-gradient or continuous.
    #[arg(long)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub stop_gap: Option<f64>,
    #[arg(long)]
    pub stop_residual: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub pg_step: Option<f64>,
    /// Comma-separated pseudo-gradient weights, one per lender.
    #[arg(long, value_delimiter = ',')]
    pub pg_weights: Option<Vec<f64>>,
    /// Comma-separated selection probabilities, one per lender.
    #[arg(long, value_delimiter = ',')]
    pub lender_weights: Option<Vec<f64>>,
    #[arg(long)]
    pub ode_step: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    /// Trajectory path; snapshots go next to it with a `.snapshots.csv` suffix.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Scenario to check; its initial profile, if any, must be a Nash equilibrium.
    #[arg(conflicts_with = "random", required_unless_present = "random")]
    pub scenario: Option<PathBuf>,
    /// Number of random games.
    #[arg(long)]
    pub random: Option<usize>,
    #[arg(long, default_value_t = 8)]
    pub max_m: usize,
    #[arg(long, default_value_t = 8)]
    pub max_n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Runs a parsed command and returns its exit code.
pub fn execute(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Dynamics(args) => cmd_dynamics(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Bench(args) => cmd_bench(&args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into())
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

fn env_out_dir() -> Option<PathBuf> {
    std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

pub fn cmd_solve(args: &SolveArgs) -> Result<i32, CliError> {
    let loaded = scenario::load(&args.scenario)?;
    let report = output::solve_report(&loaded.game, &loaded.scenario.description);
    let json = serde_json::to_string_pretty(&report).expect("report serialises") + "\n";
    let target = args
        .output
        .clone()
        .or_else(|| env_out_dir().map(|d| d.join(format!("{}.solution.json", stem(&args.scenario)))));
    match target {
        Some(path) => {
            write_file(&path, &json)?;
            println!("market rate {:.10} (kkt {})", report.market_rate, if report.kkt.passed { "passed" } else { "failed" });
            println!("report written to {}", path.display());
        }
        None => print!("{json}"),
    }
    Ok(EXIT_OK)
}

/// Scenario settings overlaid with any flags given on the command line.
pub fn dynamics_config(base: Option<DynamicsConfig>, args: &DynamicsArgs) -> DynamicsConfig {
    let mut c = base.unwrap_or_default();
    if let Some(v) = args.variant {
        c.variant = v;
    }
    if let Some(v) = args.alpha {
        c.alpha = v;
    }
    if let Some(v) = args.seed {
        c.seed = v;
    }
    if let Some(v) = args.stop_gap {
        c.stop_gap = v;
    }
    if let Some(v) = args.stop_residual {
        c.stop_residual = v;
    }
    if let Some(v) = args.max_iters {
        c.max_iters = v;
    }
    if let Some(v) = args.pg_step {
        c.pg_step = Some(v);
    }
    if let Some(v) = &args.pg_weights {
        c.pg_weights = Some(v.clone());
    }
    if let Some(v) = &args.lender_weights {
        c.lender_weights = Some(v.clone());
    }
    if let Some(v) = args.ode_step {
        c.ode_step = v;
    }
    if let Some(v) = args.horizon {
        c.horizon = v;
    }
    if let Some(v) = args.snapshot_every {
        c.snapshot_every = v;
    }
    c
}

/// `a/b/run.csv` -> `a/b/run.snapshots.csv`.
pub fn snapshot_path(trajectory: &Path) -> PathBuf {
    trajectory.with_file_name(format!("{}.snapshots.csv", stem(trajectory)))
}

pub fn cmd_dynamics(args: &DynamicsArgs) -> Result<i32, CliError> {
    let loaded = scenario::load(&args.scenario)?;
    let game = &loaded.game;
    let config = dynamics_config(loaded.scenario.dynamics.clone(), args);
    config
        .validate(game)
        .map_err(|e| CliError::invalid(format!("invalid dynamics settings: {e}")))?;
    let initial = loaded
        .initial_profile
        .clone()
        .unwrap_or_else(|| StrategyProfile::zeros_for(game));
    let trajectory = run(game, &initial, &config).map_err(|e| CliError::invalid(e.to_string()))?;

    let path = args.output.clone().unwrap_or_else(|| {
        env_out_dir()
            .unwrap_or_else(|| PathBuf::from("."))
            .join(format!("{}.{}.csv", stem(&args.scenario), config.variant))
    });
    write_file(&path, &output::trajectory_csv(&trajectory))?;
    let snapshots = snapshot_path(&path);
    write_file(&snapshots, &output::snapshots_csv(&trajectory))?;

    let status = match &trajectory.status {
        Termination::Converged => "converged",
        Termination::IterationCap => "iteration cap reached",
        Termination::StepError(_) => "step error",
    };
    println!("variant        {}", config.variant);
    println!("status         {status}");
    println!("iterations     {}", trajectory.iterations());
    println!("final gap      {:.6e}", trajectory.final_gap());
    println!("trajectory     {}", path.display());
    println!("snapshots      {}", snapshots.display());
    Ok(match trajectory.status {
        Termination::Converged => EXIT_OK,
        Termination::IterationCap => EXIT_ITERATION_CAP,
        Termination::StepError(msg) => {
            eprintln!("error: {msg}");
            EXIT_STEP_ERROR
        }
    })
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<i32, CliError> {
    if args.max_m == 0 || args.max_n == 0 {
        return Err(CliError::invalid("--max-m and --max-n must be at least 1"));
    }
    let report = match (&args.scenario, args.random) {
        (Some(path), _) => {
            let loaded = scenario::load(path)?;
            verify::verify_scenario(&loaded.game, loaded.initial_profile.as_ref(), args.seed)
        }
        (None, Some(count)) => verify::verify_random(count, args.max_m, args.max_n, args.seed),
        (None, None) => return Err(CliError::invalid("give a scenario or --random COUNT")),
    };
    print!("{}", report.table());
    match report.first_failure() {
        None => {
            println!("all properties passed");
            Ok(EXIT_OK)
        }
        Some(p) => {
            eprintln!("error: property {} failed (worst {:e} > {:e})", p.name, p.worst, p.tolerance);
            Ok(EXIT_VERIFY_FAILED)
        }
    }
}

pub fn cmd_bench(args: &BenchArgs) -> Result<i32, CliError> {
    if args.m == 0 || args.n == 0 || args.repeats == 0 {
        return Err(CliError::invalid("--m, --n and --repeats must be at least 1"));
    }
    let t = bench::time_solve(args.m, args.n, args.repeats, args.seed);
    println!("m={} n={} repeats={}", t.m, t.n, t.repeats);
    println!("mean {:.6} s", t.mean.as_secs_f64());
    println!("min  {:.6} s", t.min.as_secs_f64());
    Ok(EXIT_OK)
}
