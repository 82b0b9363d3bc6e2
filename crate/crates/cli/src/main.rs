//! `shallow-lake`: solve, simulate, verify and sweep from the command line.
//!
//! Exit codes: 0 success, 1 check failure, 2 configuration error,
//! 3 solver non-convergence.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use shallow_lake_core::config::{ConfigFile, RunConfig};
use shallow_lake_core::Error;

#[derive(Debug, Parser)]
#[command(name = "shallow-lake", version, about = "Welfare function of the stochastic shallow lake problem")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Key-value TOML config; flags override its entries.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    rho: Option<f64>,
    #[arg(long, global = true)]
    b: Option<f64>,
    #[arg(long, global = true)]
    c: Option<f64>,
    #[arg(long, global = true)]
    sigma: Option<f64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
struct SolverArgs {
    /// Right end of the truncated domain.
    #[arg(long)]
    l: Option<f64>,
    /// Number of grid intervals.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    /// `x2` or `flat`.
    #[arg(long)]
    scheme_diffusion: Option<String>,
    /// `slope` or `value`.
    #[arg(long)]
    right_boundary: Option<String>,
    /// `newton` or `gauss-seidel`.
    #[arg(long)]
    method: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
struct SimArgs {
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    paths: Option<usize>,
    /// `kernel` or `euler`.
    #[arg(long)]
    integrator: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the Bellman equation; writes solution.csv and solve_report.json.
    Solve {
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Monte Carlo payoff of a policy; writes estimate.json.
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        /// `constant:U0`, `benchmark`, `feedback` or `feedback:FILE`.
        #[arg(long, default_value = "benchmark")]
        policy: String,
        /// Solution CSV for the feedback policy.
        #[arg(long, value_name = "FILE")]
        solution: Option<PathBuf>,
        /// Also write the first K paths to paths.csv.
        #[arg(long, value_name = "K")]
        dump_paths: Option<usize>,
    },
    /// Run the verification suite; writes checks.json.
    Verify {
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// Check this solution CSV instead of solving.
        #[arg(long, value_name = "FILE")]
        solution: Option<PathBuf>,
    },
    /// Solve along one parameter axis; writes sweep.csv and sweep.json.
    Sweep {
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated parameter values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
enum Axis {
    Rho,
    B,
    C,
    Sigma,
}

/// Defaults, then the config file, then flags.
fn run_config(global: &GlobalArgs, solver: &SolverArgs, sim: &SimArgs) -> shallow_lake_core::Result<RunConfig> {
    let mut cfg = match &global.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(&ConfigFile {
        rho: global.rho,
        b: global.b,
        c: global.c,
        sigma: global.sigma,
        l: solver.l,
        n: solver.n,
        tol: solver.tol,
        max_sweeps: solver.max_sweeps,
        method: solver.method.clone(),
        scheme_diffusion: solver.scheme_diffusion.clone(),
        right_boundary: solver.right_boundary.clone(),
        x0: sim.x0,
        t_max: sim.t_max,
        dt: sim.dt,
        paths: sim.paths,
        integrator: sim.integrator.clone(),
        seed: global.seed,
    })?;
    Ok(cfg)
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::NoConvergence(_) | Error::Internal(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve { solver } => run_config(&cli.global, solver, &SimArgs::default())
            .and_then(|cfg| commands::solve(&cfg, &cli.global.out)),
        Command::Simulate {
            sim,
            policy,
            solution,
            dump_paths,
        } => run_config(&cli.global, &SolverArgs::default(), sim).and_then(|cfg| {
            commands::simulate(&cfg, &cli.global.out, policy, solution.as_deref(), *dump_paths)
        }),
        Command::Verify {
            solver,
            sim,
            solution,
        } => run_config(&cli.global, solver, sim)
            .and_then(|cfg| commands::verify(&cfg, &cli.global.out, solution.as_deref())),
        Command::Sweep {
            solver,
            axis,
            values,
        } => run_config(&cli.global, solver, &SimArgs::default())
            .and_then(|cfg| commands::sweep(&cfg, &cli.global.out, *axis, values)),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
