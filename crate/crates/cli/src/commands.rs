//! The four subcommands. Each returns the process exit code on completion
//! and an error for configuration or solver failures.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use shallow_lake_core::config::{content_hash, GridSpec, RunConfig};
use shallow_lake_core::io::{write_json, write_solution_file, SolutionTable};
use shallow_lake_core::sde::simulate_path_indexed;
use shallow_lake_core::verify::{
    asymptotic_residual, run_suite, sigma_limit_from_solutions, CheckResult, SuiteConfig,
};
use shallow_lake_core::{
    mc_payoff, Error, LakeParams, McEstimate, PathConfig, Policy, Result, SolveReport, ValueFunction,
};

use crate::Axis;

/// Longest default horizon for the Monte Carlo checks of `verify`.
const VERIFY_HORIZON: f64 = 300.0;

/// What a run was asked to do. Its hash identifies every output of the run.
#[derive(Serialize)]
struct Echo<'a, T: Serialize> {
    command: &'static str,
    run: &'a RunConfig,
    options: T,
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    config_hash: &'a str,
    #[serde(flatten)]
    body: T,
}

/// Creates `out`, writes `config.json` and returns the config hash.
fn prepare<T: Serialize>(out: &Path, echo: &Echo<'_, T>) -> Result<String> {
    fs::create_dir_all(out)?;
    let hash = content_hash(echo);
    write_json(
        &out.join("config.json"),
        &Stamped {
            config_hash: &hash,
            body: echo,
        },
    )?;
    Ok(hash)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Summary {
    v0: f64,
    dv0: f64,
    u_star0: f64,
    /// Sup of `|V - expansion|` on `[l/2, l]`; absent unless `c = 1`.
    tail_residual: Option<f64>,
    iterations: usize,
}

impl Summary {
    fn of(v: &ValueFunction, report: &SolveReport) -> Self {
        let l = v.grid().l();
        let dv0 = v.slopes()[0];
        Self {
            v0: v.values()[0],
            dv0,
            u_star0: -1.0 / dv0,
            tail_residual: asymptotic_residual(v, 0.5 * l, l).ok(),
            iterations: report.iterations,
        }
    }
}

pub fn solve(cfg: &RunConfig, out: &Path) -> Result<u8> {
    let hash = prepare(
        out,
        &Echo {
            command: "solve",
            run: cfg,
            options: (),
        },
    )?;
    let (v, report) = shallow_lake_core::solve(&cfg.params, &cfg.grid.build()?, &cfg.solver.options())?;
    info!(
        "converged in {} iterations, {:.3}s",
        report.iterations, report.wall_time
    );
    write_solution_file(&out.join("solution.csv"), &v, &hash)?;
    let summary = Summary::of(&v, &report);
    println!(
        "V(0) = {}  V'(0) = {}  u*(0) = {}",
        summary.v0, summary.dv0, summary.u_star0
    );

    #[derive(Serialize)]
    struct Output {
        report: SolveReport,
        summary: Summary,
    }
    write_json(
        &out.join("solve_report.json"),
        &Stamped {
            config_hash: &hash,
            body: Output { report, summary },
        },
    )?;
    Ok(0)
}

fn load_solution(path: &Path, params: LakeParams) -> Result<ValueFunction> {
    if !path.is_file() {
        return Err(Error::Config(format!("solution file `{}` not found", path.display())));
    }
    let v = SolutionTable::read(path)?.into_value_function(Some(params))?;
    if *v.params() != params {
        warn!(
            "solution file was computed for {:?}, simulating with {:?}",
            v.params(),
            params
        );
    }
    Ok(v)
}

fn parse_policy(spec: &str, solution: Option<&Path>, params: LakeParams) -> Result<Policy> {
    let (kind, arg) = match spec.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (spec, None),
    };
    match (kind, arg) {
        ("benchmark", None) => Ok(Policy::benchmark()),
        ("constant", Some(u)) => {
            let u0 = u
                .parse()
                .map_err(|_| Error::Config(format!("bad constant load `{u}`")))?;
            Policy::constant(u0)
        }
        ("feedback", Some(file)) => Ok(Policy::feedback(load_solution(Path::new(file), params)?)),
        ("feedback", None) => match solution {
            Some(file) => Ok(Policy::feedback(load_solution(file, params)?)),
            None => Err(Error::Config(
                "feedback policy needs a solution file (--solution FILE or feedback:FILE)".into(),
            )),
        },
        _ => Err(Error::Config(format!(
            "unknown policy `{spec}` (expected constant:U0, benchmark or feedback[:FILE])"
        ))),
    }
}

pub fn simulate(
    cfg: &RunConfig,
    out: &Path,
    policy_spec: &str,
    solution: Option<&Path>,
    dump_paths: Option<usize>,
) -> Result<u8> {
    #[derive(Serialize)]
    struct Options<'a> {
        policy: &'a str,
        solution: Option<&'a Path>,
        dump_paths: Option<usize>,
    }
    let policy = parse_policy(policy_spec, solution, cfg.params)?;
    let path_cfg = cfg.sim.path_config(&cfg.params)?;
    let hash = prepare(
        out,
        &Echo {
            command: "simulate",
            run: cfg,
            options: Options {
                policy: policy_spec,
                solution,
                dump_paths,
            },
        },
    )?;
    let estimate = mc_payoff(cfg.sim.x0, &policy, &path_cfg, cfg.sim.paths, &cfg.params)?;
    println!(
        "payoff = {} +/- {} (tail bound {})",
        estimate.mean, estimate.std_error, estimate.tail_bound
    );

    #[derive(Serialize)]
    struct Output {
        policy: String,
        x0: f64,
        estimate: McEstimate,
    }
    write_json(
        &out.join("estimate.json"),
        &Stamped {
            config_hash: &hash,
            body: Output {
                policy: policy.label(),
                x0: cfg.sim.x0,
                estimate,
            },
        },
    )?;

    if let Some(k) = dump_paths {
        let mut w = BufWriter::new(File::create(out.join("paths.csv"))?);
        writeln!(w, "# config_hash={hash}")?;
        writeln!(w, "path,t,x,u,z")?;
        for index in 0..k as u64 {
            let p = simulate_path_indexed(cfg.sim.x0, &policy, &path_cfg, &cfg.params, index)?;
            for i in 0..p.t.len() {
                writeln!(w, "{index},{},{},{},{}", p.t[i], p.x[i], p.u[i], p.z[i])?;
            }
        }
        w.flush()?;
    }
    Ok(0)
}

/// Writes `checks.json`, prints the result array to stdout and one line per
/// check to stderr.
fn emit_checks(out: &Path, hash: &str, checks: &[CheckResult]) -> Result<u8> {
    #[derive(Serialize)]
    struct Output<'a> {
        checks: &'a [CheckResult],
    }
    write_json(
        &out.join("checks.json"),
        &Stamped {
            config_hash: hash,
            body: Output { checks },
        },
    )?;
    println!("{}", serde_json::to_string_pretty(checks)?);
    for c in checks {
        eprintln!("{}", c.summary_line());
    }
    Ok(u8::from(checks.iter().any(CheckResult::is_failure)))
}

pub fn verify(cfg: &RunConfig, out: &Path, solution: Option<&Path>) -> Result<u8> {
    #[derive(Serialize)]
    struct Options<'a> {
        solution: Option<&'a Path>,
    }
    let hash = prepare(
        out,
        &Echo {
            command: "verify",
            run: cfg,
            options: Options { solution },
        },
    )?;
    let solution = match solution {
        None => None,
        Some(path) => {
            if !path.is_file() {
                return Err(Error::Config(format!("solution file `{}` not found", path.display())));
            }
            match SolutionTable::read(path).and_then(|t| t.into_value_function(Some(cfg.params))) {
                Ok(v) => Some(v),
                Err(Error::Io(e)) => return Err(Error::Io(e)),
                Err(e) => {
                    let check = CheckResult::failed("solution_file", e.to_string());
                    return emit_checks(out, &hash, &[check]);
                }
            }
        }
    };

    let params = solution.as_ref().map_or(cfg.params, |v| *v.params());
    let grid = match &solution {
        Some(v) => GridSpec {
            l: v.grid().l(),
            n: v.grid().n(),
        },
        None => cfg.grid.clone(),
    };
    let t_max = cfg
        .sim
        .t_max
        .unwrap_or_else(|| PathConfig::default_horizon(&params).min(VERIFY_HORIZON));
    let path = PathConfig::new(t_max, cfg.sim.dt, cfg.sim.integrator, cfg.sim.seed)?;
    let suite = SuiteConfig::new(params, grid, cfg.solver.clone(), path, cfg.sim.paths);
    let checks = run_suite(&suite, solution)?;
    emit_checks(out, &hash, &checks)
}

#[derive(Debug, Clone, Serialize)]
struct SweepRow {
    value: f64,
    passed: bool,
    summary: Option<Summary>,
    message: String,
    solution_file: Option<PathBuf>,
}

fn with_axis(params: LakeParams, axis: Axis, value: f64) -> Result<LakeParams> {
    let (mut rho, mut b, mut c, mut sigma) = (params.rho, params.b, params.c, params.sigma);
    match axis {
        Axis::Rho => rho = value,
        Axis::B => b = value,
        Axis::C => c = value,
        Axis::Sigma => sigma = value,
    }
    LakeParams::new(rho, b, c, sigma)
}

fn csv_field(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn sweep(cfg: &RunConfig, out: &Path, axis: Axis, values: &[f64]) -> Result<u8> {
    if values.is_empty() {
        return Err(Error::Config("sweep axis has no values".into()));
    }
    #[derive(Serialize)]
    struct Options<'a> {
        axis: Axis,
        values: &'a [f64],
    }
    let hash = prepare(
        out,
        &Echo {
            command: "sweep",
            run: cfg,
            options: Options { axis, values },
        },
    )?;
    let grid = cfg.grid.build()?;
    let opts = cfg.solver.options();
    let points_dir = out.join("sweep");
    fs::create_dir_all(&points_dir)?;

    // each point writes only its own file
    let results: Vec<(SweepRow, Option<ValueFunction>)> = values
        .par_iter()
        .enumerate()
        .map(|(k, &value)| {
            let file = points_dir.join(format!("point_{k:03}.csv"));
            let solved = with_axis(cfg.params, axis, value).and_then(|p| {
                let (v, report) = shallow_lake_core::solve(&p, &grid, &opts)?;
                write_solution_file(&file, &v, &hash)?;
                Ok((v, report))
            });
            match solved {
                Ok((v, report)) => (
                    SweepRow {
                        value,
                        passed: true,
                        summary: Some(Summary::of(&v, &report)),
                        message: String::new(),
                        solution_file: Some(file),
                    },
                    Some(v),
                ),
                Err(e) => (
                    SweepRow {
                        value,
                        passed: false,
                        summary: None,
                        message: e.to_string(),
                        solution_file: None,
                    },
                    None,
                ),
            }
        })
        .collect();

    let mut w = csv_writer(&out.join("sweep.csv"), &hash)?;
    w.write_record([
        "axis", "value", "status", "v0", "dv0", "tail_residual", "iterations", "message",
    ])
    .map_err(Error::from)?;
    for (row, _) in &results {
        let s = row.summary.as_ref();
        w.write_record([
            format!("{axis:?}").to_lowercase(),
            row.value.to_string(),
            if row.passed { "ok" } else { "failed" }.to_string(),
            csv_field(s.map(|s| s.v0)),
            csv_field(s.map(|s| s.dv0)),
            csv_field(s.and_then(|s| s.tail_residual)),
            s.map(|s| s.iterations.to_string()).unwrap_or_default(),
            row.message.clone(),
        ])?;
        if !row.passed {
            eprintln!("point {} = {} failed: {}", format!("{axis:?}").to_lowercase(), row.value, row.message);
        }
    }
    w.flush()?;

    // a sigma ladder ending at zero doubles as the noiseless-limit check
    let sigma_limit = match axis {
        Axis::Sigma if results.len() >= 2 && values.last() == Some(&0.0) => {
            let solved: Option<Vec<(f64, ValueFunction)>> = results
                .iter()
                .map(|(row, v)| v.clone().map(|v| (row.value, v)))
                .collect();
            solved.map(|rungs| {
                let reference = rungs[rungs.len() - 1].1.clone();
                sigma_limit_from_solutions(&reference, &rungs)
            })
        }
        _ => None,
    };
    if let Some(check) = &sigma_limit {
        eprintln!("{}", check.summary_line());
    }

    let rows: Vec<SweepRow> = results.into_iter().map(|(row, _)| row).collect();
    #[derive(Serialize)]
    struct Output<'a> {
        axis: Axis,
        rows: &'a [SweepRow],
        sigma_limit: Option<&'a CheckResult>,
    }
    write_json(
        &out.join("sweep.json"),
        &Stamped {
            config_hash: &hash,
            body: Output {
                axis,
                rows: &rows,
                sigma_limit: sigma_limit.as_ref(),
            },
        },
    )?;
    let failed = rows.iter().any(|r| !r.passed) || sigma_limit.is_some_and(|c| c.is_failure());
    Ok(u8::from(failed))
}

fn csv_writer(path: &Path, hash: &str) -> Result<csv::Writer<BufWriter<File>>> {
    let mut file = BufWriter::new(File::create(path)?);
    writeln!(file, "# config_hash={hash}")?;
    Ok(csv::Writer::from_writer(file))
}
