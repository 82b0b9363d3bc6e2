use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shallow-lake"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn default_solve_writes_one_row_per_node() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["solve", "--out", "o"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = fs::read_to_string(tmp.path().join("o/solution.csv")).unwrap();
    let mut data = csv.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(data.next(), Some("x,V,dV,u_star"));
    assert_eq!(data.count(), 1001);

    let report = json(&tmp.path().join("o/solve_report.json"));
    let config = json(&tmp.path().join("o/config.json"));
    let hash = report["config_hash"].as_str().unwrap();
    assert_eq!(config["config_hash"], hash);
    assert!(csv.starts_with(&format!("# config_hash={hash}\n")));
    assert_eq!(config["run"]["grid"]["n"], 1000);
    assert_eq!(report["report"]["converged"], true);
}

#[test]
fn infeasible_sigma_is_a_configuration_error() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["solve", "--sigma", "1.2", "--out", "o"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("infeasible"), "{}", stderr(&out));
}

#[test]
fn non_convergence_exits_3() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["solve", "--max-sweeps", "1", "--out", "o"]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn flat_diffusion_variant_is_selectable() {
    let tmp = TempDir::new().unwrap();
    let out = run(
        tmp.path(),
        &["solve", "--n", "200", "--scheme-diffusion", "flat", "--out", "o"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = json(&tmp.path().join("o/solve_report.json"));
    let v0 = report["summary"]["v0"].as_f64().unwrap();
    // independent dense reference for the flat form
    assert!((v0 - -78.72018718358959).abs() < 1e-9 * 78.7, "{v0}");

    let bad = run(tmp.path(), &["solve", "--scheme-diffusion", "cubic", "--out", "o"]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("run.toml"), "rho = 0.05\nn = 100\nsigma = 0.2\n").unwrap();
    let out = run(
        tmp.path(),
        &["--config", "run.toml", "solve", "--n", "50", "--out", "o"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let config = json(&tmp.path().join("o/config.json"));
    assert_eq!(config["run"]["params"]["rho"], 0.05);
    assert_eq!(config["run"]["params"]["sigma"], 0.2);
    assert_eq!(config["run"]["grid"]["n"], 50);

    fs::write(tmp.path().join("typo.toml"), "rhoo = 0.05\n").unwrap();
    let out = run(tmp.path(), &["--config", "typo.toml", "solve", "--out", "o"]);
    assert_eq!(code(&out), 2);
}

const QUICK_SIM: [&str; 6] = ["--paths", "500", "--t-max", "60", "--dt", "0.05"];

#[test]
fn feedback_policy_needs_a_solution_file() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["simulate", "--policy", "feedback", "--out", "o"]);
    assert_eq!(code(&out), 2);
    let out = run(
        tmp.path(),
        &["simulate", "--policy", "feedback:missing.csv", "--out", "o"],
    );
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("not found"));
}

#[test]
fn same_seed_gives_identical_json() {
    let tmp = TempDir::new().unwrap();
    let mut args = vec!["--seed", "5", "simulate", "--out", "a"];
    args.extend(QUICK_SIM);
    assert_eq!(code(&run(tmp.path(), &args)), 0);
    args[4] = "b";
    assert_eq!(code(&run(tmp.path(), &args)), 0);
    for file in ["estimate.json", "config.json"] {
        let a = fs::read(tmp.path().join("a").join(file)).unwrap();
        let b = fs::read(tmp.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
    args[1] = "6";
    args[4] = "c";
    assert_eq!(code(&run(tmp.path(), &args)), 0);
    let a = json(&tmp.path().join("a/estimate.json"));
    let c = json(&tmp.path().join("c/estimate.json"));
    assert_ne!(a["estimate"]["mean"], c["estimate"]["mean"]);
    assert_ne!(a["config_hash"], c["config_hash"]);
}

#[test]
fn benchmark_policy_runs_without_a_solution() {
    let tmp = TempDir::new().unwrap();
    let mut args = vec!["simulate", "--policy", "benchmark", "--dump-paths", "2", "--out", "o"];
    args.extend(QUICK_SIM);
    let out = run(tmp.path(), &args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let est = json(&tmp.path().join("o/estimate.json"));
    assert_eq!(est["policy"], "benchmark");
    assert_eq!(est["estimate"]["n_paths"], 500);
    let paths = fs::read_to_string(tmp.path().join("o/paths.csv")).unwrap();
    assert!(paths.starts_with(&format!("# config_hash={}\n", est["config_hash"].as_str().unwrap())));
    // two paths of 1200 steps each, plus the header
    assert_eq!(paths.lines().filter(|l| !l.starts_with('#')).count(), 1 + 2 * 1201);
}

#[test]
fn feedback_policy_from_a_solved_file() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&run(tmp.path(), &["solve", "--n", "400", "--out", "s"])), 0);
    let mut args = vec!["simulate", "--policy", "feedback", "--solution", "s/solution.csv", "--out", "o"];
    args.extend(QUICK_SIM);
    let out = run(tmp.path(), &args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(json(&tmp.path().join("o/estimate.json"))["policy"], "feedback");
}

const QUICK_VERIFY: [&str; 12] = [
    "--rho", "1", "--c", "2", "--sigma", "0.3", "verify", "--n", "400", "--paths", "1000", "--out",
];

#[test]
fn verify_passes_and_marks_skipped_checks() {
    let tmp = TempDir::new().unwrap();
    let mut args = QUICK_VERIFY.to_vec();
    args.extend(["o", "--dt", "0.02"]);
    let out = run(tmp.path(), &args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let printed: Value = serde_json::from_slice(&out.stdout).unwrap();
    let file = json(&tmp.path().join("o/checks.json"));
    assert_eq!(printed, file["checks"]);
    assert!(file["config_hash"].is_string());
    let checks = printed.as_array().unwrap();
    let status = |name: &str| {
        checks
            .iter()
            .find(|c| c["name"] == name)
            .unwrap_or_else(|| panic!("{name} missing"))["status"]
            .clone()
    };
    for name in ["value_bounds", "gradient_bounds", "asymptotics"] {
        assert_eq!(status(name), "skipped");
    }
    for name in ["feasibility", "boundary_identity", "kernel_identities", "control_optimality"] {
        assert_eq!(status(name), "pass");
    }
}

#[test]
fn verify_rejects_a_corrupted_solution() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&run(tmp.path(), &["solve", "--n", "100", "--out", "s"])), 0);
    let text = fs::read_to_string(tmp.path().join("s/solution.csv")).unwrap();
    // the value at node 3 becomes larger than at node 0
    let corrupted: Vec<String> = text
        .lines()
        .enumerate()
        .map(|(i, line)| if i == 6 { "0.3,-1.0,-1.0,1.0".to_string() } else { line.to_string() })
        .collect();
    fs::write(tmp.path().join("bad.csv"), corrupted.join("\n")).unwrap();
    let out = run(tmp.path(), &["verify", "--solution", "bad.csv", "--out", "o"]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    let checks = json(&tmp.path().join("o/checks.json"));
    assert_eq!(checks["checks"][0]["name"], "solution_file");
    assert_eq!(checks["checks"][0]["status"], "fail");

    fs::write(tmp.path().join("junk.csv"), "x,V\n0,abc\n").unwrap();
    let out = run(tmp.path(), &["verify", "--solution", "junk.csv", "--out", "o"]);
    assert_eq!(code(&out), 1);

    let out = run(tmp.path(), &["verify", "--solution", "absent.csv", "--out", "o"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn empty_sweep_axis_is_a_configuration_error() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["sweep", "--axis", "rho", "--values", "--out", "o"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    let out = run(tmp.path(), &["sweep", "--axis", "gamma", "--values", "1", "--out", "o"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn single_point_sweep_matches_solve() {
    let tmp = TempDir::new().unwrap();
    let solve = run(tmp.path(), &["--b", "0.7", "solve", "--n", "300", "--out", "s"]);
    assert_eq!(code(&solve), 0);
    let sweep = run(
        tmp.path(),
        &["sweep", "--n", "300", "--axis", "b", "--values", "0.7", "--out", "w"],
    );
    assert_eq!(code(&sweep), 0, "{}", stderr(&sweep));
    let solved = json(&tmp.path().join("s/solve_report.json"));
    let swept = json(&tmp.path().join("w/sweep.json"));
    assert_eq!(swept["rows"][0]["summary"], solved["summary"]);
    let point = fs::read_to_string(tmp.path().join("w/sweep/point_000.csv")).unwrap();
    let solution = fs::read_to_string(tmp.path().join("s/solution.csv")).unwrap();
    let body = |s: &str| s.lines().filter(|l| !l.starts_with('#')).map(String::from).collect::<Vec<_>>();
    assert_eq!(body(&point), body(&solution));
}

#[test]
fn sweep_continues_past_infeasible_points() {
    let tmp = TempDir::new().unwrap();
    let out = run(
        tmp.path(),
        &["sweep", "--n", "200", "--axis", "sigma", "--values", "0.1,1.5,0.2", "--out", "o"],
    );
    assert_eq!(code(&out), 1);
    let rows = json(&tmp.path().join("o/sweep.json"))["rows"].clone();
    assert_eq!(rows[0]["passed"], true);
    assert_eq!(rows[1]["passed"], false);
    assert!(rows[1]["message"].as_str().unwrap().contains("infeasible"));
    assert_eq!(rows[2]["passed"], true);
    let csv = fs::read_to_string(tmp.path().join("o/sweep.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("sigma,1.5,failed,")));
}

#[test]
fn sigma_ladder_sweep_feeds_the_noiseless_limit_check() {
    let tmp = TempDir::new().unwrap();
    let out = run(
        tmp.path(),
        &["sweep", "--n", "400", "--axis", "sigma", "--values", "0.2,0.1,0.05,0", "--out", "o"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let check = json(&tmp.path().join("o/sweep.json"))["sigma_limit"].clone();
    assert_eq!(check["name"], "sigma_limit");
    assert_eq!(check["status"], "pass");
}
