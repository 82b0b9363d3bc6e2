//! Python bindings: `import shallow_lake`.
//!
//! Configuration errors raise `shallow_lake.ConfigError` (a `ValueError`),
//! numerical failures raise `shallow_lake.SolverError` (a `RuntimeError`).
//! Long computations release the GIL.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use shallow_lake_core::config::{GridSpec, SolverSpec};
use shallow_lake_core::io::{write_solution_file, SolutionTable};
use shallow_lake_core::model::v0_upper_bound;
use shallow_lake_core::verify::{self, SuiteConfig};
use shallow_lake_core::{
    feedback_control, Error, Grid, LakeParams, PathConfig, Policy, SolveOptions, ValueFunction,
};

create_exception!(shallow_lake, ConfigError, PyValueError);
create_exception!(shallow_lake, SolverError, PyRuntimeError);

fn err(e: Error) -> PyErr {
    if e.is_config_error() {
        ConfigError::new_err(e.to_string())
    } else {
        SolverError::new_err(e.to_string())
    }
}

#[pyclass(name = "LakeParams", module = "shallow_lake", frozen, eq, from_py_object)]
#[derive(Clone, PartialEq)]
struct PyLakeParams(LakeParams);

#[pymethods]
impl PyLakeParams {
    #[new]
    #[pyo3(signature = (rho = 0.03, b = 0.65, c = 1.0, sigma = 0.1))]
    fn new(rho: f64, b: f64, c: f64, sigma: f64) -> PyResult<Self> {
        LakeParams::new(rho, b, c, sigma).map(Self).map_err(err)
    }

    #[staticmethod]
    fn standard() -> Self {
        Self(LakeParams::standard())
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.0.rho
    }

    #[getter]
    fn b(&self) -> f64 {
        self.0.b
    }

    #[getter]
    fn c(&self) -> f64 {
        self.0.c
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.0.sigma
    }

    fn feasible(&self) -> bool {
        self.0.feasible()
    }

    fn with_sigma(&self, sigma: f64) -> PyResult<Self> {
        Self::new(self.0.rho, self.0.b, self.0.c, sigma)
    }

    /// Closed-form upper bound on `V(0)`.
    fn v0_upper_bound(&self) -> PyResult<f64> {
        v0_upper_bound(&self.0).map_err(err)
    }

    fn __repr__(&self) -> String {
        let p = &self.0;
        format!("LakeParams(rho={}, b={}, c={}, sigma={})", p.rho, p.b, p.c, p.sigma)
    }
}

#[pyclass(name = "ValueFunction", module = "shallow_lake", frozen)]
struct PyValueFunction(Arc<ValueFunction>);

#[pymethods]
impl PyValueFunction {
    #[getter]
    fn params(&self) -> PyLakeParams {
        PyLakeParams(*self.0.params())
    }

    #[getter]
    fn l(&self) -> f64 {
        self.0.grid().l()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.grid().n()
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.0.xs()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    /// Forward differences; the last entry repeats the one before it.
    #[getter]
    fn slopes(&self) -> Vec<f64> {
        self.0.slopes().to_vec()
    }

    fn value_at(&self, x: f64) -> PyResult<f64> {
        self.0.value_at(x).map_err(err)
    }

    fn slope_at(&self, x: f64) -> PyResult<f64> {
        self.0.slope_at(x).map_err(err)
    }

    /// Optimal load `-1/V'(x)`.
    fn control(&self, x: f64) -> PyResult<f64> {
        feedback_control(&self.0, x).map_err(err)
    }

    #[pyo3(signature = (path, config_hash = ""))]
    fn write_csv(&self, path: PathBuf, config_hash: &str) -> PyResult<()> {
        write_solution_file(&path, &self.0, config_hash).map_err(err)
    }

    /// Reads and validates a solution CSV. `params` is used when the file
    /// has no parameter header.
    #[staticmethod]
    #[pyo3(signature = (path, params = None))]
    fn read_csv(path: PathBuf, params: Option<PyLakeParams>) -> PyResult<Self> {
        SolutionTable::read(&path)
            .and_then(|t| t.into_value_function(params.map(|p| p.0)))
            .map(|v| Self(Arc::new(v)))
            .map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.values().len()
    }

    fn __repr__(&self) -> String {
        format!(
            "ValueFunction(l={}, n={}, V(0)={})",
            self.0.grid().l(),
            self.0.grid().n(),
            self.0.values()[0]
        )
    }
}

#[pyclass(name = "SolveReport", module = "shallow_lake", frozen, get_all)]
struct PySolveReport {
    iterations: usize,
    final_residual: f64,
    last_update: f64,
    converged: bool,
    method: String,
    wall_time: f64,
}

fn solver_spec(
    tol: f64,
    max_sweeps: usize,
    method: &str,
    scheme_diffusion: &str,
    right_boundary: &str,
) -> PyResult<SolverSpec> {
    Ok(SolverSpec {
        tol,
        max_sweeps,
        method: method.parse().map_err(err)?,
        diffusion: scheme_diffusion.parse().map_err(err)?,
        right_boundary: right_boundary.parse().map_err(err)?,
    })
}

/// Solves the Bellman equation on `[0, l]` with `n` intervals.
#[pyfunction]
#[pyo3(signature = (
    params, l = 10.0, n = 1000, tol = 1e-10, max_sweeps = 200,
    method = "newton", scheme_diffusion = "x2", right_boundary = "slope",
))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    params: PyLakeParams,
    l: f64,
    n: usize,
    tol: f64,
    max_sweeps: usize,
    method: &str,
    scheme_diffusion: &str,
    right_boundary: &str,
) -> PyResult<(PyValueFunction, PySolveReport)> {
    let opts: SolveOptions = solver_spec(tol, max_sweeps, method, scheme_diffusion, right_boundary)?.options();
    let grid = Grid::new(l, n).map_err(err)?;
    let (v, r) = py
        .detach(|| shallow_lake_core::solve(&params.0, &grid, &opts))
        .map_err(err)?;
    let report = PySolveReport {
        iterations: r.iterations,
        final_residual: r.final_residual,
        last_update: r.last_update,
        converged: r.converged,
        method: r.method.to_string(),
        wall_time: r.wall_time,
    };
    Ok((PyValueFunction(Arc::new(v)), report))
}

#[pyclass(name = "Policy", module = "shallow_lake", frozen)]
struct PyPolicy(Policy);

#[pymethods]
impl PyPolicy {
    #[staticmethod]
    fn constant(u0: f64) -> PyResult<Self> {
        Policy::constant(u0).map(Self).map_err(err)
    }

    /// `u(x) = (1 + x)/(1 + x^2)`.
    #[staticmethod]
    fn benchmark() -> Self {
        Self(Policy::benchmark())
    }

    /// `u(x) = -1/V'(x)` from a solved value function.
    #[staticmethod]
    fn feedback(v: &PyValueFunction) -> Self {
        Self(Policy::feedback(Arc::clone(&v.0)))
    }

    fn control(&self, x: f64) -> PyResult<f64> {
        self.0.control(x).map_err(err)
    }

    #[getter]
    fn label(&self) -> String {
        self.0.label()
    }

    fn __repr__(&self) -> String {
        format!("Policy({})", self.0.label())
    }
}

#[pyclass(name = "McEstimate", module = "shallow_lake", frozen, get_all)]
struct PyMcEstimate {
    mean: f64,
    std_error: f64,
    n_paths: usize,
    tail_bound: f64,
    tail_factor: f64,
    t_max: f64,
    dt: f64,
    clamped_steps: usize,
}

#[pymethods]
impl PyMcEstimate {
    fn __repr__(&self) -> String {
        format!(
            "McEstimate(mean={}, std_error={}, n_paths={})",
            self.mean, self.std_error, self.n_paths
        )
    }
}

fn path_config(params: &LakeParams, t_max: Option<f64>, dt: f64, integrator: &str, seed: u64) -> PyResult<PathConfig> {
    let t_max = t_max.unwrap_or_else(|| PathConfig::default_horizon(params));
    PathConfig::new(t_max, dt, integrator.parse().map_err(err)?, seed).map_err(err)
}

/// Monte Carlo estimate of the discounted payoff of `policy` from `x0`.
/// `t_max=None` uses the default horizon for `params`.
#[pyfunction]
#[pyo3(signature = (
    x0, policy, params, paths = 10_000, t_max = None, dt = 0.01,
    integrator = "kernel", seed = 20_240_601,
))]
#[allow(clippy::too_many_arguments)]
fn mc_payoff(
    py: Python<'_>,
    x0: f64,
    policy: &PyPolicy,
    params: PyLakeParams,
    paths: usize,
    t_max: Option<f64>,
    dt: f64,
    integrator: &str,
    seed: u64,
) -> PyResult<PyMcEstimate> {
    let cfg = path_config(&params.0, t_max, dt, integrator, seed)?;
    let e = py
        .detach(|| shallow_lake_core::mc_payoff(x0, &policy.0, &cfg, paths, &params.0))
        .map_err(err)?;
    Ok(PyMcEstimate {
        mean: e.mean,
        std_error: e.std_error,
        n_paths: e.n_paths,
        tail_bound: e.tail_bound,
        tail_factor: e.tail_factor,
        t_max: e.t_max,
        dt: e.dt,
        clamped_steps: e.clamped_steps,
    })
}

#[pyclass(name = "Path", module = "shallow_lake", frozen, get_all)]
struct PyPath {
    t: Vec<f64>,
    x: Vec<f64>,
    u: Vec<f64>,
    z: Vec<f64>,
    clamped_steps: usize,
}

/// Path number `index` of the run seeded by `seed`.
#[pyfunction]
#[pyo3(signature = (
    x0, policy, params, t_max = 100.0, dt = 0.01, integrator = "kernel",
    seed = 20_240_601, index = 0,
))]
#[allow(clippy::too_many_arguments)]
fn simulate_path(
    x0: f64,
    policy: &PyPolicy,
    params: PyLakeParams,
    t_max: f64,
    dt: f64,
    integrator: &str,
    seed: u64,
    index: u64,
) -> PyResult<PyPath> {
    let cfg = path_config(&params.0, Some(t_max), dt, integrator, seed)?;
    let p = shallow_lake_core::sde::simulate_path_indexed(x0, &policy.0, &cfg, &params.0, index)
        .map_err(err)?;
    Ok(PyPath {
        t: p.t,
        x: p.x,
        u: p.u,
        z: p.z,
        clamped_steps: p.clamped_steps,
    })
}

#[pyclass(name = "CheckResult", module = "shallow_lake", frozen, get_all)]
struct PyCheckResult {
    name: String,
    /// `"pass"`, `"fail"` or `"skipped"`.
    status: String,
    passed: bool,
    observed: BTreeMap<String, f64>,
    required: String,
    detail: String,
}

impl From<verify::CheckResult> for PyCheckResult {
    fn from(r: verify::CheckResult) -> Self {
        let status = match r.status {
            verify::CheckStatus::Pass => "pass",
            verify::CheckStatus::Fail => "fail",
            verify::CheckStatus::Skipped => "skipped",
        };
        Self {
            name: r.name,
            status: status.into(),
            passed: r.passed,
            observed: r.observed,
            required: r.required,
            detail: r.detail,
        }
    }
}

#[pymethods]
impl PyCheckResult {
    fn __repr__(&self) -> String {
        format!("CheckResult({}: {})", self.name, self.status)
    }
}

#[pyfunction]
#[pyo3(signature = (v, tol = 1e-10))]
fn check_boundary_identity(v: &PyValueFunction, tol: f64) -> PyCheckResult {
    verify::check_boundary_identity(&v.0, tol).into()
}

#[pyfunction]
#[pyo3(signature = (v, extended = None))]
fn check_value_bounds(v: &PyValueFunction, extended: Option<&PyValueFunction>) -> PyCheckResult {
    verify::check_value_bounds(&v.0, extended.map(|e| e.0.as_ref())).into()
}

#[pyfunction]
fn check_gradient_bounds(v: &PyValueFunction) -> PyCheckResult {
    verify::check_gradient_bounds(&v.0).into()
}

#[pyfunction]
#[pyo3(signature = (v, extended = None))]
fn check_asymptotics(v: &PyValueFunction, extended: Option<&PyValueFunction>) -> PyCheckResult {
    verify::check_asymptotics(&v.0, extended.map(|e| e.0.as_ref())).into()
}

/// The full verification suite. Monte Carlo checks use `paths` paths on
/// `[0, t_max]` with step `dt`.
#[pyfunction]
#[pyo3(signature = (params, l = 10.0, n = 1000, paths = 10_000, t_max = 300.0, dt = 0.05, seed = 20_240_601))]
#[allow(clippy::too_many_arguments)]
fn run_suite(
    py: Python<'_>,
    params: PyLakeParams,
    l: f64,
    n: usize,
    paths: usize,
    t_max: f64,
    dt: f64,
    seed: u64,
) -> PyResult<Vec<PyCheckResult>> {
    let path = path_config(&params.0, Some(t_max), dt, "kernel", seed)?;
    let cfg = SuiteConfig::new(params.0, GridSpec { l, n }, SolverSpec::default(), path, paths);
    let checks = py.detach(|| verify::run_suite(&cfg, None)).map_err(err)?;
    Ok(checks.into_iter().map(Into::into).collect())
}

#[pymodule]
fn shallow_lake(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ConfigError", m.py().get_type::<ConfigError>())?;
    m.add("SolverError", m.py().get_type::<SolverError>())?;
    m.add_class::<PyLakeParams>()?;
    m.add_class::<PyValueFunction>()?;
    m.add_class::<PySolveReport>()?;
    m.add_class::<PyPolicy>()?;
    m.add_class::<PyMcEstimate>()?;
    m.add_class::<PyPath>()?;
    m.add_class::<PyCheckResult>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(mc_payoff, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_path, m)?)?;
    m.add_function(wrap_pyfunction!(check_boundary_identity, m)?)?;
    m.add_function(wrap_pyfunction!(check_value_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(check_gradient_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(check_asymptotics, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    Ok(())
}
