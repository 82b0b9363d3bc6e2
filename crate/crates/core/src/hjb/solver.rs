use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{monotonicity_check, tail_slope, DiffusionForm, Grid, NodeEquation, Scheme, ValueFunction};
use crate::error::{Error, Result};
use crate::model::{v0_upper_bound, LakeParams};

/// Closure of the grid at `x = l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RightBoundary {
    /// The last node carries the scheme equation with a ghost node
    /// `V_{n+1} = V_n + dx * V'_asym(l + dx/2)`, the slope of the large-state
    /// expansion.
    #[default]
    AsymptoticSlope,
    /// `V_n` is pinned to the large-state expansion itself (`c = 1` only).
    AsymptoticValue,
}

impl std::str::FromStr for RightBoundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slope" => Ok(Self::AsymptoticSlope),
            "value" => Ok(Self::AsymptoticValue),
            other => Err(Error::Config(format!(
                "unknown right boundary `{other}` (expected slope or value)"
            ))),
        }
    }
}

impl std::fmt::Display for RightBoundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::AsymptoticSlope => "slope",
            Self::AsymptoticValue => "value",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    /// Damped Newton on the whole tridiagonal system.
    #[default]
    Newton,
    /// Nonlinear Gauss-Seidel, right to left, one safeguarded scalar root per node.
    GaussSeidel,
}

impl std::str::FromStr for SolverMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "newton" => Ok(Self::Newton),
            "gauss-seidel" | "gauss_seidel" | "gs" => Ok(Self::GaussSeidel),
            other => Err(Error::Config(format!(
                "unknown solver method `{other}` (expected newton or gauss-seidel)"
            ))),
        }
    }
}

impl std::fmt::Display for SolverMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Newton => "newton",
            Self::GaussSeidel => "gauss-seidel",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Bound on the sup-norm of the (dx^2-scaled) node residuals.
    pub tol: f64,
    /// Newton iterations or Gauss-Seidel sweeps.
    pub max_sweeps: usize,
    pub method: SolverMethod,
    pub diffusion: DiffusionForm,
    pub right_boundary: RightBoundary,
    /// Initial node values; defaults to the large-state expansion profile.
    #[serde(skip)]
    pub init: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_sweeps: 200,
            method: SolverMethod::Newton,
            diffusion: DiffusionForm::X2,
            right_boundary: RightBoundary::AsymptoticSlope,
            init: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_residual: f64,
    /// Sup-norm of the last update.
    pub last_update: f64,
    pub converged: bool,
    pub method: SolverMethod,
    /// Seconds. Not serialised so that reports are reproducible byte for byte.
    #[serde(skip)]
    pub wall_time: f64,
}

/// Extra Newton steps taken after the tolerance is met, kept only while they
/// reduce the residual further.
const POLISH_STEPS: usize = 3;

/// Solves the discrete Bellman equation on `grid`.
///
/// The scheme equation is imposed at every node `0..n` (at `x = 0` all
/// left-neighbour coefficients vanish). The last node is closed according
/// to [`SolveOptions::right_boundary`].
pub fn solve(
    params: &LakeParams,
    grid: &Grid,
    opts: &SolveOptions,
) -> Result<(ValueFunction, SolveReport)> {
    let start = Instant::now();
    params.ensure_feasible()?;
    let mono = monotonicity_check(params, grid, opts.diffusion);
    if !mono.ok {
        return Err(Error::NotMonotone {
            x: mono.worst_x.unwrap_or(f64::NAN),
            margin: mono.worst_margin.unwrap_or(f64::NAN),
        });
    }
    if grid.l() < 5.0 {
        log::warn!(
            "right endpoint l = {} is small; the large-state closure may be inaccurate",
            grid.l()
        );
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: opts.tol,
            reason: "must be > 0",
        });
    }

    let system = System::new(params, grid, opts)?;
    let mut values = match &opts.init {
        Some(init) => {
            if init.len() != grid.len() {
                return Err(Error::Config(format!(
                    "initial guess has {} values, grid has {} nodes",
                    init.len(),
                    grid.len()
                )));
            }
            init.clone()
        }
        None => system.profile(),
    };
    if let Some(pinned) = system.pinned {
        values[grid.n()] = pinned;
    }
    if !strictly_decreasing(&values) {
        return Err(Error::Config(
            "initial guess must be strictly decreasing".into(),
        ));
    }

    let mut report = match opts.method {
        SolverMethod::Newton => system.newton(&mut values, opts)?,
        SolverMethod::GaussSeidel => system.gauss_seidel(&mut values, opts)?,
    };
    report.wall_time = start.elapsed().as_secs_f64();
    if !report.converged {
        return Err(Error::NoConvergence(Box::new(report)));
    }
    let v = ValueFunction::new(*grid, values, *params)
        .map_err(|e| Error::Internal(format!("solver produced an invalid value function: {e}")))?;
    Ok((v, report))
}

fn strictly_decreasing(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite()) && values.windows(2).all(|w| w[1] < w[0])
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, r| m.max(r.abs()))
}

struct System {
    scheme: Scheme,
    grid: Grid,
    /// Pinned value of the last node, if any.
    pinned: Option<f64>,
    /// Ghost slope closing the last node otherwise.
    ghost_slope: f64,
}

struct Linearisation {
    residual: Vec<f64>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl System {
    fn new(params: &LakeParams, grid: &Grid, opts: &SolveOptions) -> Result<Self> {
        let l = grid.l();
        let dx = grid.dx();
        let scheme = Scheme::new(*params, dx, opts.diffusion);
        match opts.right_boundary {
            RightBoundary::AsymptoticSlope => Ok(Self {
                scheme,
                grid: *grid,
                pinned: None,
                ghost_slope: tail_slope(l + 0.5 * dx, params)?,
            }),
            RightBoundary::AsymptoticValue => {
                let expansion = params.asymptotics()?;
                let pinned = expansion.value(l);
                // V(l) <= V(0) - A l^2 <= v0 bound - A l^2; a pin above this has no
                // strictly decreasing discrete solution worth the name.
                let ceiling = v0_upper_bound(params)? - expansion.a * l * l;
                if pinned >= ceiling {
                    return Err(Error::InconsistentBoundary(format!(
                        "expansion value {pinned:.6} at l = {l} exceeds the upper bound \
                         {ceiling:.6} on V(l); the vanishing term is still large here, \
                         use the slope closure or a larger l"
                    )));
                }
                Ok(Self {
                    scheme,
                    grid: *grid,
                    pinned: Some(pinned),
                    ghost_slope: f64::NAN,
                })
            }
        }
    }

    /// Number of unknowns.
    fn unknowns(&self) -> usize {
        if self.pinned.is_some() {
            self.grid.n()
        } else {
            self.grid.len()
        }
    }

    /// Strictly decreasing initial profile shaped like the large-state expansion.
    fn profile(&self) -> Vec<f64> {
        let p = &self.scheme.params;
        match p.asymptotics() {
            Ok(e) => self.grid.nodes().map(|x| e.value(x)).collect(),
            Err(_) => {
                let a = p.c / p.feasibility_margin();
                let s = 1.0 / (p.b + p.rho);
                self.grid
                    .nodes()
                    .map(|x| -a * (x + s) * (x + s) - (2.0 * a * (x + s)).ln() / p.rho)
                    .collect()
            }
        }
    }

    fn node(&self, i: usize, v: &[f64]) -> Result<NodeEquation> {
        let x = self.grid.x(i);
        let left = if i == 0 { v[0] } else { v[i - 1] };
        if i == self.grid.n() {
            Ok(self.scheme.ghost_equation(x, v[i], left, self.ghost_slope))
        } else {
            self.scheme.equation(x, v[i], v[i + 1], left)
        }
    }

    fn residuals(&self, v: &[f64]) -> Result<Vec<f64>> {
        (0..self.unknowns())
            .map(|i| self.node(i, v).map(|e| e.residual))
            .collect()
    }

    fn linearise(&self, v: &[f64]) -> Result<Linearisation> {
        let m = self.unknowns();
        let mut lin = Linearisation {
            residual: Vec::with_capacity(m),
            lower: Vec::with_capacity(m),
            diag: Vec::with_capacity(m),
            upper: Vec::with_capacity(m),
        };
        for i in 0..m {
            let eq = self.node(i, v)?;
            lin.residual.push(eq.residual);
            lin.lower.push(if i == 0 { 0.0 } else { eq.d_left });
            lin.diag.push(eq.d_self);
            lin.upper.push(if i + 1 == m { 0.0 } else { eq.d_right });
        }
        Ok(lin)
    }

    fn newton(&self, values: &mut Vec<f64>, opts: &SolveOptions) -> Result<SolveReport> {
        let m = self.unknowns();
        let mut lin = self.linearise(values)?;
        let mut norm = sup_norm(&lin.residual);
        let mut iterations = 0;
        let mut last_update = f64::NAN;
        let mut polish = 0;
        let mut trial = values.clone();
        loop {
            if norm <= opts.tol {
                if polish == POLISH_STEPS {
                    break;
                }
                polish += 1;
            } else if iterations == opts.max_sweeps {
                break;
            }
            let rhs: Vec<f64> = lin.residual.iter().map(|r| -r).collect();
            let step = solve_tridiagonal(&lin.lower, &lin.diag, &lin.upper, &rhs)?;

            let mut alpha = 1.0;
            let accepted = loop {
                trial.copy_from_slice(values);
                for i in 0..m {
                    trial[i] += alpha * step[i];
                }
                if strictly_decreasing(&trial) {
                    if let Ok(next) = self.linearise(&trial) {
                        if next.residual.iter().all(|r| r.is_finite()) {
                            break Some(next);
                        }
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-12 {
                    break None;
                }
            };
            let Some(next) = accepted else {
                log::warn!("Newton line search failed at iteration {iterations}");
                break;
            };
            let next_norm = sup_norm(&next.residual);
            if polish > 0 && next_norm >= norm {
                break;
            }
            iterations += 1;
            last_update = alpha * sup_norm(&step);
            std::mem::swap(values, &mut trial);
            lin = next;
            norm = next_norm;
            log::debug!("newton {iterations}: residual {norm:e}, step {last_update:e}, alpha {alpha}");
        }
        Ok(SolveReport {
            iterations,
            final_residual: norm,
            last_update,
            converged: norm <= opts.tol,
            method: SolverMethod::Newton,
            wall_time: 0.0,
        })
    }

    fn gauss_seidel(&self, values: &mut [f64], opts: &SolveOptions) -> Result<SolveReport> {
        let m = self.unknowns();
        let mut norm = sup_norm(&self.residuals(values)?);
        let mut sweeps = 0;
        let mut last_update = f64::NAN;
        while norm > opts.tol && sweeps < opts.max_sweeps {
            let mut update = 0.0f64;
            for i in (0..m).rev() {
                let old = values[i];
                values[i] = self.solve_node(i, values)?;
                update = update.max((values[i] - old).abs());
            }
            sweeps += 1;
            last_update = update;
            norm = sup_norm(&self.residuals(values)?);
        }
        Ok(SolveReport {
            iterations: sweeps,
            final_residual: norm,
            last_update,
            converged: norm <= opts.tol,
            method: SolverMethod::GaussSeidel,
            wall_time: 0.0,
        })
    }

    /// Root of node `i`'s equation in its own value, neighbours held fixed.
    fn solve_node(&self, i: usize, v: &mut [f64]) -> Result<f64> {
        let current = v[i];
        if i == self.grid.n() {
            // linear in the node value once the ghost slope is fixed
            let eq = self.node(i, v)?;
            return Ok(current - eq.residual / eq.d_self);
        }
        let right = v[i + 1];
        let dx = self.grid.dx();
        let mut eval = |w: f64| -> Result<NodeEquation> {
            v[i] = w;
            self.node(i, v)
        };

        // Bracket: the residual tends to -inf as w -> right and grows at least
        // linearly for large w.
        let mut depth = 1.0f64;
        let mut lo = right + dx * (-depth).exp();
        while eval(lo)?.residual >= 0.0 {
            depth += 1.0;
            lo = right + dx * (-depth).exp();
            if !(lo > right) || depth > 1e3 {
                return Err(Error::Internal(format!(
                    "cannot bracket node {i} from below"
                )));
            }
        }
        let mut hi = current.max(right + dx);
        while eval(hi)?.residual <= 0.0 {
            hi = right + 2.0 * (hi - right);
            if !hi.is_finite() {
                return Err(Error::Internal(format!(
                    "cannot bracket node {i} from above"
                )));
            }
        }

        let mut w = current.clamp(lo, hi);
        if w <= lo || w >= hi {
            w = 0.5 * (lo + hi);
        }
        for _ in 0..200 {
            let eq = eval(w)?;
            if eq.residual == 0.0 {
                break;
            }
            if eq.residual < 0.0 {
                lo = w;
            } else {
                hi = w;
            }
            let newton = w - eq.residual / eq.d_self;
            let next = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - w).abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
                w = next;
                break;
            }
            w = next;
        }
        v[i] = current;
        Ok(w)
    }
}

/// Thomas algorithm. Stable without pivoting for the diagonally dominant
/// matrices produced by the monotone scheme.
fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let m = diag.len();
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(Error::Internal("singular Jacobian".into()));
    }
    c[0] = upper[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..m {
        denom = diag[i] - lower[i] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::Internal("singular Jacobian".into()));
        }
        c[i] = upper[i] / denom;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    for i in (0..m - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}
