use serde::{Deserialize, Serialize};

use super::kernel::kernel_step;
use super::policy::Policy;
use super::rng::brownian_increments;
use crate::error::{Error, Result};
use crate::model::{drift, LakeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Plain Euler-Maruyama. Steps that would cross zero are clamped to zero
    /// and counted.
    EulerMaruyama,
    /// Exact kernel `Z` over each step, then the integral representation
    /// `x_{k+1} = R_k x_k + dt (1 + R_k)/2 (u_k + x_k^2/(1+x_k^2))` with
    /// `R_k = Z_{k+1}/Z_k`: the load is frozen at the left end of the step
    /// and the kernel weight `Z_{k+1}/Z_s` is integrated by the trapezoid
    /// rule. Non-negative by construction.
    #[default]
    KernelQuadrature,
}

impl std::str::FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" | "euler-maruyama" | "euler_maruyama" | "em" => Ok(Self::EulerMaruyama),
            "kernel" | "kernel-quadrature" | "kernel_quadrature" => Ok(Self::KernelQuadrature),
            other => Err(Error::Config(format!(
                "unknown integrator `{other}` (expected euler-maruyama or kernel-quadrature)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub t_max: f64,
    pub dt: f64,
    pub integrator: Integrator,
    pub seed: u64,
}

impl PathConfig {
    pub fn new(t_max: f64, dt: f64, integrator: Integrator, seed: u64) -> Result<Self> {
        let cfg = Self {
            t_max,
            dt,
            integrator,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Horizon `min(200/rho, 2000)`, which leaves a discount factor `e^{-200}`
    /// unless the cap binds.
    pub fn default_horizon(params: &LakeParams) -> f64 {
        (200.0 / params.rho).min(2000.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: self.dt,
                reason: "must be finite and > 0",
            });
        }
        if !(self.t_max >= self.dt && self.t_max.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "t_max",
                value: self.t_max,
                reason: "must be finite and >= dt",
            });
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    /// `e^{-rho t_max}`.
    pub fn tail_factor(&self, params: &LakeParams) -> f64 {
        (-params.rho * self.steps() as f64 * self.dt).exp()
    }
}

/// A sampled trajectory together with the kernel `Z` driven by the same noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub z: Vec<f64>,
    /// Euler-Maruyama steps that were clamped at zero.
    pub clamped_steps: usize,
}

/// Advances the state by one step given the Brownian increment `dw`.
/// Returns the new state and whether it was clamped.
#[inline]
pub(crate) fn advance(
    x: f64,
    u: f64,
    dw: f64,
    dt: f64,
    integrator: Integrator,
    params: &LakeParams,
) -> (f64, bool) {
    match integrator {
        Integrator::KernelQuadrature => {
            let x2 = x * x;
            let r = kernel_step(dw, dt, params);
            (r * x + 0.5 * dt * (1.0 + r) * (u + x2 / (1.0 + x2)), false)
        }
        Integrator::EulerMaruyama => {
            let next = x + drift(x, u, params) * dt + params.sigma * x * dw;
            if next < 0.0 {
                (0.0, true)
            } else {
                (next, false)
            }
        }
    }
}

fn check_start(x0: f64) -> Result<()> {
    if x0.is_finite() && x0 >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("initial state must be >= 0, got {x0}")))
    }
}

/// Path driven by explicitly supplied Brownian increments (one per step).
pub fn simulate_path_with_increments(
    x0: f64,
    policy: &Policy,
    cfg: &PathConfig,
    params: &LakeParams,
    increments: &[f64],
) -> Result<Path> {
    cfg.validate()?;
    check_start(x0)?;
    let steps = cfg.steps();
    if increments.len() < steps {
        return Err(Error::Config(format!(
            "need {steps} increments, got {}",
            increments.len()
        )));
    }
    let mut path = Path {
        t: Vec::with_capacity(steps + 1),
        x: Vec::with_capacity(steps + 1),
        u: Vec::with_capacity(steps + 1),
        z: Vec::with_capacity(steps + 1),
        clamped_steps: 0,
    };
    let mut x = x0;
    let mut z = 1.0;
    for (k, &dw) in increments[..steps].iter().enumerate() {
        let u = policy.control(x)?;
        path.t.push(k as f64 * cfg.dt);
        path.x.push(x);
        path.u.push(u);
        path.z.push(z);
        let (next, clamped) = advance(x, u, dw, cfg.dt, cfg.integrator, params);
        path.clamped_steps += clamped as usize;
        x = next;
        z *= kernel_step(dw, cfg.dt, params);
    }
    path.t.push(steps as f64 * cfg.dt);
    path.x.push(x);
    path.u.push(policy.control(x)?);
    path.z.push(z);
    Ok(path)
}

/// Path number `path_index` of the run seeded by `cfg.seed`.
pub fn simulate_path_indexed(
    x0: f64,
    policy: &Policy,
    cfg: &PathConfig,
    params: &LakeParams,
    path_index: u64,
) -> Result<Path> {
    cfg.validate()?;
    let increments = brownian_increments(cfg.seed, path_index, cfg.steps(), cfg.dt);
    simulate_path_with_increments(x0, policy, cfg, params, &increments)
}

/// First path of the run seeded by `cfg.seed`.
pub fn simulate_path(
    x0: f64,
    policy: &Policy,
    cfg: &PathConfig,
    params: &LakeParams,
) -> Result<Path> {
    simulate_path_indexed(x0, policy, cfg, params, 0)
}
