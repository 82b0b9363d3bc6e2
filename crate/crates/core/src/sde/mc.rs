use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::path::{advance, PathConfig};
use super::policy::Policy;
use super::rng::{normal, path_rng};
use crate::error::{Error, Result};
use crate::model::LakeParams;

/// Monte Carlo estimate of the discounted payoff truncated at `t_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    /// Bound on the bias from truncating the horizon at `t_max`.
    pub tail_bound: f64,
    /// `e^{-rho t_max}`.
    pub tail_factor: f64,
    pub t_max: f64,
    pub dt: f64,
    pub clamped_steps: usize,
}

struct PathOutcome {
    payoff: f64,
    tail_envelope: f64,
    clamped: usize,
}

/// Estimates `E ∫_0^{t_max} e^{-rho t} (ln u - c x^2) dt` over `n_paths`
/// independent paths (trapezoidal rule in time).
///
/// Path `k` uses stream `k` of `cfg.seed`, and the reduction is done in path
/// order with compensated summation, so the estimate does not depend on how
/// the paths are scheduled across threads.
///
/// The truncation bound is `2 e^{-rho t_max} E[(|ln u_T| + c x_T^2)/rho + A_c (x_T + 1/(b+rho))^2]`,
/// an integrand envelope plus the quadratic growth envelope of the value
/// function, with a safety factor of two.
pub fn mc_payoff(
    x0: f64,
    policy: &Policy,
    cfg: &PathConfig,
    n_paths: usize,
    params: &LakeParams,
) -> Result<McEstimate> {
    cfg.validate()?;
    params.ensure_feasible()?;
    if n_paths == 0 {
        return Err(Error::InvalidParameter {
            name: "paths",
            value: 0.0,
            reason: "need at least one path",
        });
    }
    if !(x0.is_finite() && x0 >= 0.0) {
        return Err(Error::Domain(format!("initial state must be >= 0, got {x0}")));
    }

    let outcomes: Vec<PathOutcome> = (0..n_paths as u64)
        .into_par_iter()
        .map(|k| one_path(x0, policy, cfg, params, k))
        .collect::<Result<_>>()?;

    let payoffs: Vec<f64> = outcomes.iter().map(|o| o.payoff).collect();
    let (mean, var) = mean_and_variance(&payoffs);
    let envelope = compensated_sum(outcomes.iter().map(|o| o.tail_envelope)) / n_paths as f64;
    let tail_factor = cfg.tail_factor(params);
    Ok(McEstimate {
        mean,
        std_error: (var / n_paths as f64).sqrt(),
        n_paths,
        tail_bound: 2.0 * tail_factor * envelope,
        tail_factor,
        t_max: cfg.steps() as f64 * cfg.dt,
        dt: cfg.dt,
        clamped_steps: outcomes.iter().map(|o| o.clamped).sum(),
    })
}

fn one_path(
    x0: f64,
    policy: &Policy,
    cfg: &PathConfig,
    params: &LakeParams,
    index: u64,
) -> Result<PathOutcome> {
    let mut rng = path_rng(cfg.seed, index);
    let dt = cfg.dt;
    let sqrt_dt = dt.sqrt();
    let decay = (-params.rho * dt).exp();
    let rate = |x: f64, u: f64| u.ln() - params.c * x * x;

    let mut x = x0;
    let mut u = policy.control(x)?;
    let mut discount = 1.0;
    let mut prev = rate(x, u);
    let mut acc = 0.0;
    let mut clamped = 0;
    for _ in 0..cfg.steps() {
        let dw = sqrt_dt * normal(&mut rng);
        let (next, c) = advance(x, u, dw, dt, cfg.integrator, params);
        clamped += c as usize;
        x = next;
        u = policy.control(x)?;
        discount *= decay;
        let cur = discount * rate(x, u);
        acc += 0.5 * dt * (prev + cur);
        prev = cur;
    }
    let a = params.c / params.feasibility_margin();
    let y = x + 1.0 / (params.b + params.rho);
    Ok(PathOutcome {
        payoff: acc,
        tail_envelope: (u.ln().abs() + params.c * x * x) / params.rho + a * y * y,
        clamped,
    })
}

/// Neumaier summation.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Sample mean and unbiased sample variance (two-pass, compensated).
pub(crate) fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    (mean, ss / (n - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::path::Integrator;

    #[test]
    fn compensated_sum_is_accurate() {
        let vals = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(vals), 2.0);
        let (m, v) = mean_and_variance(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((v - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn constant_integrand_at_stationary_point() {
        let p = LakeParams::new(0.03, 0.65, 1.0, 0.0).unwrap();
        let x0: f64 = 2.0;
        let u = 0.5;
        let cfg = PathConfig::new(100.0, 0.01, Integrator::EulerMaruyama, 9).unwrap();
        let est = mc_payoff(x0, &Policy::constant(u).unwrap(), &cfg, 4, &p).unwrap();
        let exact = (u.ln() - x0 * x0) / 0.03 * (1.0 - (-0.03f64 * 100.0).exp());
        assert!((est.mean - exact).abs() < 1e-3 * exact.abs(), "{} vs {exact}", est.mean);
        assert!(est.std_error < 1e-12);
        assert!(est.tail_bound > 0.0);
    }

    #[test]
    fn seed_determinism() {
        let p = LakeParams::standard();
        let cfg = PathConfig::new(10.0, 0.05, Integrator::KernelQuadrature, 42).unwrap();
        let a = mc_payoff(0.5, &Policy::benchmark(), &cfg, 64, &p).unwrap();
        let b = mc_payoff(0.5, &Policy::benchmark(), &cfg, 64, &p).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let other = PathConfig { seed: 43, ..cfg };
        assert_ne!(a.mean, mc_payoff(0.5, &Policy::benchmark(), &other, 64, &p).unwrap().mean);
    }

    #[test]
    fn independent_of_thread_count() {
        let p = LakeParams::standard();
        let cfg = PathConfig::new(10.0, 0.05, Integrator::KernelQuadrature, 5).unwrap();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| mc_payoff(0.3, &Policy::benchmark(), &cfg, 97, &p).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn rejects_zero_paths_and_infeasible() {
        let cfg = PathConfig::new(1.0, 0.1, Integrator::KernelQuadrature, 0).unwrap();
        assert!(mc_payoff(0.1, &Policy::benchmark(), &cfg, 0, &LakeParams::standard()).is_err());
        let bad = LakeParams::new(0.03, 0.1, 1.0, 0.5).unwrap();
        assert!(mc_payoff(0.1, &Policy::benchmark(), &cfg, 4, &bad).is_err());
    }
}
