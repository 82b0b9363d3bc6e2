//! Model parameters, the Hamiltonian of the control problem and the
//! closed-form large-state expansion of the value function.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `sqrt(2e)`, the constant in the upper bound on the value at zero.
const SQRT_2E: f64 = 2.331_643_981_597_124;

/// The four parameters of the lake problem.
///
/// `rho` is the discount rate, `b` the loss rate of phosphorus, `c` the weight
/// of ecological services and `sigma` the strength of the multiplicative noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LakeParams {
    pub rho: f64,
    pub b: f64,
    pub c: f64,
    pub sigma: f64,
}

impl Default for LakeParams {
    fn default() -> Self {
        Self::standard()
    }
}

impl LakeParams {
    /// Validated constructor. Feasibility is checked separately, see
    /// [`LakeParams::ensure_feasible`].
    pub fn new(rho: f64, b: f64, c: f64, sigma: f64) -> Result<Self> {
        let params = Self { rho, b, c, sigma };
        params.validate()?;
        Ok(params)
    }

    /// The reference configuration used throughout the tests and the CLI defaults.
    pub const fn standard() -> Self {
        Self {
            rho: 0.03,
            b: 0.65,
            c: 1.0,
            sigma: 0.1,
        }
    }

    pub fn with_sigma(self, sigma: f64) -> Self {
        Self { sigma, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(name: &'static str, value: f64) -> Result<()> {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite and > 0",
                })
            }
        }
        positive("rho", self.rho)?;
        positive("b", self.b)?;
        positive("c", self.c)?;
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: self.sigma,
                reason: "must be finite and >= 0",
            });
        }
        Ok(())
    }

    /// `rho + 2b - sigma^2`; the problem is well posed iff this is positive.
    pub fn feasibility_margin(&self) -> f64 {
        self.rho + 2.0 * self.b - self.sigma * self.sigma
    }

    pub fn feasible(&self) -> bool {
        self.validate().is_ok() && self.feasibility_margin() > 0.0
    }

    pub fn ensure_feasible(&self) -> Result<()> {
        self.validate()?;
        if self.feasibility_margin() > 0.0 {
            Ok(())
        } else {
            Err(Error::Infeasible {
                sigma_sq: self.sigma * self.sigma,
                threshold: self.rho + 2.0 * self.b,
            })
        }
    }

    fn ensure_unit_weight(&self, what: &str) -> Result<()> {
        if self.c == 1.0 {
            Ok(())
        } else {
            Err(Error::Unsupported(format!(
                "{what} is only established for c = 1 (got c = {})",
                self.c
            )))
        }
    }

    /// Constants of the large-state expansion. Only available for feasible
    /// parameters with `c = 1`.
    pub fn asymptotics(&self) -> Result<AsymptoticExpansion> {
        self.ensure_feasible()?;
        self.ensure_unit_weight("the asymptotic expansion")?;
        Ok(AsymptoticExpansion::from_params(self))
    }
}

/// `V(x) ≈ -A (x + shift)^2 - ln(2 A (x + shift)) / rho + K` for large `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticExpansion {
    pub a: f64,
    pub k: f64,
    /// `1 / (b + rho)`.
    pub shift: f64,
    pub rho: f64,
}

impl AsymptoticExpansion {
    fn from_params(p: &LakeParams) -> Self {
        let a = 1.0 / p.feasibility_margin();
        let shift = 1.0 / (p.b + p.rho);
        let k = ((2.0 * p.b + p.sigma * p.sigma) / (2.0 * p.rho)
            - a * (p.rho + 2.0 * p.b) * shift * shift
            - 1.0)
            / p.rho;
        Self {
            a,
            k,
            shift,
            rho: p.rho,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        let y = x + self.shift;
        -self.a * y * y - (2.0 * self.a * y).ln() / self.rho + self.k
    }

    pub fn gradient(&self, x: f64) -> f64 {
        let y = x + self.shift;
        -2.0 * self.a * y - 1.0 / (self.rho * y)
    }
}

/// Uncontrolled part of the drift: recycling minus loss.
#[inline]
pub fn natural_drift(x: f64, b: f64) -> f64 {
    let x2 = x * x;
    x2 / (x2 + 1.0) - b * x
}

/// Drift of the lake dynamics under load `u`.
#[inline]
pub fn drift(x: f64, u: f64, params: &LakeParams) -> f64 {
    u + natural_drift(x, params.b)
}

/// Instantaneous welfare `ln u - c x^2`.
pub fn running_payoff(x: f64, u: f64, params: &LakeParams) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::Domain(format!("control must be > 0, got {u}")));
    }
    Ok(u.ln() - params.c * x * x)
}

/// The quantity maximised over controls in the Bellman equation,
/// `sigma^2 x^2 P / 2 + (u - b x + x^2/(x^2+1)) p + ln u - c x^2`.
pub fn control_objective(x: f64, u: f64, p: f64, pp: f64, params: &LakeParams) -> f64 {
    0.5 * params.sigma * params.sigma * x * x * pp + drift(x, u, params) * p + u.ln()
        - params.c * x * x
}

/// Supremum of [`control_objective`] over `u > 0`.
///
/// Finite only on the decreasing branch `p < 0`; for `p >= 0` the supremum is
/// `+inf` and [`Error::InfiniteHamiltonian`] is returned instead of a float.
pub fn hamiltonian(x: f64, p: f64, pp: f64, params: &LakeParams) -> Result<f64> {
    if !(p < 0.0) {
        return Err(Error::InfiniteHamiltonian(p));
    }
    Ok(natural_drift(x, params.b) * p - ((-p).ln() + params.c * x * x + 1.0)
        + 0.5 * params.sigma * params.sigma * x * x * pp)
}

/// Maximiser of `ln u + p u` over `u > 0`, i.e. `-1/p`.
pub fn optimal_control(p: f64) -> Result<f64> {
    if !(p < 0.0) {
        return Err(Error::Domain(format!(
            "optimal control needs a negative gradient, got {p}"
        )));
    }
    Ok(-1.0 / p)
}

/// Large-state expansion of the value function with the vanishing term dropped.
pub fn asymptotic_value(x: f64, params: &LakeParams) -> Result<f64> {
    Ok(params.asymptotics()?.value(x))
}

/// Derivative of [`asymptotic_value`].
pub fn asymptotic_gradient(x: f64, params: &LakeParams) -> Result<f64> {
    Ok(params.asymptotics()?.gradient(x))
}

/// Upper bound `ln((b + rho)/sqrt(2e)) / rho` on the value at zero (c = 1).
pub fn v0_upper_bound(params: &LakeParams) -> Result<f64> {
    params.ensure_feasible()?;
    params.ensure_unit_weight("the bound on V(0)")?;
    Ok(((params.b + params.rho) / SQRT_2E).ln() / params.rho)
}
