use serde::{Deserialize, Serialize};

use super::Grid;
use crate::error::{Error, Result};
use crate::model::{natural_drift, LakeParams};

/// How the central second difference is weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffusionForm {
    /// `sigma^2 x^2 / 2` weight, consistent with the continuous equation.
    #[default]
    X2,
    /// Constant `sigma^2 / 2` weight. At `x = 0` the reduced equation is
    /// used, so no ghost node is needed.
    Flat,
}

impl std::str::FromStr for DiffusionForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x2" => Ok(Self::X2),
            "flat" => Ok(Self::Flat),
            other => Err(Error::Config(format!(
                "unknown diffusion form `{other}` (expected x2 or flat)"
            ))),
        }
    }
}

impl std::fmt::Display for DiffusionForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::X2 => "x2",
            Self::Flat => "flat",
        })
    }
}

/// Residual of one node equation together with its partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeEquation {
    pub residual: f64,
    pub d_self: f64,
    pub d_right: f64,
    pub d_left: f64,
}

/// Node equation of the scheme on a grid with spacing `dx`, multiplied
/// through by `dx^2`:
///
/// ```text
/// dx^2 w - (dx/rho) f(x) (w - left) + (dx^2/rho) (c x^2 + 1 + ln((w - right)/dx))
///        - D(x) (right + left - 2 w)
/// ```
///
/// with `f(x) = x^2/(x^2+1) - b x` and `D(x) = sigma^2 x^2 / (2 rho)`
/// (or `sigma^2 / (2 rho)` for [`DiffusionForm::Flat`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scheme {
    pub params: LakeParams,
    pub dx: f64,
    pub diffusion: DiffusionForm,
}

impl Scheme {
    pub fn new(params: LakeParams, dx: f64, diffusion: DiffusionForm) -> Self {
        Self {
            params,
            dx,
            diffusion,
        }
    }

    /// Weight of the second difference at `x`.
    #[inline]
    pub fn diffusion_weight(&self, x: f64) -> f64 {
        let s2 = self.params.sigma * self.params.sigma;
        match self.diffusion {
            DiffusionForm::X2 => 0.5 * s2 * x * x / self.params.rho,
            DiffusionForm::Flat if x == 0.0 => 0.0,
            DiffusionForm::Flat => 0.5 * s2 / self.params.rho,
        }
    }

    /// Weight of the backward difference at `x`: `dx f(x) / rho`.
    #[inline]
    pub fn drift_weight(&self, x: f64) -> f64 {
        self.dx * natural_drift(x, self.params.b) / self.params.rho
    }

    /// Part of the residual that does not involve the logarithm.
    #[inline]
    fn linear_part(&self, x: f64, w: f64, right: f64, left: f64) -> f64 {
        let dx2 = self.dx * self.dx;
        let p = &self.params;
        dx2 * w - self.drift_weight(x) * (w - left)
            + dx2 / p.rho * (p.c * x * x + 1.0)
            - self.diffusion_weight(x) * (right + left - 2.0 * w)
    }

    pub fn residual(&self, x: f64, w: f64, right: f64, left: f64) -> Result<f64> {
        let gap = w - right;
        if !(gap > 0.0) {
            return Err(Error::MonotoneViolation {
                x,
                right,
                candidate: w,
            });
        }
        let dx2 = self.dx * self.dx;
        Ok(self.linear_part(x, w, right, left) + dx2 / self.params.rho * (gap / self.dx).ln())
    }

    pub fn equation(&self, x: f64, w: f64, right: f64, left: f64) -> Result<NodeEquation> {
        let residual = self.residual(x, w, right, left)?;
        let dx2 = self.dx * self.dx;
        let log_slope = dx2 / (self.params.rho * (w - right));
        let dw = self.drift_weight(x);
        let dd = self.diffusion_weight(x);
        Ok(NodeEquation {
            residual,
            d_self: dx2 - dw + log_slope + 2.0 * dd,
            d_right: -log_slope - dd,
            d_left: dw - dd,
        })
    }

    /// Equation at the last node when the unknown right neighbour is replaced
    /// by the ghost value `w + dx * slope` (`slope < 0`).
    pub fn ghost_equation(&self, x: f64, w: f64, left: f64, slope: f64) -> NodeEquation {
        let dx2 = self.dx * self.dx;
        let p = &self.params;
        let dw = self.drift_weight(x);
        let dd = self.diffusion_weight(x);
        let residual = dx2 * w - dw * (w - left)
            + dx2 / p.rho * (p.c * x * x + 1.0 + (-slope).ln())
            - dd * (self.dx * slope + left - w);
        NodeEquation {
            residual,
            d_self: dx2 - dw + dd,
            d_right: 0.0,
            d_left: dw - dd,
        }
    }

    /// Monotonicity margin at `x`: the diffusion allowance minus `dx f(x)`.
    /// Non-negative margin means the residual is non-increasing in the left
    /// neighbour.
    pub fn monotonicity_margin(&self, x: f64) -> f64 {
        let s2 = self.params.sigma * self.params.sigma;
        let allowance = match self.diffusion {
            DiffusionForm::X2 => 0.5 * s2 * x * x,
            DiffusionForm::Flat if x == 0.0 => 0.0,
            DiffusionForm::Flat => 0.5 * s2,
        };
        allowance - self.dx * natural_drift(x, self.params.b)
    }
}

/// Node residual of the scheme with the default `x^2`-weighted diffusion.
///
/// `right` and `left` are the neighbouring node values `V_{i+1}`, `V_{i-1}`.
/// Fails with [`Error::MonotoneViolation`] unless `right < w`.
pub fn scheme_residual(
    x: f64,
    w: f64,
    right: f64,
    left: f64,
    dx: f64,
    params: &LakeParams,
) -> Result<f64> {
    params.ensure_feasible()?;
    Scheme::new(*params, dx, DiffusionForm::X2).residual(x, w, right, left)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotonicityReason {
    /// `b >= 1/2`: the uncontrolled drift is non-positive everywhere.
    LargeLoss,
    /// `dx <= sigma^2 / 2`.
    SmallStep,
    /// Every node was scanned.
    Scan,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub ok: bool,
    pub reason: MonotonicityReason,
    /// Node with the smallest margin (only when scanned).
    pub worst_x: Option<f64>,
    pub worst_margin: Option<f64>,
}

/// Checks `dx (x^2/(x^2+1) - b x) <= sigma^2 x^2 / 2` (or `<= sigma^2 / 2`
/// for the flat form) at every node.
pub fn monotonicity_check(
    params: &LakeParams,
    grid: &Grid,
    diffusion: DiffusionForm,
) -> MonotonicityReport {
    let dx = grid.dx();
    let shortcut = if params.b >= 0.5 {
        Some(MonotonicityReason::LargeLoss)
    } else if dx <= 0.5 * params.sigma * params.sigma {
        Some(MonotonicityReason::SmallStep)
    } else {
        None
    };
    if let Some(reason) = shortcut {
        return MonotonicityReport {
            ok: true,
            reason,
            worst_x: None,
            worst_margin: None,
        };
    }
    let scheme = Scheme::new(*params, dx, diffusion);
    let (worst_x, worst_margin) = grid
        .nodes()
        .map(|x| (x, scheme.monotonicity_margin(x)))
        .fold((0.0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
    MonotonicityReport {
        ok: worst_margin >= 0.0,
        reason: MonotonicityReason::Scan,
        worst_x: Some(worst_x),
        worst_margin: Some(worst_margin),
    }
}

/// Large-state slope of the value function used to close the grid on the
/// right: `-2 A_c (x + s) - 1/(rho (x + s))` with `A_c = c/(rho + 2b - sigma^2)`
/// and `s = 1/(b + rho)`. For `c = 1` this is exactly
/// [`crate::model::asymptotic_gradient`].
pub fn tail_slope(x: f64, params: &LakeParams) -> Result<f64> {
    params.ensure_feasible()?;
    let a = params.c / params.feasibility_margin();
    let y = x + 1.0 / (params.b + params.rho);
    Ok(-2.0 * a * y - 1.0 / (params.rho * y))
}
