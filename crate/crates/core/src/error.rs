use thiserror::Error;

use crate::hjb::SolveReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error(
        "infeasible parameters: sigma^2 = {sigma_sq} >= rho + 2b = {threshold}; \
         the welfare function is identically -inf"
    )]
    Infeasible { sigma_sq: f64, threshold: f64 },

    /// The supremum over controls is `+inf` because the gradient is not negative.
    #[error("Hamiltonian is +inf for non-negative gradient p = {0}")]
    InfiniteHamiltonian(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// A scheme evaluation was asked for a node whose right neighbour is not
    /// strictly below it, so the logarithm of the forward difference is undefined.
    #[error("monotone violation at x = {x}: right neighbour {right} is not below candidate {candidate}")]
    MonotoneViolation { x: f64, right: f64, candidate: f64 },

    #[error(
        "scheme is not monotone on this grid: dx * (x^2/(x^2+1) - b x) exceeds the diffusion \
         allowance at x = {x} (margin {margin:e})"
    )]
    NotMonotone { x: f64, margin: f64 },

    #[error("inconsistent boundary datum: {0}")]
    InconsistentBoundary(String),

    #[error(
        "solver did not converge after {} iterations (residual {:e})",
        .0.iterations,
        .0.final_residual
    )]
    NoConvergence(Box<SolveReport>),

    #[error("invalid value function: {0}")]
    InvalidValueFunction(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// True for errors caused by the caller's configuration rather than by
    /// numerical failure.
    pub fn is_config_error(&self) -> bool {
        !matches!(
            self,
            Error::NoConvergence(_) | Error::Internal(_) | Error::Io(_)
        )
    }
}
