//! Welfare function of the stochastic shallow lake problem.
//!
//! The lake state `x` (phosphorus in algae) follows
//!
//! ```text
//! dx = (u - b x + x^2 / (x^2 + 1)) dt + sigma x dW
//! ```
//!
//! and the planner maximises `E ∫ e^{-rho t} (ln u - c x^2) dt` over positive
//! loads `u`. This crate computes the value function with a monotone finite
//! difference scheme for the associated Bellman equation ([`hjb`]), simulates
//! the controlled dynamics ([`sde`]) and cross-checks both against the known
//! identities and bounds of the problem ([`verify`]).

// negated float comparisons are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod hjb;
pub mod io;
pub mod model;
pub mod sde;
pub mod verify;

pub use error::{Error, Result};
pub use hjb::{
    gradient, monotonicity_check, scheme_residual, solve, DiffusionForm, Grid, MonotonicityReport,
    RightBoundary, SolveOptions, SolveReport, SolverMethod, ValueFunction,
};
pub use model::{AsymptoticExpansion, LakeParams};
pub use sde::{
    feedback_control, mc_payoff, simulate_kernel, simulate_path, Integrator, McEstimate, Path,
    PathConfig, Policy,
};
pub use verify::{CheckResult, CheckStatus};
