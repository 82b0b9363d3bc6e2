//! Monotone finite difference scheme for the Bellman equation on `[0, l]`.
//!
//! The drift term is discretised with a backward difference, the logarithmic
//! control term with a forward difference and the diffusion with a central
//! second difference. The resulting node equations are solved as one
//! nonlinear system.

mod grid;
mod scheme;
mod solver;
mod value;

pub use grid::Grid;
pub use scheme::{
    monotonicity_check, scheme_residual, tail_slope, DiffusionForm, MonotonicityReason,
    MonotonicityReport, NodeEquation, Scheme,
};
pub use solver::{solve, RightBoundary, SolveOptions, SolveReport, SolverMethod};
pub use value::{gradient, ValueFunction};
