//! Simulation of the controlled lake dynamics and Monte Carlo estimation of
//! the discounted payoff.

mod kernel;
pub(crate) mod mc;
mod path;
mod policy;
pub mod rng;

pub use kernel::{kernel_step, simulate_kernel};
pub use mc::{mc_payoff, McEstimate};
pub use path::{
    simulate_path, simulate_path_indexed, simulate_path_with_increments, Integrator, Path,
    PathConfig,
};
pub use policy::{feedback_control, Policy};
