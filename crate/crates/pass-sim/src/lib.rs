//! Simulation library for joint communication-and-computation uplinks over
//! segmented pinching-antenna systems: channel synthesis, three operating
//! protocols, alternating MMSE / weighted-MMSE beamforming solvers, and a
//! seeded Monte Carlo experiment harness with baselines.

pub mod channel;
pub mod config;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod mse_solver;
pub mod protocol;
pub mod scenario;
pub mod wsr_solver;

pub use error::Error;
pub use scenario::{PaPlacement, Scenario, UePosition};
