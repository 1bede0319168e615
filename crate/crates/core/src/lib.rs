//! Asymptotic-preserving simulation of isentropic gas flow with wall friction
//! on pipe networks.

pub mod ap_stepper;
pub mod cli_io;
pub mod diagnostics;
pub mod error;
pub mod explicit_stepper;
pub mod flux;
pub mod junction;
pub mod model;
pub mod network;
pub mod reconstruction;
pub mod simulation;

pub use error::{Error, Result};
pub use model::{GasParameters, NetworkTopology, PipeState, State};
pub use network::Network;
pub use simulation::{run, RunOptions, RunOutcome, Scheme};
