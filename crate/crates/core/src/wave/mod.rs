//! Time-domain forward solver and boundary traces.

mod solver;
mod trace;

pub use solver::{simulate, Padding, SimulateOptions, SimulationOutput};
pub use trace::{equal_data_check, TimeTrace};
