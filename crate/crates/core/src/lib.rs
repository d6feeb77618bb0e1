//! Thermo/photo-acoustic tomography workbench: forward wave and Helmholtz
//! solvers, low-frequency identities and speed/source reconstruction.

pub mod error;
pub mod kernels;
pub mod model;
pub mod phantom;
pub mod wave;
pub mod helmholtz;
pub mod identity;
pub mod inversion;
pub mod io;
pub mod cli;

pub use error::{Error, Result};
