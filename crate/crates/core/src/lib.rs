//! Classical and quantum bosonic Gibbs ensembles for the one-dimensional
//! anharmonic trap, with the numerical checks that connect them.

pub mod error;
pub mod experiments;
pub mod field;
pub mod fock;
pub mod massdist;
pub mod measures;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use field::Field;
