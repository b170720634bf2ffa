//! Permutation-matrix-representation (PMR) Hamiltonian simulation at desk
//! scale, with reference resource estimates.

pub mod cli;
pub mod divided_difference;
pub mod error;
pub mod estimator;
pub mod models;
pub mod pmr;
pub mod propagator_td;
pub mod propagator_ti;
pub mod spin;
pub mod truncation;

pub use error::{Error, Result};
