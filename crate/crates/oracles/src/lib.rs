//! Independent reference computations.
//!
//! Everything in this crate is deliberately slow and simple: dense
//! eigendecompositions, step-halved product formulas, extended-precision
//! Newton tables and adaptive quadrature. The crate depends only on
//! `nalgebra` and `astro-float`, never on the simulator it is used to
//! check, so a bug in the main code path cannot leak into its own
//! reference values.

mod divided;
mod expm;
mod quadrature;
mod time_ordered;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use divided::dd_reference;
pub use expm::{exact_expm, hermitian_deviation, hermitian_norm, spectral_norm};
pub use quadrature::dyson_q1_integral;
pub use time_ordered::{time_ordered_propagator, TimeOrdered};

/// Dense complex matrix used by every oracle.
pub type Matrix = DMatrix<Complex64>;

/// Errors produced by the reference computations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (max |H - H^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("time-ordered product did not converge: last difference {achieved:e} after {steps} steps")]
    NotConverged { achieved: f64, steps: usize },
    #[error("adaptive quadrature did not converge on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },
    #[error("invalid oracle configuration: {0}")]
    Config(String),
}

/// Convergence knobs shared by the oracles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Spectral-norm (or entrywise, for quadrature) convergence target.
    pub tol: f64,
    /// Maximum number of step halvings / bisection depth.
    pub max_refinements: u32,
    /// Decimal digits carried by the extended-precision divided differences.
    pub precision_digits: u32,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_refinements: 24,
            precision_digits: 60,
        }
    }
}

impl OracleConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub(crate) fn validate(&self) -> Result<(), OracleError> {
        if !(self.tol > 0.0) {
            return Err(OracleError::Config(format!("tol must be > 0, got {}", self.tol)));
        }
        Ok(())
    }
}
