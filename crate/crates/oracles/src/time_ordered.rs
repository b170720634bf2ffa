use nalgebra::DMatrix;

use crate::expm::{exact_expm, spectral_norm};
use crate::{Matrix, OracleConfig, OracleError};

/// Converged time-ordered propagator together with its convergence certificate.
#[derive(Debug, Clone)]
pub struct TimeOrdered {
    pub operator: Matrix,
    /// Spectral-norm difference between the last two refinements.
    pub achieved: f64,
    pub steps: usize,
}

const INITIAL_STEPS: usize = 4;

fn midpoint_product<F>(h_of_t: &F, t0: f64, t1: f64, steps: usize) -> Result<Matrix, OracleError>
where
    F: Fn(f64) -> Matrix,
{
    let h = (t1 - t0) / steps as f64;
    let mut u: Option<Matrix> = None;
    for k in 0..steps {
        let mid = t0 + (k as f64 + 0.5) * h;
        let step = exact_expm(&h_of_t(mid), h)?;
        // later times act from the left
        u = Some(match u {
            None => step,
            Some(acc) => step * acc,
        });
    }
    Ok(u.expect("at least one step"))
}

/// Time-ordered exponential `T exp(-i int_{t0}^{t1} H(s) ds)`.
///
/// Midpoint-rule product of exact short-time exponentials. The step count
/// doubles until two successive products agree to `cfg.tol` in spectral
/// norm; the finer product is returned.
pub fn time_ordered_propagator<F>(
    h_of_t: F,
    t0: f64,
    t1: f64,
    cfg: &OracleConfig,
) -> Result<TimeOrdered, OracleError>
where
    F: Fn(f64) -> Matrix,
{
    cfg.validate()?;
    let probe = h_of_t(t0);
    let dim = probe.nrows();
    if t1 == t0 {
        return Ok(TimeOrdered {
            operator: DMatrix::identity(dim, dim),
            achieved: 0.0,
            steps: 0,
        });
    }
    let mut steps = INITIAL_STEPS;
    let mut coarse = midpoint_product(&h_of_t, t0, t1, steps)?;
    let mut achieved = f64::INFINITY;
    for _ in 0..cfg.max_refinements {
        steps *= 2;
        let fine = midpoint_product(&h_of_t, t0, t1, steps)?;
        achieved = spectral_norm(&(&fine - &coarse));
        if achieved <= cfg.tol {
            return Ok(TimeOrdered {
                operator: fine,
                achieved,
                steps,
            });
        }
        coarse = fine;
    }
    Err(OracleError::NotConverged { achieved, steps })
}
