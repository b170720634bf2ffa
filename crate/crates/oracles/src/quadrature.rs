use num_complex::Complex64;

use crate::{Matrix, OracleConfig, OracleError};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.norm()))
}

struct Simpson<'a, F> {
    f: &'a F,
    tol: f64,
    max_depth: u32,
}

impl<F> Simpson<'_, F>
where
    F: Fn(f64) -> Matrix,
{
    #[allow(clippy::too_many_arguments)]
    fn refine(
        &self,
        a: f64,
        b: f64,
        fa: &Matrix,
        fm: &Matrix,
        fb: &Matrix,
        whole: &Matrix,
        tol: f64,
        depth: u32,
    ) -> Result<Matrix, OracleError> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = (self.f)(lm);
        let frm = (self.f)(rm);
        let left = (fa + &flm * c(4.0) + fm) * c((m - a) / 6.0);
        let right = (fm + &frm * c(4.0) + fb) * c((b - m) / 6.0);
        let sum = &left + &right;
        let err = max_abs(&(&sum - whole));
        if err <= 15.0 * tol {
            // Richardson correction of the composite rule
            return Ok(&sum + (&sum - whole) * c(1.0 / 15.0));
        }
        if depth >= self.max_depth {
            return Err(OracleError::Quadrature { a, b });
        }
        let l = self.refine(a, m, fa, &flm, fm, &left, 0.5 * tol, depth + 1)?;
        let r = self.refine(m, b, fm, &frm, fb, &right, 0.5 * tol, depth + 1)?;
        Ok(l + r)
    }
}

/// First-order Dyson term `-i int_a^b H_I(s) ds` by adaptive Simpson
/// quadrature on a matrix-valued integrand (entrywise tolerance `cfg.tol`).
pub fn dyson_q1_integral<F>(integrand: F, a: f64, b: f64, cfg: &OracleConfig) -> Result<Matrix, OracleError>
where
    F: Fn(f64) -> Matrix,
{
    cfg.validate()?;
    let fa = integrand(a);
    if a == b {
        return Ok(fa.map(|_| Complex64::new(0.0, 0.0)));
    }
    let simpson = Simpson {
        f: &integrand,
        tol: cfg.tol,
        max_depth: cfg.max_refinements.max(8) + 20,
    };
    // Force a few levels so smooth-but-oscillatory integrands are not
    // accepted on a lucky coarse estimate.
    let pieces = 16;
    let h = (b - a) / pieces as f64;
    let mut total = fa.map(|_| Complex64::new(0.0, 0.0));
    for k in 0..pieces {
        let lo = a + k as f64 * h;
        let hi = if k + 1 == pieces { b } else { lo + h };
        let flo = integrand(lo);
        let fhi = integrand(hi);
        let fmid = integrand(0.5 * (lo + hi));
        let est = (&flo + &fmid * c(4.0) + &fhi) * c((hi - lo) / 6.0);
        total += simpson.refine(lo, hi, &flo, &fmid, &fhi, &est, simpson.tol / pieces as f64, 0)?;
    }
    Ok(total * Complex64::new(0.0, -1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn pauli_x() -> Matrix {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        DMatrix::from_row_slice(2, 2, &[o, l, l, o])
    }

    #[test]
    fn constant_integrand() {
        let h = pauli_x().map(|v| v * 0.7);
        let out = dyson_q1_integral(|_| h.clone(), 0.2, 1.1, &OracleConfig::with_tol(1e-13)).unwrap();
        let expected = h.map(|v| v * Complex64::new(0.0, -0.9));
        assert!(max_abs(&(out - expected)) < 1e-13);
    }

    #[test]
    fn cosine_drive_single_site() {
        // -i int (-zeta cos(w s)) X ds = i (zeta/w)(sin w b - sin w a) X
        let (zeta, w, a, b) = (0.8, 5.0, 0.1, 0.6);
        let x = pauli_x();
        let out = dyson_q1_integral(|s| x.map(|v| v * (-zeta * (w * s).cos())), a, b, &OracleConfig::with_tol(1e-13))
            .unwrap();
        let coef = Complex64::new(0.0, zeta / w * ((w * b).sin() - (w * a).sin()));
        let expected = x.map(|v| v * coef);
        assert!(max_abs(&(out - expected)) < 1e-12);
    }
}
