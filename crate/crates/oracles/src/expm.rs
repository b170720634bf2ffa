use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::{Matrix, OracleError};

/// Largest entrywise |H - H^dagger|.
pub fn hermitian_deviation(h: &Matrix) -> f64 {
    let n = h.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

fn check_square(m: &Matrix) -> Result<(), OracleError> {
    if m.nrows() != m.ncols() {
        return Err(OracleError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

fn check_hermitian(h: &Matrix) -> Result<(), OracleError> {
    check_square(h)?;
    let deviation = hermitian_deviation(h);
    if deviation > 1e-10 {
        return Err(OracleError::NotHermitian { deviation });
    }
    Ok(())
}

/// `exp(-i H t)` through a dense Hermitian eigendecomposition.
pub fn exact_expm(h: &Matrix, t: f64) -> Result<Matrix, OracleError> {
    check_hermitian(h)?;
    let n = h.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(h.clone());
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -lambda * t);
        for i in 0..n {
            scaled[(i, k)] *= phase;
        }
    }
    Ok(scaled * v.adjoint())
}

/// Spectral norm of a Hermitian matrix: the largest |eigenvalue|.
pub fn hermitian_norm(h: &Matrix) -> Result<f64, OracleError> {
    check_hermitian(h)?;
    if h.nrows() == 0 {
        return Ok(0.0);
    }
    let values = h.clone().symmetric_eigenvalues();
    Ok(values.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
}

/// Spectral norm (largest singular value) of an arbitrary square matrix.
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().singular_values().max()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn zero_hamiltonian_gives_identity() {
        let u = exact_expm(&DMatrix::zeros(4, 4), 3.0).unwrap();
        assert!((u - DMatrix::identity(4, 4)).norm() < 1e-14);
    }

    #[test]
    fn diagonal_hamiltonian_gives_phases() {
        let h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.3), c(-1.2), c(2.0)]));
        let u = exact_expm(&h, 0.7).unwrap();
        for (k, e) in [0.3, -1.2, 2.0].iter().enumerate() {
            let expected = Complex64::from_polar(1.0, -e * 0.7);
            assert!((u[(k, k)] - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn rabi_rotation() {
        let x = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let u = exact_expm(&x, std::f64::consts::FRAC_PI_2).unwrap();
        let expected = x.map(|v| v * Complex64::new(0.0, -1.0));
        assert!((u - expected).norm() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        assert!(matches!(exact_expm(&m, 1.0), Err(OracleError::NotHermitian { .. })));
        let rect = DMatrix::<Complex64>::zeros(2, 3);
        assert!(matches!(exact_expm(&rect, 1.0), Err(OracleError::NotSquare { .. })));
    }

    #[test]
    fn spectral_norm_of_nilpotent() {
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0), c(2.0), c(0.0), c(0.0)]);
        assert!((spectral_norm(&m) - 2.0).abs() < 1e-12);
    }
}
