//! Pauli strings, diagonal Z-polynomials, basis states and dense operators.
//!
//! Conventions used throughout the crate:
//!
//! * bit `k` of a mask (and of a basis index) refers to spin `k`, with spin 0
//!   the least-significant bit;
//! * a computational basis state `|z>` has `Z_k |z> = (-1)^{z_k} |z>`, so
//!   bit value 0 is the `+1` eigenstate;
//! * a site with both its x-bit and z-bit set carries `Y`. A [`PauliTerm`]
//!   equals `weight * phase * (tensor product of I, X, Y, Z)`, never a
//!   separate `Y` symbol.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mask = u64;

/// Largest spin count representable by a [`Mask`].
pub const MASK_BITS: usize = 64;

pub(crate) fn mask_limit(n: usize) -> Mask {
    if n >= MASK_BITS {
        Mask::MAX
    } else {
        (1u64 << n) - 1
    }
}

#[inline]
pub(crate) fn parity(m: Mask) -> f64 {
    if m.count_ones() & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Global phase of a Pauli term, a power of `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    PlusOne,
    PlusI,
    MinusOne,
    MinusI,
}

impl Phase {
    pub fn from_power(k: u32) -> Self {
        match k % 4 {
            0 => Phase::PlusOne,
            1 => Phase::PlusI,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    pub fn power(self) -> u32 {
        match self {
            Phase::PlusOne => 0,
            Phase::PlusI => 1,
            Phase::MinusOne => 2,
            Phase::MinusI => 3,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        match self {
            Phase::PlusOne => Complex64::new(1.0, 0.0),
            Phase::PlusI => Complex64::new(0.0, 1.0),
            Phase::MinusOne => Complex64::new(-1.0, 0.0),
            Phase::MinusI => Complex64::new(0.0, -1.0),
        }
    }
}

impl Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase::from_power(self.power() + rhs.power())
    }
}

/// A weighted, phased Pauli string on `n` spins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub weight: f64,
    pub phase: Phase,
    pub x_mask: Mask,
    pub z_mask: Mask,
    pub n: usize,
}

impl PauliTerm {
    pub fn new(n: usize, weight: f64, phase: Phase, x_mask: Mask, z_mask: Mask) -> Result<Self> {
        if n > MASK_BITS {
            return Err(Error::invalid(format!("at most {MASK_BITS} spins supported, got {n}")));
        }
        let limit = mask_limit(n);
        if x_mask & !limit != 0 || z_mask & !limit != 0 {
            return Err(Error::invalid(format!(
                "mask bits outside {n} spins (x={x_mask:#b}, z={z_mask:#b})"
            )));
        }
        if !weight.is_finite() {
            return Err(Error::invalid("non-finite Pauli weight"));
        }
        Ok(Self {
            weight,
            phase,
            x_mask,
            z_mask,
            n,
        })
    }

    /// Real-coefficient term. The sign is moved into the phase so the
    /// stored weight is always nonnegative.
    pub fn real(n: usize, coefficient: f64, x_mask: Mask, z_mask: Mask) -> Result<Self> {
        let phase = if coefficient < 0.0 {
            Phase::MinusOne
        } else {
            Phase::PlusOne
        };
        Self::new(n, coefficient.abs(), phase, x_mask, z_mask)
    }

    pub fn identity(n: usize, coefficient: f64) -> Result<Self> {
        Self::real(n, coefficient, 0, 0)
    }

    pub fn x(n: usize, site: usize, coefficient: f64) -> Result<Self> {
        Self::real(n, coefficient, site_bit(site)?, 0)
    }

    pub fn z(n: usize, site: usize, coefficient: f64) -> Result<Self> {
        Self::real(n, coefficient, 0, site_bit(site)?)
    }

    pub fn zz(n: usize, i: usize, j: usize, coefficient: f64) -> Result<Self> {
        if i == j {
            return Err(Error::invalid("ZZ term needs two distinct sites"));
        }
        Self::real(n, coefficient, 0, site_bit(i)? | site_bit(j)?)
    }

    /// `weight * phase` as a complex number.
    pub fn coefficient(&self) -> Complex64 {
        self.phase.to_complex() * self.weight
    }

    pub fn is_diagonal(&self) -> bool {
        self.x_mask == 0
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    /// Amplitude of the single nonzero entry in column `z`, i.e.
    /// `<z ^ x_mask| P |z>`. Includes the `i` carried by each `Y` site.
    pub fn column_entry(&self, z: u64) -> (u64, Complex64) {
        let y_count = (self.x_mask & self.z_mask).count_ones();
        let value = self.coefficient()
            * Phase::from_power(y_count).to_complex()
            * parity(self.z_mask & z);
        (z ^ self.x_mask, value)
    }

    /// Group product `self * other`.
    pub fn product(&self, other: &PauliTerm) -> Result<PauliTerm> {
        pauli_product(self, other)
    }
}

fn site_bit(site: usize) -> Result<Mask> {
    if site >= MASK_BITS {
        return Err(Error::invalid(format!("site {site} out of mask range")));
    }
    Ok(1u64 << site)
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.phase {
            Phase::PlusOne => "+",
            Phase::MinusOne => "-",
            Phase::PlusI => "+i",
            Phase::MinusI => "-i",
        };
        write!(f, "{sign}{}", self.weight)?;
        if self.is_identity() {
            return write!(f, " I");
        }
        for k in 0..self.n {
            let bit = 1u64 << k;
            let op = match (self.x_mask & bit != 0, self.z_mask & bit != 0) {
                (false, false) => continue,
                (true, false) => 'X',
                (false, true) => 'Z',
                (true, true) => 'Y',
            };
            write!(f, " {op}{k}")?;
        }
        Ok(())
    }
}

/// Product of two Pauli terms with the accumulated phase.
///
/// With `sigma(x, z) = i^{xz} X^x Z^z` per site, moving `Z^{z1}` past
/// `X^{x2}` costs `(-1)^{z1 x2}`, and re-normalising the result to
/// `sigma(x1^x2, z1^z2)` costs `i^{x1 z1 + x2 z2 - x3 z3}`.
pub fn pauli_product(a: &PauliTerm, b: &PauliTerm) -> Result<PauliTerm> {
    if a.n != b.n {
        return Err(Error::Dimension {
            left: a.n,
            right: b.n,
        });
    }
    let x = a.x_mask ^ b.x_mask;
    let z = a.z_mask ^ b.z_mask;
    let ya = (a.x_mask & a.z_mask).count_ones();
    let yb = (b.x_mask & b.z_mask).count_ones();
    let yc = (x & z).count_ones();
    let swaps = (a.z_mask & b.x_mask).count_ones();
    // exponent of i, kept nonnegative mod 4
    let k = ya + yb + 2 * swaps + 4 * MASK_BITS as u32 - yc;
    Ok(PauliTerm {
        weight: a.weight * b.weight,
        phase: a.phase * b.phase * Phase::from_power(k),
        x_mask: x,
        z_mask: z,
        n: a.n,
    })
}

/// Scalar types a [`DiagonalPoly`] can carry.
pub trait Coefficient:
    Copy
    + fmt::Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + Mul<f64, Output = Self>
    + Send
    + Sync
{
    fn zero() -> Self;
    fn modulus(self) -> f64;
    fn to_complex(self) -> Complex64;
}

impl Coefficient for f64 {
    fn zero() -> Self {
        0.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Coefficient for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn to_complex(self) -> Complex64 {
        self
    }
}

/// Diagonal operator written as a polynomial in the `Z_k`:
/// `<z|D|z> = constant + sum_m c_m (-1)^{popcount(m & z)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalPoly<C> {
    pub n: usize,
    pub constant: C,
    /// `(z_mask, coefficient)`; masks are nonzero and distinct.
    pub terms: Vec<(Mask, C)>,
}

/// Real diagonal operator (energies).
pub type DiagonalPolynomial = DiagonalPoly<f64>;
/// Complex diagonal factor of an off-diagonal PMR term.
pub type ComplexDiagonal = DiagonalPoly<Complex64>;

impl<C: Coefficient> DiagonalPoly<C> {
    pub fn constant(n: usize, value: C) -> Self {
        Self {
            n,
            constant: value,
            terms: Vec::new(),
        }
    }

    /// Builds a polynomial, folding zero masks into the constant and merging
    /// repeated masks. Terms keep first-appearance order.
    pub fn from_terms(n: usize, constant: C, terms: impl IntoIterator<Item = (Mask, C)>) -> Self {
        let mut poly = Self::constant(n, constant);
        for (mask, c) in terms {
            poly.add_term(mask, c);
        }
        poly
    }

    pub fn add_term(&mut self, mask: Mask, c: C) {
        if mask == 0 {
            self.constant += c;
        } else if let Some(slot) = self.terms.iter_mut().find(|(m, _)| *m == mask) {
            slot.1 += c;
        } else {
            self.terms.push((mask, c));
        }
    }

    /// Removes terms whose coefficient is exactly zero.
    pub fn pruned(mut self) -> Self {
        self.terms.retain(|(_, c)| *c != C::zero());
        self
    }

    pub fn eval(&self, z: u64) -> C {
        let mut acc = self.constant;
        for &(mask, c) in &self.terms {
            acc += c * parity(mask & z);
        }
        acc
    }

    /// Union of all z-masks.
    pub fn support(&self) -> Mask {
        self.terms.iter().fold(0, |acc, (m, _)| acc | m)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    /// Exact `max_z |<z|D|z>|`, enumerating assignments of the support bits only.
    pub fn max_abs(&self) -> f64 {
        let support = self.support();
        let bits: Vec<u32> = (0..MASK_BITS as u32).filter(|b| support >> b & 1 == 1).collect();
        assert!(bits.len() <= 30, "diagonal support too large to enumerate ({} bits)", bits.len());
        let mut best = 0.0f64;
        for assignment in 0u64..(1u64 << bits.len()) {
            let mut z = 0u64;
            for (k, b) in bits.iter().enumerate() {
                if assignment >> k & 1 == 1 {
                    z |= 1 << b;
                }
            }
            best = best.max(self.eval(z).modulus());
        }
        best
    }

    /// Sum of coefficient magnitudes of the non-constant part; an upper bound
    /// on the spread `max_z E - min_z E` divided by two.
    pub fn l1_nonconstant(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.modulus()).sum()
    }

    pub fn map<D: Coefficient>(&self, f: impl Fn(C) -> D) -> DiagonalPoly<D> {
        DiagonalPoly {
            n: self.n,
            constant: f(self.constant),
            terms: self.terms.iter().map(|&(m, c)| (m, f(c))).collect(),
        }
    }
}

/// `<z|D|z>` without building a matrix.
pub fn diag_eval<C: Coefficient>(d: &DiagonalPoly<C>, z: &BasisState) -> C {
    d.eval(z.index)
}

/// Computational basis state `|z>` on `n` spins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisState {
    pub index: u64,
    pub n: usize,
}

impl BasisState {
    pub fn new(index: u64, n: usize) -> Result<Self> {
        if n > MASK_BITS || index & !mask_limit(n) != 0 {
            return Err(Error::invalid(format!("basis index {index} outside 2^{n}")));
        }
        Ok(Self { index, n })
    }

    pub fn flipped(self, mask: Mask) -> Self {
        Self {
            index: self.index ^ mask,
            n: self.n,
        }
    }
}

/// Guard rail on dense `2^n x 2^n` allocations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseLimits {
    pub max_spins: usize,
}

impl Default for DenseLimits {
    fn default() -> Self {
        Self { max_spins: 12 }
    }
}

impl DenseLimits {
    pub fn check(&self, n: usize) -> Result<()> {
        if n > self.max_spins {
            return Err(Error::Capacity {
                what: "dense operator spins",
                requested: n as u128,
                limit: self.max_spins as u128,
            });
        }
        Ok(())
    }
}

/// Dense `2^n x 2^n` complex operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    n: usize,
    matrix: DMatrix<Complex64>,
}

impl DenseOperator {
    pub fn zeros(n: usize, limits: &DenseLimits) -> Result<Self> {
        limits.check(n)?;
        let dim = 1usize << n;
        Ok(Self {
            n,
            matrix: DMatrix::zeros(dim, dim),
        })
    }

    pub fn identity(n: usize, limits: &DenseLimits) -> Result<Self> {
        limits.check(n)?;
        let dim = 1usize << n;
        Ok(Self {
            n,
            matrix: DMatrix::identity(dim, dim),
        })
    }

    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim || !dim.is_power_of_two() {
            return Err(Error::invalid(format!(
                "dense operator must be square with power-of-two size, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            n: dim.trailing_zeros() as usize,
            matrix,
        })
    }

    pub fn from_diagonal<C: Coefficient>(d: &DiagonalPoly<C>, limits: &DenseLimits) -> Result<Self> {
        let mut op = Self::zeros(d.n, limits)?;
        for z in 0..op.dim() {
            op.matrix[(z, z)] = d.eval(z as u64).to_complex();
        }
        Ok(op)
    }

    /// Sum of Pauli terms as a dense matrix.
    pub fn from_terms<'a>(
        n: usize,
        terms: impl IntoIterator<Item = &'a PauliTerm>,
        limits: &DenseLimits,
    ) -> Result<Self> {
        let mut op = Self::zeros(n, limits)?;
        for t in terms {
            if t.n != n {
                return Err(Error::Dimension { left: n, right: t.n });
            }
            op.add_pauli(t);
        }
        Ok(op)
    }

    fn add_pauli(&mut self, p: &PauliTerm) {
        for z in 0..self.dim() {
            let (row, value) = p.column_entry(z as u64);
            self.matrix[(row as usize, z)] += value;
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.matrix[(row, col)] = value;
    }

    pub fn column_mut(&mut self, col: usize) -> nalgebra::DVectorViewMut<'_, Complex64> {
        self.matrix.column_mut(col)
    }

    pub fn matmul(&self, rhs: &DenseOperator) -> Result<DenseOperator> {
        if self.n != rhs.n {
            return Err(Error::Dimension {
                left: self.n,
                right: rhs.n,
            });
        }
        Ok(DenseOperator {
            n: self.n,
            matrix: &self.matrix * &rhs.matrix,
        })
    }

    pub fn sub(&self, rhs: &DenseOperator) -> Result<DenseOperator> {
        if self.n != rhs.n {
            return Err(Error::Dimension {
                left: self.n,
                right: rhs.n,
            });
        }
        Ok(DenseOperator {
            n: self.n,
            matrix: &self.matrix - &rhs.matrix,
        })
    }

    pub fn scaled(&self, c: Complex64) -> DenseOperator {
        DenseOperator {
            n: self.n,
            matrix: &self.matrix * c,
        }
    }

    pub fn adjoint(&self) -> DenseOperator {
        DenseOperator {
            n: self.n,
            matrix: self.matrix.adjoint(),
        }
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        pmrsim_oracles::spectral_norm(&self.matrix)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.matrix.iter().fold(0.0f64, |acc, v| acc.max(v.norm()))
    }
}

/// Dense image of a single Pauli term on `n` spins.
pub fn pauli_to_dense(p: &PauliTerm, n: usize, limits: &DenseLimits) -> Result<DenseOperator> {
    limits.check(n)?;
    if n > MASK_BITS || (p.x_mask | p.z_mask) & !mask_limit(n) != 0 {
        return Err(Error::invalid(format!("Pauli term acts outside {n} spins")));
    }
    let mut op = DenseOperator::zeros(n, limits)?;
    op.add_pauli(p);
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &DenseOperator, b: &DMatrix<Complex64>, tol: f64) -> bool {
        (a.matrix() - b).iter().all(|v| v.norm() <= tol)
    }

    #[test]
    fn x_squared_is_identity() {
        let x = PauliTerm::x(1, 0, 1.0).unwrap();
        let p = pauli_product(&x, &x).unwrap();
        assert!(p.is_identity());
        assert_eq!(p.phase, Phase::PlusOne);
    }

    #[test]
    fn z_times_x_is_i_y() {
        // 2x2 oracle: Z X = [[0,1],[-1,0]] = iY
        let z = PauliTerm::z(1, 0, 1.0).unwrap();
        let x = PauliTerm::x(1, 0, 1.0).unwrap();
        let p = pauli_product(&z, &x).unwrap();
        assert_eq!((p.x_mask, p.z_mask, p.phase), (1, 1, Phase::PlusI));
        let zx = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(-1., 0.), c(0., 0.)]);
        assert!(close(&pauli_to_dense(&p, 1, &DenseLimits::default()).unwrap(), &zx, 0.0));
    }

    #[test]
    fn disjoint_supports() {
        let a = PauliTerm::x(2, 0, 1.0).unwrap();
        let b = PauliTerm::x(2, 1, 1.0).unwrap();
        let p = pauli_product(&a, &b).unwrap();
        assert_eq!((p.x_mask, p.z_mask, p.phase), (0b11, 0, Phase::PlusOne));
    }

    #[test]
    fn product_dimension_mismatch() {
        let a = PauliTerm::x(2, 0, 1.0).unwrap();
        let b = PauliTerm::x(3, 0, 1.0).unwrap();
        assert_eq!(pauli_product(&a, &b), Err(Error::Dimension { left: 2, right: 3 }));
    }

    #[test]
    fn dense_images() {
        let lim = DenseLimits::default();
        let id = pauli_to_dense(&PauliTerm::identity(1, 1.0).unwrap(), 1, &lim).unwrap();
        assert!(close(&id, &DMatrix::identity(2, 2), 0.0));
        let z = pauli_to_dense(&PauliTerm::z(1, 0, 1.0).unwrap(), 1, &lim).unwrap();
        assert_eq!(z.get(0, 0), c(1.0, 0.0));
        assert_eq!(z.get(1, 1), c(-1.0, 0.0));
        // X on site 0 of two spins swaps z and z^1; tensor oracle I (x) X
        let x = pauli_to_dense(&PauliTerm::x(2, 0, 1.0).unwrap(), 2, &lim).unwrap();
        let sx = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
        let kron = DMatrix::<Complex64>::identity(2, 2).kronecker(&sx);
        assert!(close(&x, &kron, 0.0));
    }

    #[test]
    fn dense_cap() {
        let lim = DenseLimits { max_spins: 3 };
        let p = PauliTerm::x(4, 0, 1.0).unwrap();
        assert!(matches!(pauli_to_dense(&p, 4, &lim), Err(Error::Capacity { .. })));
    }

    #[test]
    fn mask_out_of_range() {
        assert!(PauliTerm::new(2, 1.0, Phase::PlusOne, 0b100, 0).is_err());
    }

    #[test]
    fn diag_eval_examples() {
        let d = DiagonalPolynomial::from_terms(1, 0.0, [(1, 1.0)]);
        assert_eq!(diag_eval(&d, &BasisState::new(0, 1).unwrap()), 1.0);
        let zz = DiagonalPolynomial::from_terms(2, 0.0, [(0b11, 3.0)]);
        assert_eq!(diag_eval(&zz, &BasisState::new(0b11, 2).unwrap()), 3.0);
    }

    #[test]
    fn polynomial_folds_constant_and_merges() {
        let d = DiagonalPolynomial::from_terms(2, 1.0, [(0, 2.0), (1, 0.5), (1, 0.25)]);
        assert_eq!(d.constant, 3.0);
        assert_eq!(d.terms, vec![(1, 0.75)]);
        assert_eq!(d.max_abs(), 3.75);
    }

    #[test]
    fn basis_state_bounds() {
        assert!(BasisState::new(4, 2).is_err());
        assert_eq!(BasisState::new(5, 3).unwrap().flipped(0b010).index, 7);
    }

    #[test]
    fn display() {
        let y = pauli_product(&PauliTerm::z(2, 1, 1.0).unwrap(), &PauliTerm::x(2, 1, 0.5).unwrap()).unwrap();
        assert_eq!(y.to_string(), "+i0.5 Y1");
    }
}
