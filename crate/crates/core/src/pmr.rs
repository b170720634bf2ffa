//! Permutation-matrix representation `H = D_0 + sum_i D_i P_i`.
//!
//! Every `P_i` is an X-type mask (a product of `X_k`); the phases and Z
//! structure of the Pauli terms sharing that mask are folded into the
//! diagonal factor `D_i`. `D_i` is evaluated at the state *after* the flip,
//! so `H |z> = E_z |z> + sum_i d_i(z ^ x_i) |z ^ x_i>`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{
    parity, BasisState, ComplexDiagonal, DenseLimits, DenseOperator, DiagonalPolynomial, Mask, PauliTerm, Phase,
};

/// Diagonal support bits enumerated when computing `Gamma_i` exactly.
pub const MAX_SUPPORT_BITS: u32 = 30;

/// Relative tolerance for the Hermiticity check of the input.
const HERMITIAN_TOL: f64 = 1e-12;

/// One off-diagonal term `D_i P_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmrTerm {
    pub perm_mask: Mask,
    pub diag: ComplexDiagonal,
    /// `max_z |d_i(z)|`.
    pub gamma: f64,
}

/// Energy change `E(z ^ x) - E(z) = sum_t -2 c_t (-1)^{popcount(m_t & z)}`
/// over the `D_0` terms `t` whose mask overlaps `x` on an odd number of bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipDelta {
    pub terms: Vec<(Mask, f64)>,
}

impl FlipDelta {
    pub(crate) fn new(d0: &DiagonalPolynomial, x: Mask) -> Self {
        Self {
            terms: d0
                .terms
                .iter()
                .filter(|(m, _)| (m & x).count_ones() & 1 == 1)
                .map(|&(m, c)| (m, -2.0 * c))
                .collect(),
        }
    }

    #[inline]
    pub fn eval(&self, z: u64) -> f64 {
        let mut acc = 0.0;
        for &(m, c) in &self.terms {
            acc += c * parity(m & z);
        }
        acc
    }

    /// Number of `D_0` terms touched by the flip.
    pub fn touched(&self) -> usize {
        self.terms.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PMRForm {
    pub n: usize,
    /// Diagonal part; its phases drive the diagonal evolution.
    pub d0: DiagonalPolynomial,
    pub terms: Vec<PmrTerm>,
    /// Diagonal used for energy differences when it differs from `d0`
    /// (the truncated-diagonal mode).
    pub delta_source: Option<DiagonalPolynomial>,
    flips: Vec<FlipDelta>,
}

impl PMRForm {
    fn assemble(n: usize, d0: DiagonalPolynomial, terms: Vec<PmrTerm>, delta_source: Option<DiagonalPolynomial>) -> Self {
        let src = delta_source.as_ref().unwrap_or(&d0);
        let flips = terms.iter().map(|t| FlipDelta::new(src, t.perm_mask)).collect();
        Self {
            n,
            d0,
            terms,
            delta_source,
            flips,
        }
    }

    /// Number of off-diagonal terms `M`.
    pub fn m(&self) -> usize {
        self.terms.len()
    }

    /// `Gamma = sum_i Gamma_i`.
    pub fn gamma(&self) -> f64 {
        self.terms.iter().map(|t| t.gamma).sum()
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.gamma).collect()
    }

    /// `D_0` terms touched by flipping with `P_i`; the empirical `C_{Delta D0}`.
    pub fn touched_terms(&self, i: usize) -> usize {
        self.flips[i].touched()
    }

    /// Number of non-constant terms of `D_0`; the empirical `C_{D0}`.
    pub fn d0_terms(&self) -> usize {
        self.d0.terms.len()
    }

    #[inline]
    pub fn energy(&self, z: u64) -> f64 {
        self.d0.eval(z)
    }

    /// `E(z ^ x_i) - E(z)` from the energy-difference diagonal.
    #[inline]
    pub fn flip_delta(&self, i: usize, z: u64) -> f64 {
        self.flips[i].eval(z)
    }

    /// `d_i(z)`, the diagonal factor at the post-flip state `z`.
    #[inline]
    pub fn amplitude(&self, i: usize, z: u64) -> Complex64 {
        self.terms[i].diag.eval(z)
    }

    /// Replaces the diagonals: `phase_d0` drives the diagonal evolution and
    /// `delta_d0` the energy differences.
    pub fn with_diagonals(&self, phase_d0: DiagonalPolynomial, delta_d0: DiagonalPolynomial) -> Result<Self> {
        if phase_d0.n != self.n || delta_d0.n != self.n {
            return Err(Error::Dimension {
                left: self.n,
                right: if phase_d0.n != self.n { phase_d0.n } else { delta_d0.n },
            });
        }
        Ok(Self::assemble(self.n, phase_d0, self.terms.clone(), Some(delta_d0)))
    }

    /// Largest `|E(z') - E(z)|` reachable in a single flip, bounded by the
    /// coefficient magnitudes.
    pub fn max_flip_delta(&self) -> f64 {
        self.flips
            .iter()
            .map(|f| f.terms.iter().map(|(_, c)| c.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Bound on `|E(z') - E(z)|` between any two states.
    pub fn energy_spread(&self) -> f64 {
        let src = self.delta_source.as_ref().unwrap_or(&self.d0);
        2.0 * src.l1_nonconstant()
    }

    /// `D_0 + sum_i D_i P_i` as a dense matrix.
    pub fn to_dense(&self, limits: &DenseLimits) -> Result<DenseOperator> {
        let mut op = DenseOperator::from_diagonal(&self.d0, limits)?;
        for t in &self.terms {
            for z in 0..op.dim() {
                let row = z ^ t.perm_mask as usize;
                let v = op.get(row, z) + t.diag.eval(row as u64);
                op.set(row, z, v);
            }
        }
        Ok(op)
    }
}

/// Groups Pauli terms by X mask.
///
/// For a term `w * phase * sigma(x, m)`, the column entry is
/// `<z ^ x| P |z> = c i^{|x & m|} (-1)^{|m & z|}` with `c = w * phase`, so as a
/// function of the post-flip state `z' = z ^ x` its diagonal factor is
/// `c i^{|x & m|} (-1)^{|m & x|} (-1)^{|m & z'|}`. The total is Hermitian
/// iff each such coefficient is real for even `|m & x|` and imaginary for
/// odd `|m & x|`; the `x = 0` group must be real.
pub fn pmr_decompose(n: usize, terms: &[PauliTerm]) -> Result<PMRForm> {
    let mut groups: BTreeMap<Mask, ComplexDiagonal> = BTreeMap::new();
    let mut scale = 0.0f64;
    for t in terms {
        if t.n != n {
            return Err(Error::Dimension { left: n, right: t.n });
        }
        let y = (t.x_mask & t.z_mask).count_ones();
        let c = t.coefficient() * Phase::from_power(y).to_complex() * parity(t.z_mask & t.x_mask);
        scale = scale.max(c.norm());
        groups
            .entry(t.x_mask)
            .or_insert_with(|| ComplexDiagonal::constant(n, Complex64::new(0.0, 0.0)))
            .add_term(t.z_mask, c);
    }
    let tol = HERMITIAN_TOL * scale.max(1.0);

    let mut d0 = DiagonalPolynomial::constant(n, 0.0);
    let mut out = Vec::new();
    for (x, diag) in groups {
        let mut coeffs = vec![(0, diag.constant)];
        coeffs.extend(diag.terms.iter().copied());
        for &(m, c) in &coeffs {
            let odd = (m & x).count_ones() & 1 == 1;
            let bad = if odd { c.re.abs() } else { c.im.abs() };
            if bad > tol {
                return Err(Error::validation(format!(
                    "non-Hermitian input: coefficient {c} on x-mask {x:#b}, z-mask {m:#b}"
                )));
            }
        }
        if x == 0 {
            d0 = DiagonalPolynomial::from_terms(n, diag.constant.re, diag.terms.iter().map(|&(m, c)| (m, c.re))).pruned();
            continue;
        }
        let diag = diag.pruned();
        if diag.constant == Complex64::new(0.0, 0.0) && diag.terms.is_empty() {
            continue;
        }
        let bits = diag.support().count_ones();
        if bits > MAX_SUPPORT_BITS {
            return Err(Error::Capacity {
                what: "diagonal support bits",
                requested: bits as u128,
                limit: MAX_SUPPORT_BITS as u128,
            });
        }
        let gamma = diag.max_abs();
        out.push(PmrTerm {
            perm_mask: x,
            diag,
            gamma,
        });
    }
    Ok(PMRForm::assemble(n, d0, out, None))
}

/// `z ^ perm_mask`.
pub fn apply_perm(z: BasisState, perm_mask: Mask) -> BasisState {
    z.flipped(perm_mask)
}

/// `(Delta E_{z_1}, ..., Delta E_{z_q})` along `z -> z_1 -> ... -> z_q`,
/// with `Delta E_{z_j} = E_{z_j} - E_z`, computed incrementally.
pub fn delta_energy(form: &PMRForm, z: BasisState, path: &[usize]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(path.len());
    let mut state = z.index;
    let mut acc = 0.0;
    for &i in path {
        if i >= form.m() {
            return Err(Error::invalid(format!("path index {i} out of range (M = {})", form.m())));
        }
        acc += form.flip_delta(i, state);
        state ^= form.terms[i].perm_mask;
        out.push(acc);
    }
    Ok(out)
}
