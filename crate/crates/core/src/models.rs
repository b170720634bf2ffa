//! Rydberg chain and Floquet transverse-field Ising Hamiltonians.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{PauliTerm, MASK_BITS};

/// Neutral-atom chain
/// `H = 1/2 sum_i (Omega_i X_i - delta Z_i) + sum_{i<j} C6 / |r_i - r_j|^6 n_i n_j`
/// with `n_i = (I + Z_i) / 2` and atoms spaced `r` apart on a line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RydbergParams {
    pub omegas: Vec<f64>,
    pub delta: f64,
    pub c6: f64,
    pub r: f64,
}

impl RydbergParams {
    /// Uniform Rabi frequency, unit spacing, so `c6' = c6`.
    pub fn uniform(n: usize, omega: f64, delta: f64, c6_prime: f64) -> Self {
        Self {
            omegas: vec![omega; n],
            delta,
            c6: c6_prime,
            r: 1.0,
        }
    }

    pub fn n(&self) -> usize {
        self.omegas.len()
    }

    /// `C6' = C6 / R^6`.
    pub fn c6_prime(&self) -> f64 {
        self.c6 / self.r.powi(6)
    }

    pub fn mean_omega(&self) -> f64 {
        self.omegas.iter().sum::<f64>() / self.n() as f64
    }

    pub fn max_omega(&self) -> f64 {
        self.omegas.iter().copied().fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::validation("Rydberg chain needs at least one atom"));
        }
        if n > MASK_BITS {
            return Err(Error::validation(format!("at most {MASK_BITS} atoms supported, got {n}")));
        }
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(Error::validation(format!("lattice spacing must be > 0, got {}", self.r)));
        }
        if let Some(w) = self.omegas.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::validation(format!("Rabi frequencies must be finite and >= 0, got {w}")));
        }
        if !self.delta.is_finite() || !self.c6.is_finite() {
            return Err(Error::validation("detuning and C6 must be finite"));
        }
        Ok(())
    }
}

/// Pauli form of the Rydberg Hamiltonian together with the pair constants
/// it was built from.
///
/// With `C_ij = C6' / |i-j|^6`, `C'_i = sum_{j>i} C_ij`,
/// `C''_j = sum_{i<j} C_ij` and `C = sum_{i<j} C_ij`, expanding
/// `n_i n_j = (I + Z_i + Z_j + Z_i Z_j) / 4` gives
/// `H = C/4 I + sum Omega_i/2 X_i + sum ((C'_i + C''_i)/4 - delta/2) Z_i + sum C_ij/4 Z_i Z_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RydbergDecomposition {
    pub n: usize,
    /// Coefficient of the identity, `C / 4`.
    pub identity: f64,
    /// Non-identity terms with nonzero weight: X terms by site, then Z by
    /// site, then ZZ by `(i, j)`.
    pub terms: Vec<PauliTerm>,
    /// `(i, j, C_ij)` for `i < j`.
    pub pair: Vec<(usize, usize, f64)>,
    pub c_prime: Vec<f64>,
    pub c_double_prime: Vec<f64>,
    pub c_total: f64,
}

impl RydbergDecomposition {
    /// Number of non-identity Pauli terms.
    pub fn m(&self) -> usize {
        self.terms.len()
    }
}

pub fn build_rydberg_terms(p: &RydbergParams) -> Result<RydbergDecomposition> {
    p.validate()?;
    let n = p.n();
    let c6p = p.c6_prime();
    let mut pair = Vec::new();
    let mut c_prime = vec![0.0; n];
    let mut c_double_prime = vec![0.0; n];
    for i in 0..n {
        for j in i + 1..n {
            let c = c6p / ((j - i) as f64).powi(6);
            pair.push((i, j, c));
            c_prime[i] += c;
            c_double_prime[j] += c;
        }
    }
    let c_total: f64 = pair.iter().map(|t| t.2).sum();

    let mut terms = Vec::new();
    for (i, &w) in p.omegas.iter().enumerate() {
        if w != 0.0 {
            terms.push(PauliTerm::x(n, i, w / 2.0)?);
        }
    }
    for i in 0..n {
        let c = (c_prime[i] + c_double_prime[i]) / 4.0 - p.delta / 2.0;
        if c != 0.0 {
            terms.push(PauliTerm::z(n, i, c)?);
        }
    }
    for &(i, j, c) in &pair {
        if c != 0.0 {
            terms.push(PauliTerm::zz(n, i, j, c / 4.0)?);
        }
    }
    Ok(RydbergDecomposition {
        n,
        identity: c_total / 4.0,
        terms,
        pair,
        c_prime,
        c_double_prime,
        c_total,
    })
}

/// `alpha = sum |alpha_i|` over the non-identity Pauli terms.
pub fn rydberg_alpha(p: &RydbergParams) -> Result<f64> {
    Ok(build_rydberg_terms(p)?.terms.iter().map(|t| t.weight).sum())
}

/// `pi^6 / 945`.
pub const ZETA6: f64 = 1.017_343_061_984_449;

/// Term-wise upper bound `N (Omega_max/2 + |delta|/2 + 2 zeta(6) C6')`.
pub fn rydberg_alpha_bound(p: &RydbergParams) -> f64 {
    p.n() as f64 * (p.max_omega() / 2.0 + p.delta.abs() / 2.0 + 2.0 * ZETA6 * p.c6_prime().abs())
}

/// Periodically driven transverse-field Ising model on a periodic
/// `n_per_axis^dim` hypercubic lattice:
/// `H(t) = -J sum_<ij> Z_i Z_j - zeta cos(omega t) sum_i X_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloquetTFIMParams {
    pub n_per_axis: usize,
    pub dim: usize,
    pub j: f64,
    pub zeta: f64,
    pub omega: f64,
}

impl FloquetTFIMParams {
    /// Total site count `N = n_per_axis^dim`, or `None` on overflow.
    pub fn checked_sites(&self) -> Option<usize> {
        let mut total: usize = 1;
        for _ in 0..self.dim {
            total = total.checked_mul(self.n_per_axis)?;
        }
        Some(total)
    }

    /// # Panics
    /// If `n_per_axis^dim` overflows `usize`; call [`Self::validate`] first.
    pub fn sites(&self) -> usize {
        self.checked_sites().expect("lattice size overflows usize")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_per_axis < 1 {
            return Err(Error::validation("need at least 1 site per axis"));
        }
        if self.dim < 1 {
            return Err(Error::validation("lattice dimension must be >= 1"));
        }
        match self.checked_sites() {
            Some(n) if n <= MASK_BITS => {}
            _ => {
                return Err(Error::validation(format!(
                    "lattice {}^{} exceeds {MASK_BITS} sites",
                    self.n_per_axis, self.dim
                )))
            }
        }
        for (name, v) in [("J", self.j), ("zeta", self.zeta), ("omega", self.omega)] {
            if !v.is_finite() {
                return Err(Error::validation(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// Drive prefactor `-zeta cos(omega t)` multiplying `sum_i X_i`.
    pub fn drive(&self, t: f64) -> f64 {
        -self.zeta * (self.omega * t).cos()
    }

    /// Time derivative of [`Self::drive`].
    pub fn drive_derivative(&self, t: f64) -> f64 {
        self.zeta * self.omega * (self.omega * t).sin()
    }
}

/// Unordered site pairs, stored as `(min, max)`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EdgeList {
    pub edges: BTreeSet<(usize, usize)>,
}

impl EdgeList {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(usize, usize)> {
        self.edges.iter()
    }
}

/// Nearest-neighbour bonds of the periodic hypercubic lattice.
///
/// Sites are numbered row-major, the last axis fastest. Each site links to
/// its `+1 (mod n_per_axis)` neighbour on every axis; with two sites per
/// axis both directions name the same bond, which is kept once.
pub fn periodic_lattice_edges(n_per_axis: usize, dim: usize) -> EdgeList {
    let total = n_per_axis.pow(dim as u32);
    let mut edges = BTreeSet::new();
    for site in 0..total {
        let mut stride = 1;
        for _axis in 0..dim {
            let coord = (site / stride) % n_per_axis;
            let neighbour = site - coord * stride + ((coord + 1) % n_per_axis) * stride;
            if neighbour != site {
                edges.insert((site.min(neighbour), site.max(neighbour)));
            }
            stride *= n_per_axis;
        }
    }
    EdgeList { edges }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfimModel {
    pub params: FloquetTFIMParams,
    /// Static part `A = -J sum_<ij> Z_i Z_j`.
    pub a_terms: Vec<PauliTerm>,
    pub edges: EdgeList,
    /// Number of sites carrying the `X` drive (all of them).
    pub drive_sites: usize,
}

impl TfimModel {
    pub fn n(&self) -> usize {
        self.drive_sites
    }

    /// `sum_i X_i` with unit weights.
    pub fn drive_terms(&self) -> Vec<PauliTerm> {
        (0..self.drive_sites)
            .map(|i| PauliTerm::x(self.drive_sites, i, 1.0).expect("site within lattice"))
            .collect()
    }

    /// All terms of `H(t)` at a fixed time.
    pub fn terms_at(&self, t: f64) -> Vec<PauliTerm> {
        let c = self.params.drive(t);
        let mut out = self.a_terms.clone();
        if c != 0.0 {
            for i in 0..self.drive_sites {
                out.push(PauliTerm::x(self.drive_sites, i, c).expect("site within lattice"));
            }
        }
        out
    }
}

pub fn build_tfim(p: &FloquetTFIMParams) -> Result<TfimModel> {
    p.validate()?;
    let n = p.sites();
    let edges = periodic_lattice_edges(p.n_per_axis, p.dim);
    let mut a_terms = Vec::with_capacity(edges.len());
    if p.j != 0.0 {
        for &(i, j) in edges.iter() {
            a_terms.push(PauliTerm::zz(n, i, j, -p.j)?);
        }
    }
    Ok(TfimModel {
        params: *p,
        a_terms,
        edges,
        drive_sites: n,
    })
}
