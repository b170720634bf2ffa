//! Cutting the long-range tail of the Rydberg `Z_i Z_j` interaction.
//!
//! Two independent cutoffs: `n_C` for the diagonal phases `exp(-i dt D_0)`
//! and `n_D` for the energy differences fed to the divided differences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{build_rydberg_terms, RydbergParams};
use crate::pmr::{pmr_decompose, PMRForm};
use crate::propagator_ti::{assemble_segment, select_q, select_r, PropagatorOptions, TiEvolution};
use crate::spin::{DiagonalPolynomial, Mask};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffPlan {
    /// Cutoff range in lattice units.
    pub n: usize,
    /// Value before the ceiling and the floor at 1.
    pub raw: f64,
    pub target_eps: f64,
    pub t: f64,
    /// Truncation order (energy-difference cutoff only).
    pub q: Option<u32>,
}

fn check_positive(t: f64, c6_prime: f64, eps: f64) -> Result<()> {
    for (name, v) in [("t", t), ("C6'", c6_prime), ("eps", eps)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid(format!("{name} must be finite and > 0, got {v}")));
        }
    }
    Ok(())
}

fn ceil_at_least_one(raw: f64) -> usize {
    (raw.ceil() as usize).max(1)
}

/// `n = max(1, ceil((t C6' / (5 eps))^{1/5}))`.
pub fn cutoff_d0(t: f64, c6_prime: f64, eps: f64) -> Result<CutoffPlan> {
    check_positive(t, c6_prime, eps)?;
    let raw = (t * c6_prime / (5.0 * eps)).powf(0.2);
    Ok(CutoffPlan {
        n: ceil_at_least_one(raw),
        raw,
        target_eps: eps,
        t,
        q: None,
    })
}

/// `n = max(1, ceil((8 Q t C6' / (5 eps))^{1/5}))`.
pub fn cutoff_delta_d0(q: u32, t: f64, c6_prime: f64, eps: f64) -> Result<CutoffPlan> {
    check_positive(t, c6_prime, eps)?;
    if q == 0 {
        return Err(Error::invalid("energy-difference cutoff needs Q >= 1"));
    }
    let raw = (8.0 * q as f64 * t * c6_prime / (5.0 * eps)).powf(0.2);
    Ok(CutoffPlan {
        n: ceil_at_least_one(raw),
        raw,
        target_eps: eps,
        t,
        q: Some(q),
    })
}

/// `(i, j)` with `i < j` if `mask` has exactly two bits.
fn pair_of(mask: Mask) -> Option<(usize, usize)> {
    if mask.count_ones() != 2 {
        return None;
    }
    let i = mask.trailing_zeros() as usize;
    let j = 63 - mask.leading_zeros() as usize;
    Some((i, j))
}

fn dropped(mask: Mask, n_cut: usize) -> bool {
    matches!(pair_of(mask), Some((i, j)) if j - i > n_cut)
}

/// Drops every two-site term with `|i - j| > n_cut`; single-site terms and
/// the constant are kept.
pub fn truncate_interaction(d0: &DiagonalPolynomial, n_cut: usize) -> DiagonalPolynomial {
    DiagonalPolynomial {
        n: d0.n,
        constant: d0.constant,
        terms: d0.terms.iter().copied().filter(|&(m, _)| !dropped(m, n_cut)).collect(),
    }
}

/// `max_z |<z|D_0 - D~_0|z>|` for the cutoff `n_cut`.
///
/// When every dropped coefficient has the same sign (the Rydberg case) the
/// maximum is attained at `z = 0` and equals the sum of magnitudes.
/// Otherwise the support is enumerated.
pub fn interaction_truncation_error(d0: &DiagonalPolynomial, n_cut: usize) -> f64 {
    let rest: Vec<(Mask, f64)> = d0.terms.iter().copied().filter(|&(m, _)| dropped(m, n_cut)).collect();
    let same_sign = rest.iter().all(|t| t.1 >= 0.0) || rest.iter().all(|t| t.1 <= 0.0);
    let l1: f64 = rest.iter().map(|t| t.1.abs()).sum();
    let diff = DiagonalPolynomial::from_terms(d0.n, 0.0, rest);
    if same_sign || diff.support().count_ones() > 24 {
        l1
    } else {
        diff.max_abs()
    }
}

/// `max_z |dE(z) - dE~(z)|` for a flip of `site`, where `dE~` comes from
/// the cutoff `n_cut`. Every dropped term contains `site`, so the other
/// spins align all signs and the maximum is `2 sum |c|`.
pub fn delta_truncation_error(d0: &DiagonalPolynomial, n_cut: usize, site: usize) -> f64 {
    2.0 * d0
        .terms
        .iter()
        .filter(|&&(m, _)| dropped(m, n_cut) && m >> site & 1 == 1)
        .map(|t| t.1.abs())
        .sum::<f64>()
}

/// Per-flip energy-difference error budget `eps / (2 Q t)`.
pub fn delta_budget(eps: f64, q: u32, t: f64) -> f64 {
    eps / (2.0 * q as f64 * t)
}

#[derive(Debug, Clone)]
pub struct TruncatedEvolution {
    pub evolution: TiEvolution,
    pub d0_cutoff: CutoffPlan,
    pub delta_cutoff: CutoffPlan,
    /// Cutoffs actually used; larger than the formula values only if the
    /// measured error exceeded the budget.
    pub n_c: usize,
    pub n_d: usize,
    /// Measured `||D_0 - D~_0||`.
    pub d0_error: f64,
    /// Measured worst per-flip energy-difference error.
    pub delta_error: f64,
}

/// `exp(-i H t)` with truncated diagonals. The budget `eps` is split in
/// thirds between the series tail, the diagonal phases and the energy
/// differences.
pub fn evolve_truncated(p: &RydbergParams, t: f64, eps: f64, opts: &PropagatorOptions) -> Result<TruncatedEvolution> {
    if !(eps > 0.0) || !(t > 0.0) {
        return Err(Error::invalid("truncated evolution needs t > 0 and eps > 0"));
    }
    let dec = build_rydberg_terms(p)?;
    let form = pmr_decompose(dec.n, &dec.terms)?;
    let third = eps / 3.0;
    let gamma = form.gamma();
    let plan = select_r(t, gamma)?;
    let order = select_q(&plan, gamma, third)?;
    let c6p = p.c6_prime();
    let n_sites = dec.n;

    let (d0_cutoff, delta_cutoff, n_c, n_d) = if c6p > 0.0 {
        let d0_cutoff = cutoff_d0(t, c6p, third)?;
        let delta_cutoff = cutoff_delta_d0(order.q.max(1), t, c6p, third)?;
        let mut n_c = d0_cutoff.n;
        while n_c < n_sites && interaction_truncation_error(&form.d0, n_c) > third / t {
            n_c += 1;
        }
        let budget = delta_budget(third, order.q.max(1), t);
        let mut n_d = delta_cutoff.n;
        while n_d < n_sites && (0..n_sites).any(|k| delta_truncation_error(&form.d0, n_d, k) > budget) {
            n_d += 1;
        }
        (d0_cutoff, delta_cutoff, n_c, n_d)
    } else {
        let none = CutoffPlan {
            n: n_sites,
            raw: 0.0,
            target_eps: third,
            t,
            q: None,
        };
        (none, CutoffPlan { q: Some(order.q), ..none }, n_sites, n_sites)
    };

    let truncated: PMRForm =
        form.with_diagonals(truncate_interaction(&form.d0, n_c), truncate_interaction(&form.d0, n_d))?;
    let segment = assemble_segment(&truncated, plan.dt, order.q, opts)?;
    let mut operator = segment.clone();
    for _ in 1..plan.r {
        operator = segment.matmul(&operator)?;
    }
    let d0_error = interaction_truncation_error(&form.d0, n_c);
    let delta_error = (0..n_sites)
        .map(|k| delta_truncation_error(&form.d0, n_d, k))
        .fold(0.0, f64::max);
    Ok(TruncatedEvolution {
        evolution: TiEvolution {
            operator,
            plan,
            order,
            gamma,
        },
        d0_cutoff,
        delta_cutoff,
        n_c,
        n_d,
        d0_error,
        delta_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printed_cutoffs() {
        assert_eq!(cutoff_d0(1.0, 1.0, 1e-3).unwrap().n, 3);
        assert_eq!(cutoff_delta_d0(1, 1.0, 1.0, 1e-3).unwrap().n, 5);
        assert_eq!(cutoff_d0(1.0, 1.0, 0.5).unwrap().n, 1);
        assert_eq!(cutoff_delta_d0(1, 1.0, 1.0, 1e6).unwrap().n, 1);
    }

    #[test]
    fn cutoff_power_law() {
        let a = cutoff_d0(2.0, 0.7, 1e-4).unwrap();
        let b = cutoff_d0(2.0, 0.7, 0.5e-4).unwrap();
        assert!((b.raw / a.raw - 2f64.powf(0.2)).abs() < 1e-12);
        let c = cutoff_delta_d0(1, 1.0, 1.0, 1e-3).unwrap();
        let d = cutoff_delta_d0(8, 1.0, 1.0, 1e-3).unwrap();
        assert!((d.raw / c.raw - 8f64.powf(0.2)).abs() < 1e-12);
    }

    #[test]
    fn invalid_inputs() {
        assert!(cutoff_d0(0.0, 1.0, 1e-3).is_err());
        assert!(cutoff_delta_d0(0, 1.0, 1.0, 1e-3).is_err());
    }

    #[test]
    fn four_site_nearest_neighbour() {
        let dec = build_rydberg_terms(&RydbergParams::uniform(4, 1.0, 0.5, 1.0)).unwrap();
        let form = pmr_decompose(4, &dec.terms).unwrap();
        let tr = truncate_interaction(&form.d0, 1);
        let pairs: Vec<_> = tr.terms.iter().filter_map(|&(m, _)| pair_of(m)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 2), (2, 3)]);
        assert_eq!(tr.terms.len() - pairs.len(), 4);
        assert_eq!(truncate_interaction(&form.d0, 3), form.d0);
    }
}
