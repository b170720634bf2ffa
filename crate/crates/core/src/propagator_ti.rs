//! Truncated PMR series for `exp(-i H t)` with time-independent `H`.
//!
//! Column `z` of one segment is
//! `sum_{q <= Q} sum_{i_q} d_{i_q} dd(-i dt; 0, dE_1, ..., dE_q) |z_q>`
//! times `exp(-i dt E_z)`. Paths are enumerated depth first so every prefix
//! shares one [`DdAccumulator`].

use std::f64::consts::LN_2;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divided_difference::DdAccumulator;
use crate::error::{Error, Result};
use crate::pmr::{delta_energy, PMRForm};
use crate::spin::{BasisState, DenseLimits, DenseOperator};

/// Default cap on series paths enumerated per column.
pub const DEFAULT_PATH_BUDGET: u128 = 20_000_000;

/// Explicit tail terms summed before the geometric remainder.
const TAIL_TERMS: u32 = 30;

/// Upper limit on the truncation order searched by [`select_q_for`].
pub const MAX_ORDER: u32 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorOptions {
    pub limits: DenseLimits,
    pub path_budget: u128,
    pub parallel: bool,
}

impl Default for PropagatorOptions {
    fn default() -> Self {
        Self {
            limits: DenseLimits::default(),
            path_budget: DEFAULT_PATH_BUDGET,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentPlan {
    pub r: u64,
    pub dt: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationOrder {
    pub q: u32,
    pub eps_segment: f64,
    /// Tail bound at the chosen order.
    pub tail: f64,
}

/// `r = ceil(t Gamma / ln 2)`, at least 1.
pub fn select_r(t: f64, gamma: f64) -> Result<SegmentPlan> {
    if !(t >= 0.0) || !(gamma >= 0.0) || !t.is_finite() || !gamma.is_finite() {
        return Err(Error::invalid(format!("need finite t >= 0 and Gamma >= 0, got t={t}, Gamma={gamma}")));
    }
    let raw = (t * gamma / LN_2).ceil();
    if raw > 1e15 {
        return Err(Error::Capacity {
            what: "segments",
            requested: raw as u128,
            limit: 1_000_000_000_000_000,
        });
    }
    let r = (raw as u64).max(1);
    Ok(SegmentPlan {
        r,
        dt: t / r as f64,
        t,
    })
}

/// `sum_{q > order} x^q / q!` for `x >= 0`: thirty explicit terms, then the
/// next term times the geometric factor `1 / (1 - x / (k + 1))`.
pub fn tail_bound(x: f64, order: u32) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    // x^{order+1} / (order+1)!
    let mut term = 1.0f64;
    for k in 1..=order + 1 {
        term *= x / k as f64;
    }
    let mut sum = 0.0;
    let mut k = order + 1;
    for _ in 0..TAIL_TERMS {
        sum += term;
        k += 1;
        term *= x / k as f64;
    }
    let ratio = x / (k + 1) as f64;
    if ratio >= 1.0 {
        return f64::INFINITY;
    }
    sum + term / (1.0 - ratio)
}

/// Smallest `Q` with `tail_bound(x, Q) <= eps`.
pub fn select_q_for(x: f64, eps: f64) -> Result<u32> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be > 0, got {eps}")));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::invalid(format!("series argument must be finite and >= 0, got {x}")));
    }
    (0..=MAX_ORDER).find(|&q| tail_bound(x, q) <= eps).ok_or(Error::Capacity {
        what: "truncation order",
        requested: MAX_ORDER as u128 + 1,
        limit: MAX_ORDER as u128,
    })
}

/// Truncation order for a segment: tail of `(Gamma dt)` at most
/// `eps_total / (2 r)`.
pub fn select_q(plan: &SegmentPlan, gamma: f64, eps_total: f64) -> Result<TruncationOrder> {
    let eps_segment = eps_total / (2.0 * plan.r as f64);
    let x = gamma * plan.dt;
    let q = select_q_for(x, eps_segment)?;
    Ok(TruncationOrder {
        q,
        eps_segment,
        tail: tail_bound(x, q),
    })
}

/// `sum_{q <= order} x^q / q!`, the LCU weight of one segment.
pub fn lcu_weight(x: f64, order: u32) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=order {
        term *= x / k as f64;
        sum += term;
    }
    sum
}

/// Normalised series coefficient
/// `beta = q! / (Gamma_{i_q} dt^q) * dd(-i dt; 0, dE_1, ..., dE_q) * d_{i_q}`
/// with `beta = cos(phi) e^{i chi}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaCoefficient {
    pub value: Complex64,
    pub path: Vec<usize>,
    pub z: u64,
    pub chi: f64,
    pub phi: f64,
}

pub fn beta(form: &PMRForm, z: BasisState, path: &[usize], dt: f64) -> Result<BetaCoefficient> {
    let de = delta_energy(form, z, path)?;
    let mut acc = DdAccumulator::new(Complex64::new(0.0, -dt));
    acc.push(Complex64::new(0.0, 0.0))?;
    for &e in &de {
        acc.push(Complex64::new(e, 0.0))?;
    }
    let mut d = Complex64::new(1.0, 0.0);
    let mut gamma = 1.0;
    let mut state = z.index;
    let mut fact = 1.0;
    for (j, &i) in path.iter().enumerate() {
        state ^= form.terms[i].perm_mask;
        d *= form.amplitude(i, state);
        gamma *= form.terms[i].gamma;
        fact *= (j + 1) as f64;
    }
    let q = path.len() as i32;
    let value = if q == 0 {
        Complex64::new(1.0, 0.0)
    } else {
        acc.value() * d * (fact / (gamma * dt.powi(q)))
    };
    Ok(BetaCoefficient {
        value,
        path: path.to_vec(),
        z: z.index,
        chi: value.arg(),
        phi: value.norm().min(1.0).acos(),
    })
}

/// `sum_{q <= order} m^q`, saturating.
pub fn path_count(m: usize, order: u32) -> u128 {
    let mut total: u128 = 0;
    let mut level: u128 = 1;
    for _ in 0..=order {
        total = total.saturating_add(level);
        level = level.saturating_mul(m as u128);
    }
    total
}

struct ColumnWalk<'a> {
    form: &'a PMRForm,
    order: usize,
    acc: DdAccumulator,
    out: Vec<Complex64>,
}

impl ColumnWalk<'_> {
    fn descend(&mut self, depth: usize, state: u64, de: f64, amp: Complex64) -> Result<()> {
        if depth == self.order {
            return Ok(());
        }
        for i in 0..self.form.m() {
            let next = state ^ self.form.terms[i].perm_mask;
            let a = amp * self.form.amplitude(i, next);
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            let e = de + self.form.flip_delta(i, state);
            self.acc.push(Complex64::new(e, 0.0))?;
            self.out[next as usize] += self.acc.value() * a;
            self.descend(depth + 1, next, e, a)?;
            self.acc.pop();
        }
        Ok(())
    }
}

/// Off-diagonal series applied to `|z>`, without the `exp(-i dt E_z)` phase.
pub fn series_column(form: &PMRForm, z: u64, dt: f64, order: u32) -> Result<Vec<Complex64>> {
    let dim = 1usize << form.n;
    let mut acc = DdAccumulator::new(Complex64::new(0.0, -dt)).with_bound(dt * form.energy_spread());
    acc.push(Complex64::new(0.0, 0.0))?;
    let mut walk = ColumnWalk {
        form,
        order: order as usize,
        acc,
        out: vec![Complex64::new(0.0, 0.0); dim],
    };
    walk.out[z as usize] = Complex64::new(1.0, 0.0);
    walk.descend(0, z, 0.0, Complex64::new(1.0, 0.0))?;
    Ok(walk.out)
}

fn check_budget(form: &PMRForm, order: u32, budget: u128) -> Result<()> {
    let paths = path_count(form.m(), order);
    if paths > budget {
        return Err(Error::Capacity {
            what: "series paths per column",
            requested: paths,
            limit: budget,
        });
    }
    Ok(())
}

/// One segment `U_od exp(-i dt D_0)` truncated at `order`.
pub fn assemble_segment(form: &PMRForm, dt: f64, order: u32, opts: &PropagatorOptions) -> Result<DenseOperator> {
    opts.limits.check(form.n)?;
    check_budget(form, order, opts.path_budget)?;
    let dim = 1usize << form.n;
    let build = |z: usize| -> Result<Vec<Complex64>> {
        let mut col = series_column(form, z as u64, dt, order)?;
        let phase = Complex64::new(0.0, -dt * form.energy(z as u64)).exp();
        for v in col.iter_mut() {
            *v *= phase;
        }
        Ok(col)
    };
    let cols: Vec<Vec<Complex64>> = if opts.parallel {
        (0..dim).into_par_iter().map(build).collect::<Result<_>>()?
    } else {
        (0..dim).map(build).collect::<Result<_>>()?
    };
    let mut op = DenseOperator::zeros(form.n, &opts.limits)?;
    for (z, col) in cols.into_iter().enumerate() {
        op.column_mut(z).copy_from_slice(&col);
    }
    Ok(op)
}

#[derive(Debug, Clone)]
pub struct TiEvolution {
    pub operator: DenseOperator,
    pub plan: SegmentPlan,
    pub order: TruncationOrder,
    pub gamma: f64,
}

/// `exp(-i H t)` to spectral-norm accuracy `eps`: `r` identical segments,
/// each truncated so its tail is at most `eps / (2r)`.
pub fn evolve(form: &PMRForm, t: f64, eps: f64, opts: &PropagatorOptions) -> Result<TiEvolution> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be > 0, got {eps}")));
    }
    let gamma = form.gamma();
    let plan = select_r(t, gamma)?;
    let order = if gamma == 0.0 || t == 0.0 {
        TruncationOrder {
            q: 0,
            eps_segment: eps / (2.0 * plan.r as f64),
            tail: 0.0,
        }
    } else {
        select_q(&plan, gamma, eps)?
    };
    let segment = assemble_segment(form, plan.dt, order.q, opts)?;
    let mut operator = segment.clone();
    for _ in 1..plan.r {
        operator = segment.matmul(&operator)?;
    }
    Ok(TiEvolution {
        operator,
        plan,
        order,
        gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_rydberg_terms, RydbergParams};
    use crate::pmr::pmr_decompose;

    #[test]
    fn segment_counts() {
        assert_eq!(select_r(10.0, 2.0).unwrap().r, 29);
        assert_eq!(select_r(3.0, 0.0).unwrap().r, 1);
        assert_eq!(select_r(1.0, LN_2).unwrap().r, 1);
        let p = select_r(7.3, 1.9).unwrap();
        assert!(1.9 * p.dt <= LN_2 + 1e-12);
    }

    #[test]
    fn order_at_ln2() {
        let plan = SegmentPlan { r: 1, dt: LN_2, t: LN_2 };
        let q = select_q(&plan, 1.0, 2e-8).unwrap();
        // direct partial sums: tail(8) ~ 1.1e-7, tail(9) ~ 7.6e-9
        assert_eq!(q.q, 9);
    }

    #[test]
    fn order_zero_for_huge_eps() {
        let x: f64 = 0.4;
        assert_eq!(select_q_for(x, (x.exp() - 1.0) * (1.0 + 1e-12)).unwrap(), 0);
        assert!(select_q_for(x, (x.exp() - 1.0) * 0.999).unwrap() > 0);
    }

    #[test]
    fn order_monotone_in_eps() {
        let mut last = 0;
        for k in 1..40 {
            let q = select_q_for(0.9, 10f64.powi(-k)).unwrap();
            assert!(q >= last);
            last = q;
        }
    }

    #[test]
    fn tail_matches_direct_sum() {
        for &x in &[0.1, 0.5, LN_2, 2.0] {
            for q in 0..10 {
                let direct: f64 = x.exp() - lcu_weight(x, q);
                let b = tail_bound(x, q);
                assert!(b >= direct * (1.0 - 1e-9) || (direct - b).abs() < 1e-15);
                assert!(b <= direct * (1.0 + 1e-6) + 1e-15);
            }
        }
    }

    #[test]
    fn beta_examples() {
        let d = build_rydberg_terms(&RydbergParams::uniform(1, 1.0, 1.0, 0.0)).unwrap();
        let f = pmr_decompose(1, &d.terms).unwrap();
        let z = BasisState::new(0, 1).unwrap();
        assert_eq!(beta(&f, z, &[], 0.5).unwrap().value, Complex64::new(1.0, 0.0));
        let b = beta(&f, z, &[0], 0.5).unwrap();
        let expected = 2.0 * (1.0f64 * 0.5 / 2.0).sin() / 0.5;
        assert!((b.value.norm() - expected).abs() < 1e-14);
        assert!((b.value.norm() - 0.98962).abs() < 1e-5);
    }

    #[test]
    fn q_zero_is_diagonal_evolution() {
        let d = build_rydberg_terms(&RydbergParams::uniform(2, 1.0, 0.5, 0.3)).unwrap();
        let f = pmr_decompose(2, &d.terms).unwrap();
        let u = assemble_segment(&f, 0.3, 0, &PropagatorOptions::default()).unwrap();
        for z in 0..4 {
            for w in 0..4 {
                let expected = if z == w {
                    Complex64::new(0.0, -0.3 * f.energy(z as u64)).exp()
                } else {
                    Complex64::new(0.0, 0.0)
                };
                assert_eq!(u.get(w, z), expected);
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let d = build_rydberg_terms(&RydbergParams::uniform(3, 1.0, 0.5, 0.3)).unwrap();
        let f = pmr_decompose(3, &d.terms).unwrap();
        let opts = PropagatorOptions {
            path_budget: 10,
            ..Default::default()
        };
        match assemble_segment(&f, 0.1, 3, &opts) {
            Err(Error::Capacity { requested, .. }) => assert_eq!(requested, 1 + 3 + 9 + 27),
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn path_counts() {
        assert_eq!(path_count(3, 0), 1);
        assert_eq!(path_count(2, 3), 15);
        assert_eq!(path_count(usize::MAX, 10), u128::MAX);
    }
}
