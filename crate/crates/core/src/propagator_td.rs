//! Time-dependent PMR series in a segment-local interaction picture.
//!
//! For `H(t) = D_0 + sum_i sum_k exp(Lambda_k t) D_i^(k) P_i`, the segment
//! `[t_a, t_b]` with `h = t_b - t_a` is `U = exp(-i h D_0) U_I`, where
//! `U_I` is the Dyson series of `exp(i D_0 u) V(t_a + u) exp(-i D_0 u)`.
//! Leg `j` of a path carries the rate
//! `lt_j = Lambda_{k_j} + i (E_{z_j} - E_{z_{j-1}})` and the amplitude
//! `exp(Lambda_{k_j} t_a) d^(k_j)_{i_j}(z_j)`. The ordered time integral of
//! the legs is the divided difference of `exp(h x)` over the suffix sums
//! `x_j = sum_{l >= j} lt_l` and a final node 0.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divided_difference::{DdAccumulator, NodeSet};
use crate::error::{Error, Result};
use crate::models::{build_tfim, FloquetTFIMParams};
use crate::pmr::{pmr_decompose, FlipDelta};
use crate::propagator_ti::{path_count, select_q_for, select_r, tail_bound, PropagatorOptions, SegmentPlan, TruncationOrder};
use crate::spin::{BasisState, ComplexDiagonal, DenseLimits, DenseOperator, DiagonalPolynomial, Mask};

/// Sign `sigma` in `lt_j = Lambda + sigma i (E_{z_{j-1}} - E_{z_j})`.
/// Fixed by matching the first-order term against direct quadrature of the
/// interaction-picture Hamiltonian.
pub const INTERACTION_SIGN: f64 = -1.0;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdComponent {
    pub rate: Complex64,
    pub amp: ComplexDiagonal,
    /// `max_z |amp(z)|`.
    pub amp_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdTerm {
    pub perm_mask: Mask,
    pub components: Vec<TdComponent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TDPMRForm {
    pub n: usize,
    pub d0: DiagonalPolynomial,
    pub terms: Vec<TdTerm>,
    flips: Vec<FlipDelta>,
}

impl TDPMRForm {
    pub fn new(n: usize, d0: DiagonalPolynomial, terms: Vec<TdTerm>) -> Result<Self> {
        if d0.n != n {
            return Err(Error::Dimension { left: n, right: d0.n });
        }
        for t in &terms {
            if t.perm_mask == 0 {
                return Err(Error::invalid("time-dependent term with empty permutation mask"));
            }
            if t.components.iter().any(|c| c.amp.n != n || !c.rate.is_finite()) {
                return Err(Error::invalid("component amplitude on the wrong spin count or non-finite rate"));
            }
        }
        let flips = terms.iter().map(|t| FlipDelta::new(&d0, t.perm_mask)).collect();
        Ok(Self { n, d0, terms, flips })
    }

    pub fn m(&self) -> usize {
        self.terms.len()
    }

    /// Largest component count over the terms.
    pub fn k(&self) -> usize {
        self.terms.iter().map(|t| t.components.len()).max().unwrap_or(0)
    }

    /// `max Re(Lambda)` over all components.
    pub fn lambda(&self) -> f64 {
        let l = self
            .terms
            .iter()
            .flat_map(|t| t.components.iter().map(|c| c.rate.re))
            .fold(f64::NEG_INFINITY, f64::max);
        if l == f64::NEG_INFINITY {
            0.0
        } else {
            l
        }
    }

    /// `D_i(t)` at diagonal index `z`.
    pub fn coefficient(&self, i: usize, t: f64, z: u64) -> Complex64 {
        self.terms[i]
            .components
            .iter()
            .map(|c| (c.rate * t).exp() * c.amp.eval(z))
            .sum()
    }

    /// Exact `Gamma(t) = sum_i max_z |D_i(t)(z)|`.
    pub fn gamma_at(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| {
                let mut d = ComplexDiagonal::constant(self.n, ZERO);
                for c in &term.components {
                    let f = (c.rate * t).exp();
                    d.constant += c.amp.constant * f;
                    for &(m, v) in &c.amp.terms {
                        d.add_term(m, v * f);
                    }
                }
                d.max_abs()
            })
            .sum()
    }

    /// `sum_{i,k} max|amp| max(1, exp(Re(Lambda) horizon))`, an upper bound
    /// on `Gamma(t)` for `t` in `[0, horizon]`.
    pub fn gamma_bound(&self, horizon: f64) -> f64 {
        self.terms
            .iter()
            .flat_map(|t| t.components.iter())
            .map(|c| c.amp_max * (c.rate.re * horizon).exp().max(1.0))
            .sum()
    }

    #[inline]
    pub fn energy(&self, z: u64) -> f64 {
        self.d0.eval(z)
    }

    #[inline]
    pub fn flip_delta(&self, i: usize, z: u64) -> f64 {
        self.flips[i].eval(z)
    }

    /// `H(t)` as a dense matrix.
    pub fn to_dense_at(&self, t: f64, limits: &DenseLimits) -> Result<DenseOperator> {
        let mut op = DenseOperator::from_diagonal(&self.d0, limits)?;
        for (i, term) in self.terms.iter().enumerate() {
            for z in 0..op.dim() {
                let row = z ^ term.perm_mask as usize;
                let v = op.get(row, z) + self.coefficient(i, t, row as u64);
                op.set(row, z, v);
            }
        }
        Ok(op)
    }

    /// `exp(-i h D_0)` applied from the left.
    fn diagonal_phase_rows(&self, op: &mut DenseOperator, h: f64) {
        for w in 0..op.dim() {
            let phase = Complex64::new(0.0, -h * self.energy(w as u64)).exp();
            for z in 0..op.dim() {
                let v = op.get(w, z) * phase;
                op.set(w, z, v);
            }
        }
    }
}

/// Floquet TFIM in time-dependent PMR form: `M = N` single-site flips, each
/// with `K = 2` components of rate `(-1)^k i omega` and amplitude `-zeta/2`.
pub fn build_td_form(p: &FloquetTFIMParams) -> Result<TDPMRForm> {
    let model = build_tfim(p)?;
    let n = model.n();
    let static_form = pmr_decompose(n, &model.a_terms)?;
    let half = ComplexDiagonal::constant(n, Complex64::new(-p.zeta / 2.0, 0.0));
    let terms = (0..n)
        .map(|i| TdTerm {
            perm_mask: 1 << i,
            components: (1..=2)
                .map(|k| TdComponent {
                    rate: Complex64::new(0.0, if k % 2 == 0 { p.omega } else { -p.omega }),
                    amp: half.clone(),
                    amp_max: p.zeta.abs() / 2.0,
                })
                .collect(),
        })
        .collect();
    TDPMRForm::new(n, static_form.d0, terms)
}

/// One Dyson path inside a segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TDPathWeight {
    pub q: usize,
    /// `(i_j, k_j)` per leg.
    pub legs: Vec<(usize, usize)>,
    /// Suffix-sum nodes and a final 0, scale `t_b - t_a`.
    pub node_set: NodeSet,
    /// Product of `exp(Lambda t_a) d(z_j)`.
    pub amp: Complex64,
    /// Final state `z_q`.
    pub end: u64,
}

impl TDPathWeight {
    /// `(-i)^q dd(node_set) amp`.
    pub fn term(&self) -> Result<Complex64> {
        let dd = crate::divided_difference::dd_exp_value(&self.node_set)?;
        Ok(Complex64::new(0.0, -1.0).powu(self.q as u32) * dd * self.amp)
    }
}

pub fn td_nodes(form: &TDPMRForm, z: BasisState, legs: &[(usize, usize)], t_a: f64, t_b: f64) -> Result<TDPathWeight> {
    td_nodes_with_sign(form, z, legs, t_a, t_b, INTERACTION_SIGN)
}

/// [`td_nodes`] with an explicit sign convention `sigma`.
pub fn td_nodes_with_sign(
    form: &TDPMRForm,
    z: BasisState,
    legs: &[(usize, usize)],
    t_a: f64,
    t_b: f64,
    sigma: f64,
) -> Result<TDPathWeight> {
    let mut rates = Vec::with_capacity(legs.len());
    let mut amp = Complex64::new(1.0, 0.0);
    let mut state = z.index;
    for &(i, k) in legs {
        let term = form
            .terms
            .get(i)
            .ok_or_else(|| Error::invalid(format!("term index {i} out of range")))?;
        let comp = term
            .components
            .get(k)
            .ok_or_else(|| Error::invalid(format!("component index {k} out of range for term {i}")))?;
        let de = form.flip_delta(i, state);
        state ^= term.perm_mask;
        rates.push(comp.rate + Complex64::new(0.0, -sigma * de));
        amp *= (comp.rate * t_a).exp() * comp.amp.eval(state);
    }
    let nodes = crate::divided_difference::simplex_nodes(&rates);
    Ok(TDPathWeight {
        q: legs.len(),
        legs: legs.to_vec(),
        node_set: NodeSet::new(nodes, Complex64::new(t_b - t_a, 0.0))?,
        amp,
        end: state,
    })
}

struct TdWalk<'a> {
    form: &'a TDPMRForm,
    order: usize,
    h: f64,
    /// `exp(Lambda t_a)` per `(i, k)`.
    offsets: Vec<Vec<Complex64>>,
    acc: DdAccumulator,
    out: Vec<Complex64>,
}

impl TdWalk<'_> {
    fn descend(&mut self, depth: usize, state: u64, y: Complex64, amp: Complex64) -> Result<()> {
        if depth == self.order {
            return Ok(());
        }
        let sign = Complex64::new(0.0, -1.0).powu(depth as u32 + 1);
        for i in 0..self.form.m() {
            let term = &self.form.terms[i];
            let next = state ^ term.perm_mask;
            let de = self.form.flip_delta(i, state);
            for (k, comp) in term.components.iter().enumerate() {
                let a = amp * self.offsets[i][k] * comp.amp.eval(next);
                if a == ZERO {
                    continue;
                }
                let rate = comp.rate + Complex64::new(0.0, -INTERACTION_SIGN * de);
                let y_next = y - rate;
                self.acc.push(y_next)?;
                let shift = (-y_next * self.h).exp();
                self.out[next as usize] += sign * shift * self.acc.value() * a;
                self.descend(depth + 1, next, y_next, a)?;
                self.acc.pop();
            }
        }
        Ok(())
    }
}

/// Interaction-picture segment propagator `U_I` on `[t_a, t_b]`, truncated
/// at `order`. Prefix nodes `y_j = y_{j-1} - lt_j` relate to the suffix
/// form by `dd(suffix) = exp(-h y_q) dd(y_0, ..., y_q)`.
pub fn td_segment(form: &TDPMRForm, t_a: f64, t_b: f64, order: u32, opts: &PropagatorOptions) -> Result<DenseOperator> {
    opts.limits.check(form.n)?;
    let legs_per_step: usize = form.terms.iter().map(|t| t.components.len()).sum();
    let paths = path_count(legs_per_step, order);
    if paths > opts.path_budget {
        return Err(Error::Capacity {
            what: "series paths per column",
            requested: paths,
            limit: opts.path_budget,
        });
    }
    let h = t_b - t_a;
    let dim = 1usize << form.n;
    let max_rate = form
        .terms
        .iter()
        .flat_map(|t| t.components.iter())
        .map(|c| c.rate.norm())
        .fold(0.0, f64::max);
    let spread = 2.0 * form.d0.l1_nonconstant();
    let bound = h * order as f64 * (max_rate + spread);
    let offsets: Vec<Vec<Complex64>> = form
        .terms
        .iter()
        .map(|t| t.components.iter().map(|c| (c.rate * t_a).exp()).collect())
        .collect();

    let build = |z: usize| -> Result<Vec<Complex64>> {
        let mut acc = DdAccumulator::new(Complex64::new(h, 0.0)).with_bound(bound);
        acc.push(ZERO)?;
        let mut walk = TdWalk {
            form,
            order: order as usize,
            h,
            offsets: offsets.clone(),
            acc,
            out: vec![ZERO; dim],
        };
        walk.out[z] = Complex64::new(1.0, 0.0);
        walk.descend(0, z as u64, ZERO, Complex64::new(1.0, 0.0))?;
        Ok(walk.out)
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

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentPolicy {
    Uniform,
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TDSegmentSchedule {
    pub boundaries: Vec<f64>,
    pub policy: SegmentPolicy,
    /// Bound on `Gamma(t)` over the whole interval.
    pub gamma_max: f64,
}

impl TDSegmentSchedule {
    pub fn r(&self) -> usize {
        self.boundaries.len().saturating_sub(1)
    }

    pub fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.boundaries.windows(2).map(|w| w[1] - w[0])
    }
}

/// `r = ceil(T Gamma_max / ln 2)` equal segments.
pub fn uniform_schedule(form: &TDPMRForm, total: f64) -> Result<TDSegmentSchedule> {
    let gamma_max = form.gamma_bound(total);
    let plan = select_r(total, gamma_max)?;
    let boundaries = (0..=plan.r)
        .map(|w| if w == plan.r { total } else { w as f64 * plan.dt })
        .collect();
    Ok(TDSegmentSchedule {
        boundaries,
        policy: SegmentPolicy::Uniform,
        gamma_max,
    })
}

/// Whether the scalar drive of any term changes sign inside `[a, b]`.
fn drive_crosses_zero(form: &TDPMRForm, a: f64, b: f64, scale: f64) -> bool {
    let max_rate = form
        .terms
        .iter()
        .flat_map(|t| t.components.iter())
        .map(|c| c.rate.im.abs())
        .fold(0.0, f64::max);
    let samples = (((b - a) * max_rate / PI * 8.0).ceil() as usize).clamp(64, 1 << 20);
    let floor = 1e-12 * scale;
    for i in 0..form.m() {
        let mut prev: Option<Complex64> = None;
        for s in 0..=samples {
            let t = a + (b - a) * s as f64 / samples as f64;
            let v = form.coefficient(i, t, 0);
            if v.norm() <= floor {
                return true;
            }
            if let Some(p) = prev {
                let flips = |x: f64, y: f64| x * y < 0.0 && x.abs().max(y.abs()) > floor;
                if flips(p.re, v.re) || flips(p.im, v.im) {
                    return true;
                }
            }
            prev = Some(v);
        }
    }
    false
}

/// Left-endpoint segments `dt_w = ln 2 / Gamma(t_w)`. A segment over which
/// a drive changes sign is capped at the uniform width `ln 2 / Gamma_max`.
pub fn adaptive_schedule(form: &TDPMRForm, total: f64) -> Result<TDSegmentSchedule> {
    let gamma_max = form.gamma_bound(total);
    if gamma_max == 0.0 || total == 0.0 {
        return uniform_schedule(form, total);
    }
    let uniform = LN_2 / gamma_max;
    let limit = select_r(total, gamma_max)?.r as usize * 4 + 16;
    let mut boundaries = vec![0.0];
    let mut t = 0.0;
    while total - t > 1e-14 * total.max(1.0) {
        let g = form.gamma_at(t);
        let mut w = if g > 0.0 { LN_2 / g } else { f64::INFINITY };
        w = w.min(total - t);
        if w > uniform && drive_crosses_zero(form, t, t + w, gamma_max) {
            w = uniform.min(total - t);
        }
        t = if total - (t + w) <= 1e-14 * total.max(1.0) { total } else { t + w };
        boundaries.push(t);
        if boundaries.len() > limit {
            return Err(Error::Capacity {
                what: "adaptive segments",
                requested: boundaries.len() as u128,
                limit: limit as u128,
            });
        }
    }
    Ok(TDSegmentSchedule {
        boundaries,
        policy: SegmentPolicy::Adaptive,
        gamma_max,
    })
}

pub fn schedule(form: &TDPMRForm, total: f64, policy: SegmentPolicy) -> Result<TDSegmentSchedule> {
    match policy {
        SegmentPolicy::Uniform => uniform_schedule(form, total),
        SegmentPolicy::Adaptive => adaptive_schedule(form, total),
    }
}

/// Truncation order for one segment of width `w`: tail of `Gamma_max w`
/// at most `eps / (2r)`.
pub fn segment_order(gamma_max: f64, width: f64, r: usize, eps: f64) -> Result<TruncationOrder> {
    let eps_segment = eps / (2.0 * r.max(1) as f64);
    let x = gamma_max * width;
    let q = select_q_for(x, eps_segment)?;
    Ok(TruncationOrder {
        q,
        eps_segment,
        tail: tail_bound(x, q),
    })
}

/// Uniform segment plan and order for `(form, T, eps)`. Depends on the
/// drive only through `Gamma_max`, never on the drive frequency.
pub fn td_truncation_order(form: &TDPMRForm, total: f64, eps: f64) -> Result<(SegmentPlan, TruncationOrder)> {
    let gamma_max = form.gamma_bound(total);
    let plan = select_r(total, gamma_max)?;
    let order = segment_order(gamma_max, plan.dt, plan.r as usize, eps)?;
    Ok((plan, order))
}

#[derive(Debug, Clone)]
pub struct TdEvolution {
    pub operator: DenseOperator,
    pub schedule: TDSegmentSchedule,
    pub orders: Vec<u32>,
}

/// Schrödinger-picture `U(T, 0)`: segment propagators
/// `exp(-i h D_0) U_I` multiplied in time order.
pub fn td_evolve(
    form: &TDPMRForm,
    total: f64,
    eps: f64,
    policy: SegmentPolicy,
    opts: &PropagatorOptions,
) -> Result<TdEvolution> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be > 0, got {eps}")));
    }
    if !(total >= 0.0) || !total.is_finite() {
        return Err(Error::invalid(format!("total time must be finite and >= 0, got {total}")));
    }
    opts.limits.check(form.n)?;
    let sched = schedule(form, total, policy)?;
    let mut operator = DenseOperator::identity(form.n, &opts.limits)?;
    let mut orders = Vec::with_capacity(sched.r());
    if total == 0.0 {
        return Ok(TdEvolution {
            operator,
            schedule: sched,
            orders,
        });
    }
    let r = sched.r();
    for win in sched.boundaries.windows(2) {
        let (a, b) = (win[0], win[1]);
        let q = if sched.gamma_max == 0.0 {
            0
        } else {
            segment_order(sched.gamma_max, b - a, r, eps)?.q
        };
        let mut seg = td_segment(form, a, b, q, opts)?;
        form.diagonal_phase_rows(&mut seg, b - a);
        operator = seg.matmul(&operator)?;
        orders.push(q);
    }
    Ok(TdEvolution {
        operator,
        schedule: sched,
        orders,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(side: usize, j: f64, zeta: f64, omega: f64) -> FloquetTFIMParams {
        FloquetTFIMParams {
            n_per_axis: side,
            dim: 1,
            j,
            zeta,
            omega,
        }
    }

    #[test]
    fn form_shape() {
        let f = build_td_form(&params(3, 1.0, 0.8, 5.0)).unwrap();
        assert_eq!((f.m(), f.k()), (3, 2));
        assert_eq!(f.lambda(), 0.0);
        assert_eq!(f.terms[0].components[0].rate, Complex64::new(0.0, -5.0));
        assert_eq!(f.terms[0].components[1].rate, Complex64::new(0.0, 5.0));
        assert!((f.gamma_bound(1.0) - 2.4).abs() < 1e-15);
    }

    #[test]
    fn drive_reconstruction() {
        let p = params(3, 1.0, 0.8, 5.0);
        let f = build_td_form(&p).unwrap();
        for s in 0..100 {
            let t = 0.037 * s as f64;
            let c = f.coefficient(1, t, 0);
            assert!((c - Complex64::new(p.drive(t), 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn gamma_follows_drive() {
        let f = build_td_form(&params(2, 1.0, 0.5, 3.0)).unwrap();
        let t = 0.4;
        assert!((f.gamma_at(t) - 2.0 * 0.5 * (3.0f64 * t).cos().abs()).abs() < 1e-14);
    }

    #[test]
    fn nodes_without_coupling_are_drive_sums() {
        let f = build_td_form(&params(2, 0.0, 0.8, 5.0)).unwrap();
        let z = BasisState::new(0, 2).unwrap();
        let w = td_nodes(&f, z, &[(0, 0), (1, 1), (0, 1)], 0.0, 0.2).unwrap();
        let r = [-5.0, 5.0, 5.0];
        let expected: Vec<Complex64> = vec![
            Complex64::new(0.0, r[0] + r[1] + r[2]),
            Complex64::new(0.0, r[1] + r[2]),
            Complex64::new(0.0, r[2]),
            ZERO,
        ];
        assert_eq!(w.node_set.nodes, expected);
    }

    #[test]
    fn zeroth_order_is_identity() {
        let f = build_td_form(&params(2, 1.0, 0.8, 5.0)).unwrap();
        let u = td_segment(&f, 0.0, 0.3, 0, &PropagatorOptions::default()).unwrap();
        assert_eq!(u, DenseOperator::identity(2, &DenseLimits::default()).unwrap());
        let w = td_nodes(&f, BasisState::new(1, 2).unwrap(), &[], 0.0, 0.3).unwrap();
        assert_eq!(w.term().unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn no_drive_is_identity_in_frame() {
        let f = build_td_form(&params(3, 1.0, 0.0, 5.0)).unwrap();
        let u = td_segment(&f, 0.1, 0.6, 4, &PropagatorOptions::default()).unwrap();
        assert_eq!(u, DenseOperator::identity(3, &DenseLimits::default()).unwrap());
    }

    #[test]
    fn uniform_segment_count() {
        let f = build_td_form(&params(3, 1.0, 0.8, 5.0)).unwrap();
        let s = uniform_schedule(&f, 0.5).unwrap();
        assert_eq!(s.r(), 2);
        assert_eq!(*s.boundaries.last().unwrap(), 0.5);
    }

    #[test]
    fn adaptive_never_narrower_than_uniform() {
        let f = build_td_form(&params(3, 1.0, 0.8, 5.0)).unwrap();
        let u = uniform_schedule(&f, 3.0).unwrap();
        let a = adaptive_schedule(&f, 3.0).unwrap();
        let uw = LN_2 / u.gamma_max;
        for (k, w) in a.widths().enumerate() {
            let last = k + 1 == a.r();
            assert!(last || w >= uw * (1.0 - 1e-12));
        }
        assert!(a.r() <= u.r());
        assert_eq!(*a.boundaries.last().unwrap(), 3.0);
    }
}
