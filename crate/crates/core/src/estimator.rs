//! Leading-order gate and qubit costs with every hidden constant set to 1.
//!
//! Logarithms of term or site counts use `ceil(log2(.))`; the remaining
//! logarithms are natural and floored at 1 (`ln(max(x, e))`) so that small
//! arguments never produce negative costs.

use std::f64::consts::{E, LN_2};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{build_rydberg_terms, build_tfim, rydberg_alpha, FloquetTFIMParams, RydbergParams};
use crate::propagator_td::segment_order;
use crate::propagator_ti::{select_q, select_r};
use crate::spin::{DenseLimits, DenseOperator};
use crate::truncation::{cutoff_d0, cutoff_delta_d0};

pub const DISCLAIMER: &str = "leading-order with unit constants";

pub const CSV_HEADER: [&str; 15] = [
    "algorithm",
    "N",
    "d",
    "t",
    "eps",
    "omega",
    "delta",
    "c6p",
    "J",
    "zeta",
    "w",
    "gate_cost",
    "qubit_cost",
    "branch",
    "notes",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Qubitization,
    PmrTi,
    PmrTiApprox,
    Qhop,
    PmrTd,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Qubitization,
        Algorithm::PmrTi,
        Algorithm::PmrTiApprox,
        Algorithm::Qhop,
        Algorithm::PmrTd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Qubitization => "qubitization",
            Algorithm::PmrTi => "pmr_ti",
            Algorithm::PmrTiApprox => "pmr_ti_approx",
            Algorithm::Qhop => "qhop",
            Algorithm::PmrTd => "pmr_td",
        }
    }

    /// Whether the algorithm applies to the time-independent Rydberg model.
    pub fn is_time_independent(self) -> bool {
        matches!(self, Algorithm::Qubitization | Algorithm::PmrTi | Algorithm::PmrTiApprox)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::validation(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostOptions {
    /// Keep the truncation order `Q` in the PMR formulas; `false` sets
    /// `Q = 1`, the simplified rows that drop the sub-polynomial factor.
    pub include_q_factor: bool,
}

impl Default for CostOptions {
    fn default() -> Self {
        Self { include_q_factor: true }
    }
}

/// `gate_cost = multiplier * sum(summands) + sum(additive)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub multiplier: (String, f64),
    pub summands: Vec<(String, f64)>,
    pub additive: Vec<(String, f64)>,
}

impl Breakdown {
    pub fn total(&self) -> f64 {
        let inner: f64 = self.summands.iter().map(|s| s.1).sum();
        self.multiplier.1 * inner + self.additive.iter().map(|s| s.1).sum::<f64>()
    }
}

fn named(name: &str, v: f64) -> (String, f64) {
    (name.to_string(), v)
}

/// Parameter record of one evaluated point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostInputs {
    pub n: usize,
    pub d: Option<usize>,
    pub t: f64,
    pub eps: f64,
    /// Mean Rabi frequency.
    pub omega: Option<f64>,
    pub delta: Option<f64>,
    pub c6p: Option<f64>,
    pub j: Option<f64>,
    pub zeta: Option<f64>,
    /// Drive frequency.
    pub w: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub algorithm: Algorithm,
    pub gate_cost: f64,
    pub qubit_cost: f64,
    pub inputs: CostInputs,
    pub breakdown: Breakdown,
    /// Derived quantities (`r`, `Q`, `alpha`, ...).
    pub details: Vec<(String, f64)>,
    /// Selected branch of a `min`, numbered in printed order.
    pub branch: Option<u8>,
    pub notes: String,
}

impl CostReport {
    fn new(algorithm: Algorithm, inputs: CostInputs, breakdown: Breakdown, qubit_cost: f64) -> Self {
        Self {
            algorithm,
            gate_cost: breakdown.total(),
            qubit_cost,
            inputs,
            breakdown,
            details: Vec::new(),
            branch: None,
            notes: String::new(),
        }
    }

    /// Re-evaluates the gate cost from the breakdown.
    pub fn recompose(&self) -> f64 {
        self.breakdown.total()
    }

    pub fn detail(&self, name: &str) -> Option<f64> {
        self.details.iter().find(|d| d.0 == name).map(|d| d.1)
    }
}

/// `ceil(log2(x))` for a count, 0 for `x <= 1`.
pub fn log2_ceil(x: usize) -> u32 {
    if x <= 1 {
        0
    } else {
        usize::BITS - (x - 1).leading_zeros()
    }
}

/// `ln(max(x, e))`.
pub fn ln_floor(x: f64) -> f64 {
    x.max(E).ln()
}

fn check_time_eps(t: f64, eps: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::validation(format!("time must be finite and >= 0, got {t}")));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::validation(format!("eps must be finite and > 0, got {eps}")));
    }
    Ok(())
}

fn rydberg_inputs(p: &RydbergParams, t: f64, eps: f64) -> CostInputs {
    CostInputs {
        n: p.n(),
        t,
        eps,
        omega: Some(p.mean_omega()),
        delta: Some(p.delta),
        c6p: Some(p.c6_prime()),
        ..CostInputs::default()
    }
}

fn tfim_inputs(p: &FloquetTFIMParams, t: f64, eps: f64) -> CostInputs {
    CostInputs {
        n: p.sites(),
        d: Some(p.dim),
        t,
        eps,
        j: Some(p.j),
        zeta: Some(p.zeta),
        w: Some(p.omega),
        ..CostInputs::default()
    }
}

/// `(alpha t + ln(1/eps)) * M (N + ceil(log2 M))`, qubits `ceil(log2 M) + 2`.
pub fn qubitization_cost(p: &RydbergParams, t: f64, eps: f64) -> Result<CostReport> {
    check_time_eps(t, eps)?;
    let dec = build_rydberg_terms(p)?;
    let alpha = rydberg_alpha(p)?;
    let n = p.n() as f64;
    let m = dec.m();
    let log_m = log2_ceil(m) as f64;
    let breakdown = Breakdown {
        multiplier: named("alpha*t+ln(1/eps)", alpha * t + (1.0 / eps).ln()),
        summands: vec![named("M*(N+log2M)", m as f64 * (n + log_m))],
        additive: vec![],
    };
    let mut rep = CostReport::new(Algorithm::Qubitization, rydberg_inputs(p, t, eps), breakdown, log_m + 2.0);
    rep.details = vec![named("alpha", alpha), named("M", m as f64)];
    Ok(rep)
}

fn pmr_ti_like(
    algorithm: Algorithm,
    p: &RydbergParams,
    t: f64,
    eps: f64,
    opts: &CostOptions,
) -> Result<CostReport> {
    check_time_eps(t, eps)?;
    p.validate()?;
    let n_sites = p.n();
    let n = n_sites as f64;
    let gamma = n * p.mean_omega() / 2.0;
    let plan = select_r(t, gamma)?;
    let q_tail = if gamma == 0.0 || t == 0.0 {
        0
    } else {
        select_q(&plan, gamma, eps)?.q
    };
    let q = if opts.include_q_factor { q_tail as f64 } else { 1.0 };
    let m = n;
    let log_m = log2_ceil(n_sites) as f64;
    let k_od = 1.0;
    let mut details = vec![
        named("Gamma", gamma),
        named("r", plan.r as f64),
        named("Q", q),
        named("Q_tail", q_tail as f64),
    ];
    let mut notes = format!("asymptotic qubits ceil(log2 N)={}", log_m);
    let (c_d0, c_dd0) = if algorithm == Algorithm::PmrTiApprox {
        let c6p = p.c6_prime();
        let (n_c, n_d) = if c6p > 0.0 {
            (
                cutoff_d0(t.max(f64::MIN_POSITIVE), c6p, eps)?.n,
                cutoff_delta_d0(q_tail.max(1), t.max(f64::MIN_POSITIVE), c6p, eps)?.n,
            )
        } else {
            notes.push_str("; no interaction, cutoffs set to 1");
            (1, 1)
        };
        details.push(named("n_C", n_c as f64));
        details.push(named("n_D", n_d as f64));
        (n * n_c as f64, n_d as f64)
    } else {
        (n * n, n)
    };
    details.push(named("C_D0", c_d0));
    details.push(named("C_dD0", c_dd0));
    let breakdown = Breakdown {
        multiplier: named("r", plan.r as f64),
        summands: vec![
            named("C_D0", c_d0),
            named("Q^2", q * q),
            named("Q*M*(C_dD0+k_od+log2M)", q * m * (c_dd0 + k_od + log_m)),
        ],
        additive: vec![],
    };
    let qubits = if n_sites > 1 { (q * m.log2()).ceil() } else { 0.0 };
    let mut rep = CostReport::new(algorithm, rydberg_inputs(p, t, eps), breakdown, qubits);
    rep.details = details;
    rep.notes = notes;
    Ok(rep)
}

/// `r (C_D0 + Q^2 + Q M (C_dD0 + k_od + ceil(log2 M)))` with `C_D0 = N^2`,
/// `C_dD0 = N`, `M = N`, `k_od = 1`, `Gamma = N mean(Omega) / 2`.
pub fn pmr_ti_cost(p: &RydbergParams, t: f64, eps: f64, opts: &CostOptions) -> Result<CostReport> {
    pmr_ti_like(Algorithm::PmrTi, p, t, eps, opts)
}

/// As [`pmr_ti_cost`] with `C_D0 = N n_C` and `C_dD0 = n_D` from the
/// interaction cutoffs.
pub fn pmr_ti_approx_cost(p: &RydbergParams, t: f64, eps: f64, opts: &CostOptions) -> Result<CostReport> {
    pmr_ti_like(Algorithm::PmrTiApprox, p, t, eps, opts)
}

/// Norm constants of the Floquet model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormConstants {
    pub alpha_b: f64,
    pub beta_b: f64,
    pub alpha_ab: f64,
}

pub fn norm_constants(p: &FloquetTFIMParams) -> NormConstants {
    let n = p.sites() as f64;
    let nz = n * p.zeta.abs();
    NormConstants {
        alpha_b: nz,
        beta_b: nz * p.omega.abs(),
        alpha_ab: 4.0 * p.j.abs() * nz * p.dim as f64,
    }
}

/// Oracle count `min(b1, b2) * ln((alpha_AB + beta_B) T / eps)` times the
/// oracle cost `N (d + N)`, with
/// `b1 = alpha_B^2 T^2 / eps * ln(alpha_B T / eps)` and
/// `b2 = alpha_B T + sqrt(alpha_B (alpha_AB + beta_B)) T^{3/2} / sqrt(eps) * ln(alpha_B (alpha_AB + beta_B) T / eps)`.
pub fn qhop_cost(p: &FloquetTFIMParams, total: f64, eps: f64) -> Result<CostReport> {
    check_time_eps(total, eps)?;
    p.validate()?;
    let NormConstants {
        alpha_b,
        beta_b,
        alpha_ab,
    } = norm_constants(p);
    let n_sites = p.sites();
    let n = n_sites as f64;
    let d = p.dim as f64;
    let s = alpha_ab + beta_b;
    let b1 = alpha_b * alpha_b * total * total / eps * ln_floor(alpha_b * total / eps);
    let b2 = alpha_b * total + (alpha_b * s).sqrt() * total.powf(1.5) / eps.sqrt() * ln_floor(alpha_b * s * total / eps);
    let (branch, selected) = if b1 <= b2 { (1u8, b1) } else { (2u8, b2) };
    let log_factor = ln_floor(s * total / eps);
    let oracle = n * (d + n);
    let m1 = if alpha_b > 0.0 { (s / (alpha_b * alpha_b)).max(1.0) } else { 1.0 };
    let m2 = (2.0 * s * total / eps).sqrt().max(1.0);
    let qubits = |m: f64| log2_ceil(n_sites) as f64 + log2_ceil(m.ceil() as usize) as f64;
    let (q1, q2) = (qubits(m1), qubits(m2));
    let breakdown = Breakdown {
        multiplier: named("ln((aAB+bB)T/eps)*N(d+N)", log_factor * oracle),
        summands: vec![named(if branch == 1 { "branch1" } else { "branch2" }, selected)],
        additive: vec![],
    };
    let mut rep = CostReport::new(
        Algorithm::Qhop,
        tfim_inputs(p, total, eps),
        breakdown,
        if branch == 1 { q1 } else { q2 },
    );
    rep.branch = Some(branch);
    rep.details = vec![
        named("alpha_B", alpha_b),
        named("beta_B", beta_b),
        named("alpha_AB", alpha_ab),
        named("branch1", b1),
        named("branch2", b2),
        named("M1", m1),
        named("M2", m2),
        named("qubits1", q1),
        named("qubits2", q2),
    ];
    rep.notes = format!("qubits variants {q1}/{q2}");
    Ok(rep)
}

/// `r (Q^2 + Q N (ceil(log2 N) + k_od) + Q N K (C_D + C_dH0 + C_Lambda)) + L d~`
/// with `r = ceil(T N zeta / ln 2)`, `K = 2`, `C_D = C_Lambda = 1`,
/// `C_dH0 = 2d`, `k_od = 1`, `L = dN`, `d~ = 2`.
pub fn pmr_td_cost(p: &FloquetTFIMParams, total: f64, eps: f64, opts: &CostOptions) -> Result<CostReport> {
    check_time_eps(total, eps)?;
    p.validate()?;
    let n_sites = p.sites();
    let n = n_sites as f64;
    let d = p.dim as f64;
    let gamma = n * p.zeta.abs();
    let plan = select_r(total, gamma)?;
    let q_tail = if gamma == 0.0 || total == 0.0 {
        0
    } else {
        segment_order(gamma, plan.dt, plan.r as usize, eps)?.q
    };
    let q = if opts.include_q_factor { q_tail as f64 } else { 1.0 };
    let k = 2.0;
    let (c_d, c_dh0, c_lambda, k_od) = (1.0, 2.0 * d, 1.0, 1.0);
    let log_n = log2_ceil(n_sites) as f64;
    let breakdown = Breakdown {
        multiplier: named("r", plan.r as f64),
        summands: vec![
            named("Q^2", q * q),
            named("Q*N*(log2N+k_od)", q * n * (log_n + k_od)),
            named("Q*N*K*(C_D+C_dH0+C_Lambda)", q * n * k * (c_d + c_dh0 + c_lambda)),
        ],
        additive: vec![named("L*d~", d * n * 2.0)],
    };
    let qubits = log2_ceil(n_sites * 2) as f64;
    let mut rep = CostReport::new(Algorithm::PmrTd, tfim_inputs(p, total, eps), breakdown, qubits);
    rep.details = vec![
        named("Gamma_max", gamma),
        named("r", plan.r as f64),
        named("Q", q),
        named("Q_tail", q_tail as f64),
    ];
    rep.notes = format!("asymptotic qubits ceil(log2 N)={log_n}");
    Ok(rep)
}

/// Exact norms at one sample time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSample {
    pub t: f64,
    pub b: f64,
    pub b_prime: f64,
    pub commutator: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormBounds {
    pub alpha_b: f64,
    pub beta_b: f64,
    pub alpha_ab_bound: f64,
    /// Exact `||sum_i X_i||`.
    pub sum_x_norm: f64,
    pub samples: Vec<NormSample>,
}

impl NormBounds {
    /// Violated bounds, with relative slack `1e-10`.
    pub fn violations(&self) -> Vec<String> {
        let slack = |bound: f64| bound * (1.0 + 1e-10) + 1e-12;
        let mut out = Vec::new();
        for s in &self.samples {
            if s.b > slack(self.alpha_b) {
                out.push(format!("||B({})|| = {} > {}", s.t, s.b, self.alpha_b));
            }
            if s.b_prime > slack(self.beta_b) {
                out.push(format!("||B'({})|| = {} > {}", s.t, s.b_prime, self.beta_b));
            }
            if s.commutator > slack(self.alpha_ab_bound) {
                out.push(format!("||[A,B({})]|| = {} > {}", s.t, s.commutator, self.alpha_ab_bound));
            }
        }
        out
    }
}

/// Exact spectral norms of `B(t)`, `B'(t)` and `[A, B(t)]` at `times`, by
/// dense Hermitian eigensolves (`i[A, B]` for the commutator). All three
/// are scalar multiples of `sum_i X_i` or `i[A, sum_i X_i]`, so those two
/// norms are computed once and scaled. Fails with a validation error if
/// any bound is violated.
pub fn verify_norm_bounds(p: &FloquetTFIMParams, times: &[f64], limits: &DenseLimits) -> Result<NormBounds> {
    let model = build_tfim(p)?;
    let n = model.n();
    let a = DenseOperator::from_terms(n, &model.a_terms, limits)?;
    let x = DenseOperator::from_terms(n, &model.drive_terms(), limits)?;
    let comm_x = a
        .matmul(&x)?
        .sub(&x.matmul(&a)?)?
        .scaled(num_complex::Complex64::new(0.0, 1.0));
    let sum_x_norm = pmrsim_oracles::hermitian_norm(x.matrix())?;
    let comm_norm = pmrsim_oracles::hermitian_norm(comm_x.matrix())?;
    let samples = times
        .iter()
        .map(|&t| NormSample {
            t,
            b: p.drive(t).abs() * sum_x_norm,
            b_prime: p.drive_derivative(t).abs() * sum_x_norm,
            commutator: p.drive(t).abs() * comm_norm,
        })
        .collect();
    let k = norm_constants(p);
    let report = NormBounds {
        alpha_b: k.alpha_b,
        beta_b: k.beta_b,
        alpha_ab_bound: k.alpha_ab,
        sum_x_norm,
        samples,
    };
    if (report.sum_x_norm - n as f64).abs() > 1e-10 * n as f64 {
        return Err(Error::validation(format!("||sum X_i|| = {} differs from N = {n}", report.sum_x_norm)));
    }
    let v = report.violations();
    if !v.is_empty() {
        return Err(Error::validation(v.join("; ")));
    }
    Ok(report)
}

/// Cartesian grid over Rydberg parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RydbergGrid {
    pub n: Vec<usize>,
    pub omega: Vec<f64>,
    pub delta: Vec<f64>,
    pub c6p: Vec<f64>,
    pub t: Vec<f64>,
    pub eps: Vec<f64>,
}

/// Cartesian grid over Floquet TFIM parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TfimGrid {
    pub n_per_axis: Vec<usize>,
    pub dim: Vec<usize>,
    pub j: Vec<f64>,
    pub zeta: Vec<f64>,
    pub omega: Vec<f64>,
    pub t: Vec<f64>,
    pub eps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub rydberg: Option<RydbergGrid>,
    #[serde(default)]
    pub tfim: Option<TfimGrid>,
    #[serde(default = "default_true")]
    pub include_q_factor: bool,
}

fn default_true() -> bool {
    true
}

enum Point {
    Rydberg(RydbergParams, f64, f64),
    Tfim(FloquetTFIMParams, f64, f64),
}

fn nonempty<T>(name: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::validation(format!("grid axis `{name}` is empty")));
    }
    Ok(())
}

/// Evaluates every algorithm at every grid point. Rows follow the grid
/// order: Rydberg points (last axis fastest) then TFIM points, algorithms
/// in the listed order within each point. No algorithms gives no rows.
pub fn sweep(grid: &SweepGrid) -> Result<Vec<CostReport>> {
    let ti: Vec<Algorithm> = grid.algorithms.iter().copied().filter(|a| a.is_time_independent()).collect();
    let td: Vec<Algorithm> = grid.algorithms.iter().copied().filter(|a| !a.is_time_independent()).collect();
    let mut points = Vec::new();
    if !ti.is_empty() {
        let g = grid
            .rydberg
            .as_ref()
            .ok_or_else(|| Error::validation("time-independent algorithms need an [estimate.rydberg] grid"))?;
        for (name, len) in [
            ("n", g.n.len()),
            ("omega", g.omega.len()),
            ("delta", g.delta.len()),
            ("c6p", g.c6p.len()),
            ("t", g.t.len()),
            ("eps", g.eps.len()),
        ] {
            nonempty(name, &vec![(); len])?;
        }
        for &n in &g.n {
            for &omega in &g.omega {
                for &delta in &g.delta {
                    for &c6p in &g.c6p {
                        for &t in &g.t {
                            for &eps in &g.eps {
                                let p = RydbergParams::uniform(n, omega, delta, c6p);
                                p.validate()?;
                                points.push(Point::Rydberg(p, t, eps));
                            }
                        }
                    }
                }
            }
        }
    }
    if !td.is_empty() {
        let g = grid
            .tfim
            .as_ref()
            .ok_or_else(|| Error::validation("time-dependent algorithms need an [estimate.tfim] grid"))?;
        for (name, len) in [
            ("n_per_axis", g.n_per_axis.len()),
            ("dim", g.dim.len()),
            ("j", g.j.len()),
            ("zeta", g.zeta.len()),
            ("omega", g.omega.len()),
            ("t", g.t.len()),
            ("eps", g.eps.len()),
        ] {
            nonempty(name, &vec![(); len])?;
        }
        for &n_per_axis in &g.n_per_axis {
            for &dim in &g.dim {
                for &j in &g.j {
                    for &zeta in &g.zeta {
                        for &omega in &g.omega {
                            for &t in &g.t {
                                for &eps in &g.eps {
                                    let p = FloquetTFIMParams {
                                        n_per_axis,
                                        dim,
                                        j,
                                        zeta,
                                        omega,
                                    };
                                    p.validate()?;
                                    points.push(Point::Tfim(p, t, eps));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let opts = CostOptions {
        include_q_factor: grid.include_q_factor,
    };
    let rows: Vec<Vec<CostReport>> = points
        .par_iter()
        .map(|pt| -> Result<Vec<CostReport>> {
            match pt {
                Point::Rydberg(p, t, eps) => ti
                    .iter()
                    .map(|a| match a {
                        Algorithm::Qubitization => qubitization_cost(p, *t, *eps),
                        Algorithm::PmrTi => pmr_ti_cost(p, *t, *eps, &opts),
                        _ => pmr_ti_approx_cost(p, *t, *eps, &opts),
                    })
                    .collect(),
                Point::Tfim(p, t, eps) => td
                    .iter()
                    .map(|a| match a {
                        Algorithm::Qhop => qhop_cost(p, *t, *eps),
                        _ => pmr_td_cost(p, *t, *eps, &opts),
                    })
                    .collect(),
            }
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV fields of one report, in [`CSV_HEADER`] order.
pub fn csv_record(r: &CostReport) -> [String; 15] {
    let i = &r.inputs;
    [
        r.algorithm.name().to_string(),
        i.n.to_string(),
        opt(i.d),
        i.t.to_string(),
        i.eps.to_string(),
        opt(i.omega),
        opt(i.delta),
        opt(i.c6p),
        opt(i.j),
        opt(i.zeta),
        opt(i.w),
        r.gate_cost.to_string(),
        r.qubit_cost.to_string(),
        opt(r.branch),
        r.notes.clone(),
    ]
}

pub fn write_csv<W: Write>(reports: &[CostReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::invalid(format!("CSV output failed: {e}"));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in reports {
        w.write_record(csv_record(r)).map_err(io)?;
    }
    w.flush().map_err(|e| Error::invalid(format!("CSV output failed: {e}")))?;
    Ok(())
}

#[derive(Serialize)]
struct JsonReport<'a> {
    disclaimer: &'static str,
    rows: &'a [CostReport],
}

pub fn write_json<W: Write>(reports: &[CostReport], out: W) -> Result<()> {
    serde_json::to_writer_pretty(
        out,
        &JsonReport {
            disclaimer: DISCLAIMER,
            rows: reports,
        },
    )
    .map_err(|e| Error::invalid(format!("JSON output failed: {e}")))
}

/// `ceil(T N zeta / ln 2)`, the uniform segment count of the time-dependent series.
pub fn td_segment_bound(p: &FloquetTFIMParams, total: f64) -> f64 {
    (total * p.sites() as f64 * p.zeta.abs() / LN_2).ceil()
}
