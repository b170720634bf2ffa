//! Divided differences of the exponential.
//!
//! `dd[x_0, ..., x_q]` of `x -> exp(s x)` equals `s^q` times entry `(0, q)`
//! of `exp(A)`, where `A` is upper bidiagonal with `s x_j` on the diagonal
//! and ones above it. The exponential is evaluated by scaling and squaring
//! with a truncated Taylor series, one column at a time, so a new node costs
//! only a new column. [`DdAccumulator`] exposes that incremental form for
//! depth-first path enumeration.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bound on `|s x_j|`. `exp(700)` is close to the largest finite `f64`.
pub const DEFAULT_MAX_EXPONENT: f64 = 700.0;

/// Taylor terms kept beyond the nilpotent degree of a column.
const TAYLOR_EXTRA: usize = 18;

/// Scaled diagonal entries must satisfy `|y| / 2^k <= SCALED_DIAGONAL`.
const SCALED_DIAGONAL: f64 = 0.5;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Nodes of a divided difference of `x -> exp(scale * x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSet {
    pub nodes: Vec<Complex64>,
    pub scale: Complex64,
}

impl NodeSet {
    pub fn new(nodes: Vec<Complex64>, scale: Complex64) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::invalid("a divided difference needs at least one node"));
        }
        if !scale.is_finite() || nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite node or scale"));
        }
        Ok(Self { nodes, scale })
    }

    pub fn real(nodes: &[f64], scale: Complex64) -> Result<Self> {
        Self::new(nodes.iter().map(|&x| Complex64::new(x, 0.0)).collect(), scale)
    }

    /// Order `q` (node count minus one).
    pub fn order(&self) -> usize {
        self.nodes.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DDResult {
    pub value: Complex64,
    /// `|s|^q dd[|s x_0|, ..., |s x_q|] / |value|`: the value the same
    /// recurrence would produce with every term made nonnegative, relative
    /// to the actual value. Large numbers flag cancellation.
    pub condition_estimate: f64,
}

#[inline]
fn packed(j: usize) -> usize {
    j * (j + 1) / 2
}

/// Incremental divided-difference evaluator.
///
/// Holds the upper-triangular `exp(B)`, `exp(B)^2`, ..., `exp(B)^{2^k}` for
/// `B = A / 2^k`, each stored column-packed. Pushing a node appends one
/// column per level; popping truncates. If a pushed node needs a larger
/// `k`, every column is rebuilt with the new `k`.
#[derive(Debug, Clone)]
pub struct DdAccumulator {
    scale: Complex64,
    max_exponent: f64,
    k: u32,
    xs: Vec<Complex64>,
    ys: Vec<Complex64>,
    /// `levels[l]` holds `exp(B)^{2^l}`, column `j` at offset `j(j+1)/2`.
    levels: Vec<Vec<Complex64>>,
    surrogate: Option<Box<DdAccumulator>>,
}

impl DdAccumulator {
    pub fn new(scale: Complex64) -> Self {
        Self {
            scale,
            max_exponent: DEFAULT_MAX_EXPONENT,
            k: 0,
            xs: Vec::new(),
            ys: Vec::new(),
            levels: vec![Vec::new()],
            surrogate: None,
        }
    }

    /// Presets the squaring count for nodes with `|scale * x| <= bound`, so
    /// pushes within that bound never trigger a rebuild.
    pub fn with_bound(mut self, bound: f64) -> Self {
        self.k = squarings_for(bound);
        self.levels = vec![Vec::new(); self.k as usize + 1];
        self.rebuild();
        self
    }

    pub fn with_max_exponent(mut self, max_exponent: f64) -> Self {
        self.max_exponent = max_exponent;
        if let Some(s) = self.surrogate.as_mut() {
            s.max_exponent = max_exponent;
        }
        self
    }

    /// Also tracks the nonnegative surrogate needed for
    /// [`DDResult::condition_estimate`]. Doubles the work per push.
    pub fn tracking_condition(mut self) -> Self {
        let mut s = DdAccumulator::new(Complex64::new(self.scale.norm(), 0.0)).with_max_exponent(self.max_exponent);
        for x in &self.xs {
            s.push(Complex64::new(x.norm(), 0.0))
                .expect("surrogate of an accepted node is in range");
        }
        self.surrogate = Some(Box::new(s));
        self
    }

    pub fn scale(&self) -> Complex64 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    /// Number of squarings currently in use.
    pub fn squarings(&self) -> u32 {
        self.k
    }

    pub fn clear(&mut self) {
        self.truncate(0);
    }

    /// Appends node `x`.
    pub fn push(&mut self, x: Complex64) -> Result<()> {
        let y = self.scale * x;
        if !y.is_finite() {
            return Err(Error::Range(format!("non-finite exponent scale*x = {y}")));
        }
        if y.norm() > self.max_exponent {
            return Err(Error::Range(format!(
                "|scale * x| = {:.6e} exceeds the bound {:.6e}",
                y.norm(),
                self.max_exponent
            )));
        }
        if let Some(s) = self.surrogate.as_mut() {
            s.push(Complex64::new(x.norm(), 0.0))?;
        }
        self.xs.push(x);
        self.ys.push(y);
        let needed = squarings_for(y.norm());
        if needed > self.k {
            self.k = needed;
            self.levels = vec![Vec::new(); self.k as usize + 1];
            self.rebuild();
        } else {
            self.append_column(self.ys.len() - 1);
        }
        Ok(())
    }

    /// Removes the last node.
    pub fn pop(&mut self) {
        if !self.ys.is_empty() {
            self.truncate(self.ys.len() - 1);
        }
    }

    /// Keeps the first `len` nodes.
    pub fn truncate(&mut self, len: usize) {
        if len >= self.ys.len() {
            return;
        }
        self.xs.truncate(len);
        self.ys.truncate(len);
        for level in &mut self.levels {
            level.truncate(packed(len));
        }
        if let Some(s) = self.surrogate.as_mut() {
            s.truncate(len);
        }
    }

    /// Divided difference over the current nodes.
    ///
    /// # Panics
    /// If no node has been pushed.
    pub fn value(&self) -> Complex64 {
        let q = self.ys.len().checked_sub(1).expect("divided difference of zero nodes");
        let top = &self.levels[self.k as usize];
        top[packed(q)] * self.scale.powu(q as u32)
    }

    pub fn result(&self) -> DDResult {
        let value = self.value();
        let condition_estimate = match &self.surrogate {
            Some(s) => {
                let bound = s.value().norm();
                if value.norm() > 0.0 {
                    bound / value.norm()
                } else {
                    f64::INFINITY
                }
            }
            None => f64::NAN,
        };
        DDResult {
            value,
            condition_estimate,
        }
    }

    fn rebuild(&mut self) {
        for level in &mut self.levels {
            level.clear();
        }
        for j in 0..self.ys.len() {
            self.append_column(j);
        }
    }

    /// Computes column `j` on every level; columns `< j` must be present.
    fn append_column(&mut self, j: usize) {
        let h = (-(self.k as i32) as f64).exp2();
        let mut term: Vec<Complex64> = vec![ZERO; j + 1];
        term[j] = ONE;
        let mut col = term.clone();
        let mut next = vec![ZERO; j + 1];
        for m in 1..=j + TAYLOR_EXTRA {
            let inv = 1.0 / m as f64;
            for i in 0..=j {
                let above = if i < j { term[i + 1] } else { ZERO };
                next[i] = (self.ys[i] * h * term[i] + above * h) * inv;
            }
            std::mem::swap(&mut term, &mut next);
            for i in 0..=j {
                col[i] += term[i];
            }
        }
        self.levels[0].extend_from_slice(&col);

        for l in 0..self.k as usize {
            let (lower, upper) = self.levels.split_at_mut(l + 1);
            let src = &lower[l];
            let cj = &src[packed(j)..packed(j) + j + 1];
            let dst = &mut upper[0];
            for i in 0..=j {
                let mut acc = ZERO;
                for p in i..=j {
                    acc += src[packed(p) + i] * cj[p];
                }
                dst.push(acc);
            }
        }
    }
}

/// Smallest `k` with `bound / 2^k <= 0.5`.
fn squarings_for(bound: f64) -> u32 {
    let mut k = 0u32;
    let mut b = bound;
    while b > SCALED_DIAGONAL {
        b *= 0.5;
        k += 1;
    }
    k
}

/// Divided difference of `x -> exp(ns.scale * x)` over `ns.nodes`.
pub fn dd_exp(ns: &NodeSet) -> Result<DDResult> {
    let mut acc = DdAccumulator::new(ns.scale).tracking_condition();
    for &x in &ns.nodes {
        acc.push(x)?;
    }
    Ok(acc.result())
}

/// Value only, skipping the condition estimate.
pub fn dd_exp_value(ns: &NodeSet) -> Result<Complex64> {
    let mut acc = DdAccumulator::new(ns.scale);
    for &x in &ns.nodes {
        acc.push(x)?;
    }
    Ok(acc.value())
}

/// Pushes `x` into `acc` and returns the extended divided difference.
pub fn dd_exp_append(acc: &mut DdAccumulator, x: Complex64) -> Result<DDResult> {
    acc.push(x)?;
    Ok(acc.result())
}

/// Monte Carlo estimate of the ordered-simplex integral
/// `int_{0 <= s_1 <= ... <= s_q <= 1} exp(sum_l rates_l s_l) ds`.
///
/// Draws `samples` sorted uniform vectors and scales the sample mean by the
/// simplex volume `1/q!`. Returns `(estimate, standard error)`.
pub fn simplex_integral_mc<R: Rng + ?Sized>(
    rates: &[Complex64],
    samples: usize,
    rng: &mut R,
) -> Result<(Complex64, f64)> {
    if samples == 0 {
        return Err(Error::invalid("simplex_integral_mc needs at least one sample"));
    }
    if rates.is_empty() {
        return Err(Error::invalid("simplex_integral_mc needs q >= 1 rates"));
    }
    let q = rates.len();
    let volume = 1.0 / (1..=q).map(|k| k as f64).product::<f64>();
    let mut s = vec![0.0f64; q];
    let (mut sum, mut sq_re, mut sq_im) = (ZERO, 0.0, 0.0);
    for _ in 0..samples {
        for v in s.iter_mut() {
            *v = rng.random::<f64>();
        }
        s.sort_by(f64::total_cmp);
        let exponent: Complex64 = rates.iter().zip(&s).map(|(l, &t)| l * t).sum();
        let f = exponent.exp();
        sum += f;
        sq_re += f.re * f.re;
        sq_im += f.im * f.im;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = if samples > 1 {
        ((sq_re - n * mean.re * mean.re) + (sq_im - n * mean.im * mean.im)).max(0.0) / (n - 1.0)
    } else {
        0.0
    };
    Ok((mean * volume, (var / n).sqrt() * volume))
}

/// Nodes `x_j = sum_{l >= j} rates_l` (`j = 1..q`) followed by the terminal
/// node 0, whose divided difference of `exp` equals the simplex integral.
pub fn simplex_nodes(rates: &[Complex64]) -> Vec<Complex64> {
    let mut nodes = vec![ZERO; rates.len() + 1];
    let mut acc = ZERO;
    for (j, l) in rates.iter().enumerate().rev() {
        acc += l;
        nodes[j] = acc;
    }
    nodes
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub eps: f64,
    /// Largest `|dd(perturbed) - dd(original)|` over the sampled directions.
    pub max_deviation: f64,
    /// `|s|^{q+1} eps / q!`.
    pub first_order_bound: f64,
    pub directions: usize,
}

impl PerturbationReport {
    /// `max_deviation - first_order_bound`; positive values are the
    /// second-order excess.
    pub fn excess(&self) -> f64 {
        self.max_deviation - self.first_order_bound
    }
}

/// Perturbs every node by at most `eps` along `directions` sampled
/// directions and compares the change in the divided difference with the
/// first-order bound `|s|^{q+1} eps / q!`.
///
/// For real nodes the perturbations are real with random signs (the two
/// aligned sign patterns are always included); for complex nodes each node
/// moves by `eps` in a random complex direction. The bound is meaningful
/// for real nodes and a purely imaginary scale.
pub fn dd_perturbation_check<R: Rng + ?Sized>(
    ns: &NodeSet,
    eps: f64,
    directions: usize,
    rng: &mut R,
) -> Result<PerturbationReport> {
    if !(eps >= 0.0) {
        return Err(Error::invalid("perturbation size must be >= 0"));
    }
    let q = ns.order();
    let base = dd_exp_value(ns)?;
    let all_real = ns.nodes.iter().all(|x| x.im == 0.0);
    let mut worst = 0.0f64;
    let total = directions.max(2);
    for d in 0..total {
        let shifted: Vec<Complex64> = ns
            .nodes
            .iter()
            .map(|&x| {
                let dir = match d {
                    0 => ONE,
                    1 => -ONE,
                    _ if all_real => {
                        if rng.random::<bool>() {
                            ONE
                        } else {
                            -ONE
                        }
                    }
                    _ => Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU),
                };
                x + dir * eps
            })
            .collect();
        let v = dd_exp_value(&NodeSet::new(shifted, ns.scale)?)?;
        worst = worst.max((v - base).norm());
    }
    let fact: f64 = (1..=q).map(|k| k as f64).product();
    Ok(PerturbationReport {
        eps,
        max_deviation: worst,
        first_order_bound: ns.scale.norm().powi(q as i32 + 1) * eps / fact,
        directions: total,
    })
}
