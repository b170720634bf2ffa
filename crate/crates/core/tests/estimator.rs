use std::f64::consts::LN_2;

use pmrsim::cli::parse_config;
use pmrsim::estimator::{
    pmr_td_cost, pmr_ti_approx_cost, pmr_ti_cost, qhop_cost, qubitization_cost, sweep, td_segment_bound,
    verify_norm_bounds, write_csv, write_json, Algorithm, CostOptions, RydbergGrid, SweepGrid,
};
use pmrsim::models::{FloquetTFIMParams, RydbergParams};
use pmrsim::propagator_td::{build_td_form, td_truncation_order};
use pmrsim::spin::DenseLimits;

const GOLDEN: &str = include_str!("golden/demo_grid.csv");
const DEMO: &str = include_str!("../../../configs/demo_grid.toml");

/// `sum_{k > q} x^k / k!` by direct summation.
fn tail(x: f64, q: u32) -> f64 {
    let mut term = (1..=q + 1).fold(1.0, |acc, k| acc * x / k as f64);
    let mut sum = 0.0;
    let mut k = q + 1;
    while term > 1e-300 && k < q + 400 {
        sum += term;
        k += 1;
        term *= x / k as f64;
    }
    sum
}

fn order_for(x: f64, eps: f64) -> u32 {
    (0..).find(|&q| tail(x, q) <= eps).unwrap()
}

fn tfim(n_per_axis: usize, dim: usize, j: f64, zeta: f64, omega: f64) -> FloquetTFIMParams {
    FloquetTFIMParams {
        n_per_axis,
        dim,
        j,
        zeta,
        omega,
    }
}

#[test]
fn qubitization_examples() {
    let p = RydbergParams::uniform(2, 1.0, 0.0, 1.0);
    let (alpha, m) = (1.75, 5.0);
    let r = qubitization_cost(&p, 1.0, 0.1).unwrap();
    assert!((r.gate_cost - (alpha + 10f64.ln()) * m * (2.0 + 3.0)).abs() < 1e-12);
    let limit = qubitization_cost(&p, 1.0, 1.0).unwrap();
    assert!((limit.gate_cost - alpha * m * 5.0).abs() < 1e-12);
    let a = qubitization_cost(&p, 1.0, 1e-3).unwrap();
    let b = qubitization_cost(&p, 2.0, 1e-3).unwrap();
    assert!((b.breakdown.multiplier.1 - a.breakdown.multiplier.1 - alpha).abs() < 1e-12);
    assert_eq!(a.recompose(), a.gate_cost);
}

#[test]
fn pmr_ti_example_and_invariance() {
    let p = RydbergParams::uniform(4, 1.0, 0.0, 1.0);
    let r = pmr_ti_cost(&p, 1.0, 1e-3, &CostOptions::default()).unwrap();
    assert_eq!(r.detail("Gamma"), Some(2.0));
    assert_eq!(r.detail("r"), Some(3.0));
    let q = order_for(2.0 / 3.0, 1e-3 / 6.0) as f64;
    assert_eq!(r.detail("Q"), Some(q));
    assert_eq!(r.gate_cost, 3.0 * (16.0 + q * q + q * 4.0 * (4.0 + 1.0 + 2.0)));
    for delta in [0.0, 10.0, 100.0] {
        for c6p in [0.1, 1.0, 50.0] {
            let other = pmr_ti_cost(&RydbergParams::uniform(4, 1.0, delta, c6p), 1.0, 1e-3, &CostOptions::default())
                .unwrap();
            assert_eq!(other.gate_cost.to_bits(), r.gate_cost.to_bits());
            assert_eq!(other.breakdown, r.breakdown);
        }
    }
    // mean Rabi frequency
    let mixed = RydbergParams {
        omegas: vec![0.5, 1.5, 1.0, 1.0],
        delta: 0.0,
        c6: 1.0,
        r: 1.0,
    };
    let m = pmr_ti_cost(&mixed, 1.0, 1e-3, &CostOptions::default()).unwrap();
    assert_eq!(m.gate_cost, r.gate_cost);
}

#[test]
fn pmr_ti_approx_examples() {
    let p = RydbergParams::uniform(4, 1.0, 0.0, 1.0);
    let r = pmr_ti_approx_cost(&p, 1.0, 1e-3, &CostOptions::default()).unwrap();
    assert_eq!(r.detail("n_C"), Some(3.0));
    let q = r.detail("Q").unwrap();
    let n_d = (8.0 * q / (5.0 * 1e-3)).powf(0.2).ceil();
    assert_eq!(r.detail("n_D"), Some(n_d));
    // large eps floors both cutoffs at 1
    let loose = RydbergParams::uniform(8, 1.0, 0.0, 1.0);
    let a = pmr_ti_approx_cost(&loose, 1.0, 5.0, &CostOptions::default()).unwrap();
    assert_eq!((a.detail("n_C"), a.detail("n_D")), (Some(1.0), Some(1.0)));
    let full = pmr_ti_cost(&loose, 1.0, 5.0, &CostOptions::default()).unwrap();
    assert!(a.gate_cost < full.gate_cost);
}

#[test]
fn qhop_branches() {
    let base = tfim(3, 1, 1.0, 1.0, 5.0);
    let r = qhop_cost(&base, 1.0, 1e-3).unwrap();
    let (ab, bb, aab) = (3.0, 15.0, 12.0);
    let lnf = |x: f64| x.max(std::f64::consts::E).ln();
    let b1 = ab * ab / 1e-3 * lnf(ab / 1e-3);
    let b2 = ab + (ab * (aab + bb)).sqrt() / 1e-3f64.sqrt() * lnf(ab * (aab + bb) / 1e-3);
    let expected = b1.min(b2) * lnf((aab + bb) / 1e-3) * 3.0 * 4.0;
    assert!((r.gate_cost - expected).abs() <= 1e-12 * expected);
    assert_eq!(r.branch, Some(if b1 <= b2 { 1 } else { 2 }));

    // beyond some omega the omega-free branch is always selected
    let omegas: Vec<f64> = (0..60).map(|k| 10f64.powf(k as f64 / 6.0)).collect();
    let branches: Vec<u8> = omegas
        .iter()
        .map(|&w| qhop_cost(&tfim(3, 1, 1.0, 1.0, w), 1.0, 1e-3).unwrap().branch.unwrap())
        .collect();
    let first = branches.iter().position(|&b| b == 1).expect("omega-free branch reached");
    assert!(branches[first..].iter().all(|&b| b == 1));
    assert!(branches[0] == 2);

    // quadrature-node count below one is floored
    let weak = qhop_cost(&tfim(2, 1, 0.0, 1.0, 0.0), 1.0, 1e-3).unwrap();
    assert_eq!(weak.detail("M1"), Some(1.0));
}

#[test]
fn pmr_td_examples_and_invariance() {
    let p = tfim(3, 1, 1.0, 0.8, 5.0);
    let r = pmr_td_cost(&p, 0.5, 1e-3, &CostOptions::default()).unwrap();
    assert_eq!(r.detail("r"), Some(2.0));
    let q = order_for(2.4 * 0.25, 1e-3 / 4.0) as f64;
    assert_eq!(r.detail("Q"), Some(q));
    assert_eq!(r.gate_cost, 2.0 * (q * q + q * 3.0 * 3.0 + q * 3.0 * 2.0 * 4.0) + 6.0);
    assert!(r.detail("r").unwrap() <= 0.5 * 3.0 * 0.8 / LN_2 + 1.0);
    assert_eq!(td_segment_bound(&p, 0.5), 2.0);
    for omega in [1.0, 100.0] {
        for j in [0.1, 10.0] {
            let other = pmr_td_cost(&tfim(3, 1, j, 0.8, omega), 0.5, 1e-3, &CostOptions::default()).unwrap();
            assert_eq!(other.gate_cost.to_bits(), r.gate_cost.to_bits());
            assert_eq!((other.qubit_cost, &other.breakdown, &other.details), (r.qubit_cost, &r.breakdown, &r.details));
        }
    }
    let orders: Vec<_> = [1.0, 10.0, 100.0]
        .iter()
        .map(|&w| td_truncation_order(&build_td_form(&tfim(3, 1, 1.0, 0.8, w)).unwrap(), 0.5, 1e-3).unwrap())
        .collect();
    assert!(orders.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn norm_bound_examples() {
    let p = tfim(4, 1, 1.0, 1.0, 2.0);
    let quarter = std::f64::consts::FRAC_PI_2 / 2.0;
    let nb = verify_norm_bounds(&p, &[0.0, quarter], &DenseLimits::default()).unwrap();
    assert!((nb.sum_x_norm - 4.0).abs() < 1e-10);
    assert_eq!(nb.alpha_ab_bound, 16.0);
    assert!(nb.samples[0].commutator <= 16.0);
    assert!(nb.samples[1].b.abs() < 1e-12);
    assert!(nb.violations().is_empty());
}

fn demo_grid() -> SweepGrid {
    parse_config(DEMO).unwrap().estimate.unwrap()
}

#[test]
fn golden_csv_is_reproduced() {
    let rows = sweep(&demo_grid()).unwrap();
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), GOLDEN);
    for r in &rows {
        assert_eq!(r.recompose(), r.gate_cost);
    }
}

#[test]
fn json_and_csv_row_counts_agree() {
    let rows = sweep(&demo_grid()).unwrap();
    let mut buf = Vec::new();
    write_json(&rows, &mut buf).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
    assert_eq!(v["disclaimer"], "leading-order with unit constants");
    assert_eq!(v["rows"].as_array().unwrap().len(), GOLDEN.lines().count() - 1);
}

#[test]
fn sweep_order_and_monotonicity() {
    let grid = SweepGrid {
        algorithms: vec![Algorithm::PmrTi, Algorithm::Qubitization],
        rydberg: Some(RydbergGrid {
            n: vec![2, 4, 8],
            omega: vec![1.0],
            delta: vec![0.0],
            c6p: vec![1.0],
            t: vec![1.0],
            eps: vec![1e-3],
        }),
        tfim: None,
        include_q_factor: true,
    };
    let rows = sweep(&grid).unwrap();
    let algs: Vec<_> = rows.iter().map(|r| r.algorithm).collect();
    assert_eq!(algs, [Algorithm::PmrTi, Algorithm::Qubitization].repeat(3));
    let ti: Vec<f64> = rows.iter().filter(|r| r.algorithm == Algorithm::PmrTi).map(|r| r.gate_cost).collect();
    assert!(ti.windows(2).all(|w| w[0] < w[1]));

    let single = SweepGrid {
        algorithms: vec![Algorithm::Qubitization, Algorithm::PmrTi, Algorithm::PmrTiApprox],
        rydberg: Some(RydbergGrid {
            n: vec![3],
            ..grid.rydberg.clone().unwrap()
        }),
        ..grid.clone()
    };
    assert_eq!(sweep(&single).unwrap().len(), 3);

    let none = SweepGrid {
        algorithms: vec![],
        ..grid
    };
    assert!(sweep(&none).unwrap().is_empty());
}
