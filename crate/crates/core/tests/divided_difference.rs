use num_complex::Complex64;
use pmrsim::divided_difference::{
    dd_exp, dd_exp_append, dd_perturbation_check, simplex_integral_mc, simplex_nodes, DdAccumulator, NodeSet,
};
use pmrsim_oracles::{dd_reference, OracleConfig};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type C = Complex64;

fn rel(a: C, b: C) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn agrees_with_extended_precision() {
    let mut rng = StdRng::seed_from_u64(5);
    let cfg = OracleConfig::default();
    for it in 0..600 {
        let q = rng.random_range(0..=12usize);
        let imag = if it % 3 == 0 { 2.0 } else { 0.0 };
        let mut nodes: Vec<C> = (0..=q)
            .map(|_| C::new(rng.random_range(-20.0..20.0), rng.random_range(-1.0..=1.0) * imag))
            .collect();
        if q >= 1 && it % 2 == 0 {
            nodes[q] = nodes[0] + 1e-8;
        }
        let s = C::new(0.0, -rng.random_range(0.05..=1.0));
        let value = dd_exp(&NodeSet::new(nodes.clone(), s).unwrap()).unwrap().value;
        assert!(rel(value, dd_reference(&nodes, s, &cfg)) <= 1e-8, "nodes {nodes:?}");
    }
}

#[test]
fn confluent_and_closed_forms() {
    // all-equal nodes: s^q e^{s x} / q!
    let x = 0.7;
    let s = C::new(0.0, -0.9);
    for q in 0..=10usize {
        let ns = NodeSet::new(vec![C::new(x, 0.0); q + 1], s).unwrap();
        let fact: f64 = (1..=q).map(|k| k as f64).product();
        let expected = s.powu(q as u32) * (s * x).exp() / fact;
        assert!(rel(dd_exp(&ns).unwrap().value, expected) < 1e-13);
    }
    let (a, b) = (C::new(-1.3, 0.0), C::new(2.1, 0.0));
    let expected = ((s * b).exp() - (s * a).exp()) / (b - a);
    let got = dd_exp(&NodeSet::new(vec![a, b], s).unwrap()).unwrap().value;
    assert!(rel(got, expected) < 1e-14);
}

#[test]
fn incremental_matches_batch() {
    let mut rng = StdRng::seed_from_u64(9);
    let s = C::new(0.0, -0.4);
    let nodes: Vec<C> = (0..10).map(|_| C::new(rng.random_range(-5.0..5.0), 0.0)).collect();
    let mut acc = DdAccumulator::new(s);
    for (k, &x) in nodes.iter().enumerate() {
        let inc = dd_exp_append(&mut acc, x).unwrap().value;
        let batch = dd_exp(&NodeSet::new(nodes[..=k].to_vec(), s).unwrap()).unwrap().value;
        assert!(rel(inc, batch) < 1e-13);
    }
}

#[test]
fn permutation_symmetry() {
    let mut rng = StdRng::seed_from_u64(21);
    for _ in 0..200 {
        let q = rng.random_range(1..=12usize);
        let mut nodes: Vec<C> = (0..=q).map(|_| C::new(rng.random_range(-20.0..20.0), 0.0)).collect();
        let s = C::new(0.0, -1.0);
        let a = dd_exp(&NodeSet::new(nodes.clone(), s).unwrap()).unwrap().value;
        for i in (1..nodes.len()).rev() {
            nodes.swap(i, rng.random_range(0..=i));
        }
        let b = dd_exp(&NodeSet::new(nodes, s).unwrap()).unwrap().value;
        assert!(rel(b, a) <= 1e-12);
    }
}

#[test]
fn simplex_identity_monte_carlo() {
    let mut rng = StdRng::seed_from_u64(1);
    for q in 1..=4 {
        let rates: Vec<C> = (0..q).map(|_| C::new(0.0, rng.random_range(-4.0..4.0))).collect();
        let (mc, stderr) = simplex_integral_mc(&rates, 200_000, &mut rng).unwrap();
        let dd = dd_exp(&NodeSet::new(simplex_nodes(&rates), C::new(1.0, 0.0)).unwrap())
            .unwrap()
            .value;
        assert!((mc - dd).norm() <= 3.0 * stderr, "q={q}: {mc} vs {dd} (stderr {stderr})");
    }
}

#[test]
fn perturbation_is_first_order() {
    let mut rng = StdRng::seed_from_u64(13);
    let nodes: Vec<f64> = (0..7).map(|_| rng.random_range(-4.0..4.0)).collect();
    let ns = NodeSet::real(&nodes, C::new(0.0, -0.8)).unwrap();
    let mut prev: Option<f64> = None;
    for k in 3..=10 {
        let eps = 10f64.powi(-k);
        let rep = dd_perturbation_check(&ns, eps, 32, &mut rng).unwrap();
        assert!(rep.max_deviation <= rep.first_order_bound * (1.0 + 1e-6) + 1e-15, "eps={eps}");
        if let Some(p) = prev {
            // deviation shrinks linearly with eps
            let ratio = p / rep.max_deviation;
            assert!((5.0..20.0).contains(&ratio), "ratio {ratio}");
        }
        prev = Some(rep.max_deviation);
    }
}
