//! Python bindings: model parameter classes, PMR decomposition, both
//! propagators, divided differences and the cost estimator.

use num_complex::Complex64;
use pyo3::exceptions::{PyMemoryError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pmrsim::divided_difference::{dd_exp as core_dd_exp, NodeSet};
use pmrsim::estimator::{self, Algorithm, CostOptions, CostReport};
use pmrsim::models::{build_rydberg_terms, rydberg_alpha, FloquetTFIMParams, RydbergParams};
use pmrsim::pmr::pmr_decompose;
use pmrsim::propagator_td::{build_td_form, td_evolve, SegmentPolicy};
use pmrsim::propagator_ti::{evolve, PropagatorOptions};
use pmrsim::spin::DenseOperator;
use pmrsim::truncation::evolve_truncated;

type Rows = Vec<Vec<Complex64>>;

fn to_py(e: pmrsim::Error) -> PyErr {
    match e {
        pmrsim::Error::Capacity { .. } => PyMemoryError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn rows(op: &DenseOperator) -> Rows {
    let m = op.matrix();
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

fn algorithm(name: &str) -> PyResult<Algorithm> {
    name.parse().map_err(|e: pmrsim::Error| to_py(e))
}

fn report_dict<'py>(py: Python<'py>, r: &CostReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("algorithm", r.algorithm.name())?;
    d.set_item("gate_cost", r.gate_cost)?;
    d.set_item("qubit_cost", r.qubit_cost)?;
    d.set_item("branch", r.branch)?;
    d.set_item("notes", &r.notes)?;
    let details = PyDict::new(py);
    for (k, v) in &r.details {
        details.set_item(k, v)?;
    }
    d.set_item("details", details)?;
    Ok(d)
}

/// Rydberg atom chain with optional per-site Rabi frequencies.
#[pyclass(module = "pmrsim_py", name = "Rydberg", from_py_object)]
#[derive(Clone)]
struct PyRydberg {
    inner: RydbergParams,
}

#[pymethods]
impl PyRydberg {
    #[new]
    #[pyo3(signature = (n, omega=1.0, delta=0.0, c6=1.0, r=1.0, omegas=None))]
    fn new(n: usize, omega: f64, delta: f64, c6: f64, r: f64, omegas: Option<Vec<f64>>) -> PyResult<Self> {
        let inner = RydbergParams {
            omegas: omegas.unwrap_or_else(|| vec![omega; n]),
            delta,
            c6,
            r,
        };
        if inner.omegas.len() != n {
            return Err(PyValueError::new_err(format!("omegas has {} entries, expected {n}", inner.omegas.len())));
        }
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    /// Identity coefficient followed by `(label, coefficient)` pairs.
    fn pauli_terms(&self) -> PyResult<(f64, Vec<(String, Complex64)>)> {
        let dec = build_rydberg_terms(&self.inner).map_err(to_py)?;
        let terms = dec.terms.iter().map(|t| (t.to_string(), t.coefficient())).collect();
        Ok((dec.identity, terms))
    }

    fn alpha(&self) -> PyResult<f64> {
        rydberg_alpha(&self.inner).map_err(to_py)
    }

    /// `exp(-i H t)` without the identity phase, as nested lists, plus run
    /// metadata.
    #[pyo3(signature = (t, eps, truncate_diagonal=false))]
    fn evolve<'py>(&self, py: Python<'py>, t: f64, eps: f64, truncate_diagonal: bool) -> PyResult<(Rows, Bound<'py, PyDict>)> {
        let opts = PropagatorOptions::default();
        let info = PyDict::new(py);
        let ev = if truncate_diagonal {
            let tr = py.detach(|| evolve_truncated(&self.inner, t, eps, &opts)).map_err(to_py)?;
            info.set_item("n_c", tr.n_c)?;
            tr.evolution
        } else {
            let dec = build_rydberg_terms(&self.inner).map_err(to_py)?;
            let form = pmr_decompose(self.inner.n(), &dec.terms).map_err(to_py)?;
            py.detach(|| evolve(&form, t, eps, &opts)).map_err(to_py)?
        };
        info.set_item("r", ev.plan.r)?;
        info.set_item("q", ev.order.q)?;
        info.set_item("gamma", ev.gamma)?;
        Ok((rows(&ev.operator), info))
    }

    fn cost<'py>(&self, py: Python<'py>, algorithm_name: &str, t: f64, eps: f64) -> PyResult<Bound<'py, PyDict>> {
        let opts = CostOptions::default();
        let r = match algorithm(algorithm_name)? {
            Algorithm::Qubitization => estimator::qubitization_cost(&self.inner, t, eps),
            Algorithm::PmrTi => estimator::pmr_ti_cost(&self.inner, t, eps, &opts),
            Algorithm::PmrTiApprox => estimator::pmr_ti_approx_cost(&self.inner, t, eps, &opts),
            other => return Err(PyValueError::new_err(format!("{other} needs the driven Ising model"))),
        }
        .map_err(to_py)?;
        report_dict(py, &r)
    }
}

/// Periodically driven transverse-field Ising model on a periodic lattice.
#[pyclass(module = "pmrsim_py", name = "FloquetTfim", from_py_object)]
#[derive(Clone)]
struct PyFloquetTfim {
    inner: FloquetTFIMParams,
}

#[pymethods]
impl PyFloquetTfim {
    #[new]
    #[pyo3(signature = (n_per_axis, dim=1, j=1.0, zeta=1.0, omega=1.0))]
    fn new(n_per_axis: usize, dim: usize, j: f64, zeta: f64, omega: f64) -> PyResult<Self> {
        let inner = FloquetTFIMParams {
            n_per_axis,
            dim,
            j,
            zeta,
            omega,
        };
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.sites()
    }

    /// Time-ordered `U(total, 0)` as nested lists, plus the segment count.
    #[pyo3(signature = (total, eps, adaptive=false))]
    fn evolve<'py>(&self, py: Python<'py>, total: f64, eps: f64, adaptive: bool) -> PyResult<(Rows, Bound<'py, PyDict>)> {
        let form = build_td_form(&self.inner).map_err(to_py)?;
        let policy = if adaptive { SegmentPolicy::Adaptive } else { SegmentPolicy::Uniform };
        let ev = py
            .detach(|| td_evolve(&form, total, eps, policy, &PropagatorOptions::default()))
            .map_err(to_py)?;
        let info = PyDict::new(py);
        info.set_item("r", ev.schedule.r())?;
        info.set_item("orders", ev.orders.clone())?;
        Ok((rows(&ev.operator), info))
    }

    fn cost<'py>(&self, py: Python<'py>, algorithm_name: &str, total: f64, eps: f64) -> PyResult<Bound<'py, PyDict>> {
        let r = match algorithm(algorithm_name)? {
            Algorithm::Qhop => estimator::qhop_cost(&self.inner, total, eps),
            Algorithm::PmrTd => estimator::pmr_td_cost(&self.inner, total, eps, &CostOptions::default()),
            other => return Err(PyValueError::new_err(format!("{other} needs the Rydberg model"))),
        }
        .map_err(to_py)?;
        report_dict(py, &r)
    }
}

/// Divided difference of `x -> exp(scale x)` over `nodes`.
#[pyfunction]
#[pyo3(signature = (nodes, scale=Complex64::new(1.0, 0.0)))]
fn dd_exp(nodes: Vec<Complex64>, scale: Complex64) -> PyResult<Complex64> {
    let ns = NodeSet::new(nodes, scale).map_err(to_py)?;
    Ok(core_dd_exp(&ns).map_err(to_py)?.value)
}

/// Runs the sweep described by a TOML config and returns the CSV text.
#[pyfunction]
fn sweep_csv(config: &str) -> PyResult<String> {
    let cfg = pmrsim::cli::parse_config(config).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let grid = cfg.estimate.ok_or_else(|| PyValueError::new_err("config has no [estimate] section"))?;
    let reports = estimator::sweep(&grid).map_err(to_py)?;
    let mut buf = Vec::new();
    estimator::write_csv(&reports, &mut buf).map_err(to_py)?;
    String::from_utf8(buf).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn pmrsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRydberg>()?;
    m.add_class::<PyFloquetTfim>()?;
    m.add_function(wrap_pyfunction!(dd_exp, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_csv, m)?)?;
    Ok(())
}
