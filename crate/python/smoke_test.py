"""Smoke test for the pmrsim_py extension module.

Build and install with
    pip install --no-build-isolation -e crates/python
then run
    python python/smoke_test.py
"""

import math
import pathlib

import numpy as np
from scipy.linalg import expm

import pmrsim_py

ROOT = pathlib.Path(__file__).resolve().parents[1]


def rydberg_dense(n, omega, delta, c6):
    dim = 1 << n
    h = np.zeros((dim, dim), dtype=complex)
    for z in range(dim):
        occ = [1.0 if (z >> i) & 1 == 0 else 0.0 for i in range(n)]
        e = 0.0
        for i in range(n):
            e -= delta / 2 * (2 * occ[i] - 1)
            for j in range(i + 1, n):
                e += c6 / (j - i) ** 6 * occ[i] * occ[j]
            h[z ^ (1 << i), z] += omega / 2
        h[z, z] += e
    return h


def check_ti():
    model = pmrsim_py.Rydberg(3, omega=1.0, delta=0.4, c6=1.5)
    identity, terms = model.pauli_terms()
    u, info = model.evolve(1.0, 1e-8)
    exact = expm(-1j * rydberg_dense(3, 1.0, 0.4, 1.5)) * np.exp(1j * identity)
    err = np.linalg.norm(np.array(u) - exact, 2)
    assert err <= 1e-8, err
    assert model.alpha() > 0 and len(terms) > 0
    print(f"evolve-ti: error {err:.2e}, r={info['r']}, Q={info['q']}")


def check_td():
    zeta, omega, total = 0.8, 5.0, 0.5
    model = pmrsim_py.FloquetTfim(1, dim=1, j=0.0, zeta=zeta, omega=omega)
    u, _ = model.evolve(total, 1e-10)
    a = zeta / omega * math.sin(omega * total)
    closed = np.array([[math.cos(a), 1j * math.sin(a)], [1j * math.sin(a), math.cos(a)]])
    err = np.linalg.norm(np.array(u) - closed, 2)
    assert err <= 1e-8, err
    print(f"evolve-td: closed-form error {err:.2e}")


def check_dd():
    a, b = -1.3, 2.1
    s = -0.9j
    got = pmrsim_py.dd_exp([a, b], s)
    expected = (np.exp(s * b) - np.exp(s * a)) / (b - a)
    assert abs(got - expected) < 1e-14
    print("dd_exp: two-node quotient ok")


def check_costs():
    p = pmrsim_py.Rydberg(4)
    ti = [p.cost("pmr_ti", 1.0, 1e-3)["gate_cost"] for _ in range(2)]
    assert ti[0] == ti[1]
    td = {pmrsim_py.FloquetTfim(3, zeta=0.8, omega=w).cost("pmr_td", 0.5, 1e-3)["gate_cost"] for w in (1, 10, 100)}
    assert len(td) == 1
    csv_text = pmrsim_py.sweep_csv((ROOT / "configs" / "demo_grid.toml").read_text())
    golden = (ROOT / "crates" / "core" / "tests" / "golden" / "demo_grid.csv").read_text()
    assert csv_text == golden
    print(f"estimator: pmr_ti {ti[0]:.0f}, pmr_td {td.pop():.0f}, golden sweep reproduced")


if __name__ == "__main__":
    check_ti()
    check_td()
    check_dd()
    check_costs()
    print("all smoke checks passed")
