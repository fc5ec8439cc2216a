"""Both kernel backends against each other and against direct checks."""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pwsbl import kernels

BACKENDS = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])


def _kkt(G, q, lam):
    g = G @ lam - q
    return float(np.max(np.where(lam > 0, np.abs(g), np.maximum(-g, 0.0))))


@pytest.mark.parametrize("backend", BACKENDS)
@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), m=st.integers(1, 8))
def test_hildreth_solves_well_conditioned_duals(backend, seed, m):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, 4))
    G = A @ A.T + np.eye(m)
    q = rng.standard_normal(m)
    lam, sweeps, kkt = kernels.hildreth(G, q, max_sweeps=20000, tol=1e-12, backend=backend)
    assert np.all(lam >= 0)
    assert kkt <= 1e-12
    assert _kkt(G, q, lam) <= 1e-11


@pytest.mark.parametrize("backend", BACKENDS)
@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), m=st.integers(2, 8), sweeps=st.integers(1, 50))
def test_hildreth_reports_its_residual_honestly(backend, seed, m, sweeps):
    # Ill-conditioned duals may stop early; the reported residual must match.
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, 2))
    G, q = A @ A.T, rng.standard_normal(m)
    lam, used, kkt = kernels.hildreth(G, q, max_sweeps=sweeps, tol=1e-14, backend=backend)
    assert used <= sweeps
    assert kkt == pytest.approx(_kkt(G, q, lam), rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), m=st.integers(1, 8))
def test_min_norm_simplex_optimality(backend, seed, m):
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((m, 3)) + 2.0
    lam, _, gap = kernels.min_norm_simplex(P @ P.T, max_iter=20000, tol=1e-14, backend=backend)
    assert lam.sum() == pytest.approx(1.0)
    assert np.all(lam >= 0)
    grad = P @ (P.T @ lam)
    # Frank-Wolfe gap: no vertex improves the current point.
    assert lam @ grad - grad.min() <= 1e-8


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernels not built")
def test_backends_agree():
    rng = np.random.default_rng(0)
    for _ in range(20):
        A = rng.standard_normal((6, 3))
        G, q = A @ A.T, rng.standard_normal(6)
        a = kernels.hildreth(G, q, max_sweeps=500, tol=1e-13, backend="python")
        b = kernels.hildreth(G, q, max_sweeps=500, tol=1e-13, backend="cython")
        np.testing.assert_allclose(a[0], b[0], rtol=1e-10, atol=1e-12)
        assert a[1] == b[1]
        P = rng.standard_normal((6, 3))
        c = kernels.min_norm_simplex(P @ P.T, max_iter=300, backend="python")
        d = kernels.min_norm_simplex(P @ P.T, max_iter=300, backend="cython")
        np.testing.assert_allclose(c[0], d[0], rtol=1e-10, atol=1e-12)


def test_pure_python_switch():
    env = dict(os.environ, PWSBL_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import pwsbl; print(pwsbl.KERNEL_BACKEND)"], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
