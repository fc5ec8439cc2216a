"""Backend selection for the QP inner loops.

The compiled extension is used when it imports cleanly; otherwise the
pure-Python module takes over with a warning. Setting the environment
variable ``PWSBL_PURE_PYTHON=1`` forces the fallback.
"""

import os
import warnings

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("PWSBL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        warnings.warn(
            "pwsbl: compiled kernels not available, using pure-Python fallback",
            RuntimeWarning,
            stacklevel=2,
        )
        _impl = _kernels_py


def _prep(G, vec):
    G = np.ascontiguousarray(G, dtype=float)
    vec = np.ascontiguousarray(vec, dtype=float).copy()
    return G, vec


def hildreth(G, q, lam0=None, max_sweeps=1000, tol=1e-12, backend=None):
    """Run dual coordinate ascent; returns ``(lam, sweeps, kkt)``."""
    impl = _pick(backend)
    G = np.ascontiguousarray(G, dtype=float)
    q = np.ascontiguousarray(q, dtype=float)
    lam = np.zeros(len(q)) if lam0 is None else np.array(lam0, dtype=float)
    sweeps, kkt = impl.hildreth(G, q, lam, int(max_sweeps), float(tol))
    return lam, sweeps, kkt


def min_norm_simplex(K, lam0=None, max_iter=10000, tol=1e-14, backend=None):
    """Minimum-norm point of a convex hull given the Gram matrix ``K``.

    Returns ``(lam, iterations, fw_gap)``; the point is ``lam @ points``.
    """
    impl = _pick(backend)
    K = np.ascontiguousarray(K, dtype=float)
    m = K.shape[0]
    if lam0 is None:
        lam = np.zeros(m)
        lam[int(np.argmin(np.diag(K)))] = 1.0
    else:
        lam = np.array(lam0, dtype=float)
    it, gap = impl.min_norm_simplex(K, lam, int(max_iter), float(tol))
    return lam, it, gap


def _pick(backend):
    if backend is None:
        return _impl
    if backend == "python":
        return _kernels_py
    if backend == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {backend!r}")
