"""Proximal surrogates ``f + rho * ||x - center||^2`` and the inexact
proximal point method built on Gap Reduction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bundle import Trace, TraceRecord
from .gapred import bl_mu, gap_reduction, initial_lower_bound
from .problems import Cut, Oracle, OracleSample, evaluate

__all__ = [
    "IPPMResult",
    "ProxOracle",
    "ProxSurrogate",
    "SubproblemResult",
    "ippm",
    "moreau_residual",
    "prox_oracle",
    "solve_prox",
    "solve_subproblem",
]


@dataclass
class ProxSurrogate:
    """``P(x) = f(x) + rho * ||x - center||^2`` for a base instance ``f``."""

    base: object
    center: np.ndarray
    rho: float

    def __post_init__(self):
        self.center = np.array(self.center, dtype=float).ravel()
        if not self.rho > 0:
            raise ValueError("rho must be positive")

    @property
    def region(self):
        return self.base.region

    @property
    def n(self):
        return self.base.n

    @property
    def name(self):
        return f"{self.base.name}+prox"

    def penalty(self, x):
        d = np.asarray(x, dtype=float) - self.center
        return self.rho * float(d @ d)

    def value(self, x):
        return self.base.value(x) + self.penalty(x)

    def dist_to_solution(self, x):
        return None

    def transform(self, base_sample):
        """Turn a base oracle sample into a surrogate sample.

        The quadratic is linearized at the cut's own center, which keeps the
        cut an affine minorant of ``P`` whenever ``P`` is convex.
        """
        c = base_sample.cut.center
        d = c - self.center
        cut = Cut(c, base_sample.cut.value + self.rho * float(d @ d), base_sample.cut.gradient + 2.0 * self.rho * d, base_sample.cut.birth, base_sample.cut.piece)
        fx = base_sample.fx + self.penalty(base_sample.x)
        return OracleSample(base_sample.x, fx, cut, base_sample.perturbation_radius, base_sample.piece, base=base_sample)


def prox_oracle(surrogate, x, radius=0.0, rng=None):
    """One surrogate sample at ``x``; the base sample stays attached as ``.base``."""
    return surrogate.transform(evaluate(surrogate.base, x, radius, rng))


class ProxOracle:
    """Surrogate oracle sharing the call counter of a base :class:`Oracle`."""

    def __init__(self, surrogate, base_oracle):
        self.surrogate = surrogate
        self.base_oracle = base_oracle

    @property
    def region(self):
        return self.surrogate.region

    @property
    def calls(self):
        return self.base_oracle.calls

    def __call__(self, x):
        return self.surrogate.transform(self.base_oracle(x))

    def value(self, x):
        return self.base_oracle.value(x) + self.surrogate.penalty(x)


def solve_prox(instance, center, rho, tol=1e-11, m=None, oracle=None, max_outer=10000):
    """High-accuracy ``argmin f + rho ||x - center||^2`` over the region.

    Returns the :class:`~pwsbl.gapred.BLMuResult` of the solve; the surrogate
    is ``rho``-strongly convex, so ``mu = rho`` is a valid growth modulus.
    """
    sur = ProxSurrogate(instance, center, rho)
    if m is None:
        m = max(instance.n + 2, 2 * (instance.num_pieces if getattr(instance, "has_pieces", False) else 1))
        m = min(m, 16)
    base = oracle if oracle is not None else Oracle(instance)
    return bl_mu(sur, sur.center, rho, m, tol, oracle=ProxOracle(sur, base), max_outer=max_outer)


def _surrogate_pieces(instance, center, rho):
    n = instance.n
    hess = instance.hess + 2.0 * rho * np.eye(n)[None, :, :]
    lin = instance.lin - 2.0 * rho * center[None, :]
    const = instance.const + rho * float(center @ center)
    return hess, lin, const


def polish_prox(instance, center, rho, x0, gap, kkt_tol=1e-10):
    """Active-set Newton refinement of an approximate proximal point.

    Works on piecewise-quadratic instances over the whole space or a box.
    Candidate active sets are read off ``x0`` at several thresholds above
    ``gap``; a candidate is accepted only if it satisfies the optimality
    conditions (non-negative piece weights, inactive pieces below the max,
    correct signs on the fixed box coordinates). Returns ``None`` if no
    candidate verifies.
    """
    if not getattr(instance, "has_pieces", False):
        return None
    region = instance.region
    if region.kind not in ("whole_space", "box"):
        return None
    center = np.asarray(center, dtype=float)
    hess, lin, const = _surrogate_pieces(instance, center, rho)
    x0 = np.asarray(x0, dtype=float)

    def q(x):
        return 0.5 * np.einsum("kij,i,j->k", hess, x, x) + lin @ x + const

    vals0 = q(x0)
    top = float(np.max(vals0))
    scale = max(1.0, abs(top))
    best = None
    for thr in (gap * 10.0, gap * 1e3, gap * 1e5, 1e-9 * scale, 1e-7 * scale, 1e-5 * scale):
        A = np.flatnonzero(vals0 >= top - max(thr, 0.0))
        cand = _newton_kkt(hess, lin, const, A, x0, region, kkt_tol * scale)
        if cand is None:
            continue
        x = cand
        v = float(np.max(q(x)))
        if best is None or v < best[1]:
            best = (x, v)
        break
    return None if best is None else best[0]


def _newton_kkt(hess, lin, const, A, x0, region, tol, iters=30):
    n = x0.size
    fixed = np.zeros(n, dtype=bool)
    lo = hi = None
    if region.kind == "box":
        lo, hi = region.lo, region.hi
        w = np.maximum(hi - lo, 1.0)
        fixed = (x0 <= lo + 1e-9 * w) | (x0 >= hi - 1e-9 * w)
    x = x0.copy()
    if lo is not None:
        x[fixed] = np.where(x0[fixed] <= lo[fixed] + 1e-9 * w[fixed], lo[fixed], hi[fixed])
    free = ~fixed
    a = len(A)
    G = hess[A] @ x + lin[A]
    # weights: least squares on free gradient components with sum one
    M = np.vstack([G[:, free].T, np.ones((1, a))])
    rhs = np.zeros(M.shape[0])
    rhs[-1] = 1.0
    lam = np.linalg.lstsq(M, rhs, rcond=None)[0]
    t = float(np.max(0.5 * np.einsum("kij,i,j->k", hess[A], x, x) + lin[A] @ x + const[A]))
    nf = int(free.sum())
    for _ in range(iters):
        G = hess[A] @ x + lin[A]
        vals = 0.5 * np.einsum("kij,i,j->k", hess[A], x, x) + lin[A] @ x + const[A]
        r1 = (lam @ G)[free]
        r2 = vals - t
        r3 = np.array([lam.sum() - 1.0])
        res = np.concatenate([r1, r2, r3])
        if np.max(np.abs(res)) <= tol:
            break
        Hl = np.einsum("k,kij->ij", lam, hess[A])[np.ix_(free, free)]
        J = np.zeros((nf + a + 1, nf + 1 + a))
        J[:nf, :nf] = Hl
        J[:nf, nf + 1 :] = G[:, free].T
        J[nf : nf + a, :nf] = G[:, free]
        J[nf : nf + a, nf] = -1.0
        J[nf + a, nf + 1 :] = 1.0
        step = np.linalg.lstsq(J, -res, rcond=None)[0]
        x[free] += step[:nf]
        t += step[nf]
        lam += step[nf + 1 :]
    else:
        return None
    G = hess[A] @ x + lin[A]
    if np.any(lam < -1e-9):
        return None
    allvals = 0.5 * np.einsum("kij,i,j->k", hess, x, x) + lin @ x + const
    if np.max(allvals) > t + tol:
        return None
    if lo is not None:
        if np.any(x < lo - tol) or np.any(x > hi + tol):
            return None
        s = lam @ G
        at_lo = fixed & (x <= lo)
        at_hi = fixed & (x >= hi)
        if np.any(s[at_lo] < -tol) or np.any(s[at_hi] > tol):
            return None
    return x


def moreau_residual(instance, xbar, rho, high_acc_tol=1e-11, return_details=False):
    """``||rho (xbar - xhat)||`` with ``xhat`` the proximal point of ``xbar``.

    Requires ``f + rho ||. - xbar||^2`` to be convex. The bundle solve is
    refined by :func:`polish_prox` when the instance is piecewise quadratic.
    With ``return_details`` the solve result is returned as well.
    """
    xbar = np.asarray(xbar, dtype=float)
    res = solve_prox(instance, xbar, rho, high_acc_tol)
    xhat = res.x
    pol = polish_prox(instance, xbar, rho, xhat, res.fbar - res.funder)
    if pol is not None and ProxSurrogate(instance, xbar, rho).value(pol) <= res.fbar + 1e-12 * max(1.0, abs(res.fbar)):
        xhat = pol
    res.x_polished = pol
    r = rho * float(np.linalg.norm(xbar - xhat))
    return (r, res) if return_details else r


@dataclass
class SubproblemResult:
    """One outer step of the proximal point loop."""

    center: np.ndarray
    x: np.ndarray
    P0: float
    Pbar: float
    Punder: float
    delta_bar: float
    gr_calls: int
    stationary: bool
    records: list = field(default_factory=list)
    surrogate: ProxSurrogate | None = None
    center_sample: OracleSample | None = None

    @property
    def descent(self):
        return self.P0 - self.Pbar


def solve_subproblem(instance, center, rho, m, oracle, stop_gap, tol=1e-10, max_gr=10000, iter_offset=0):
    """Run Gap Reduction on the surrogate until half of the possible descent
    is achieved or the certified surrogate gap at the center is ``<= stop_gap``.
    """
    sur = ProxSurrogate(instance, center, rho)
    por = ProxOracle(sur, oracle)
    s0 = por(sur.center)
    P0 = s0.fx
    Pbar = P0
    Punder = initial_lower_bound(P0, s0.cut.gradient, rho, strongly_convex=True)
    x, sample = sur.center.copy(), s0
    records = []
    it = iter_offset
    for calls in range(1, max_gr + 1):
        if P0 - Punder <= stop_gap:
            return SubproblemResult(sur.center, sur.center.copy(), P0, P0, Punder, P0 - Punder, calls - 1, True, records, sur, s0)
        res = gap_reduction(rho, x, Pbar, Punder, m, por, instance.region, tol, sample0=sample, iter_offset=it)
        records.extend(res.trace)
        it += max(res.inner_iterations, 1)
        x, Pbar, Punder = res.x, res.fbar, res.funder
        sample = next(s for s in res.samples if np.array_equal(s.x, x))
        if P0 - Punder <= stop_gap:
            return SubproblemResult(sur.center, sur.center.copy(), P0, P0, Punder, P0 - Punder, calls, True, records, sur, s0)
        if P0 - Pbar >= Pbar - Punder:
            return SubproblemResult(sur.center, x.copy(), P0, Pbar, Punder, P0 - Punder, calls, False, records, sur, s0)
    raise RuntimeError(f"proximal subproblem exceeded {max_gr} gap reductions")


@dataclass
class IPPMResult:
    xbar: np.ndarray
    trace: Trace
    steps: list
    outer_iterations: int
    oracle_calls: int

    def __iter__(self):
        return iter((self.xbar, self.trace))

    @property
    def delta_bars(self):
        return [s.delta_bar for s in self.steps]


def _outer_cap(instance, f0, rho, eps):
    gt = getattr(instance, "ground_truth", None)
    lower = None
    if gt is not None:
        lower = gt.fstar if gt.fstar is not None else gt.f_lower
    if lower is None or not math.isfinite(lower):
        return None
    return int(math.ceil(16.0 * rho * max(f0 - lower, 0.0) / eps**2)) + 10


def ippm(instance, xbar0, rho, m, eps, perturbation_radius=0.0, seed=0, tol=1e-10, max_outer=None, oracle=None):
    """Inexact proximal point method for a ``rho``-weakly convex objective.

    Stops at the first center whose certified surrogate gap is at most
    ``eps**2 / (8 rho)``; that center is ``(rho, eps)``-Moreau stationary.
    """
    if not (rho > 0 and eps > 0):
        raise ValueError("rho and eps must be positive")
    if oracle is None:
        oracle = Oracle(instance, perturbation_radius, seed)
    xbar = np.array(xbar0, dtype=float)
    stop_gap = eps**2 / (8.0 * rho)
    cap = max_outer
    trace = Trace(meta={"algorithm": "ippm", "rho": rho, "m": m, "eps": eps})
    steps = []
    it = 0
    s = 0
    while True:
        step = solve_subproblem(instance, xbar, rho, m, oracle, stop_gap, tol, iter_offset=it)
        steps.append(step)
        if s == 0 and cap is None:
            cap = _outer_cap(instance, step.P0, rho, eps) or 100000
            trace.meta["outer_cap"] = cap
        for rec in step.records:
            trace.append(rec)
        it = max(it + 1, trace.records[-1].iter + 1 if trace.records else it + 1)
        ev = {"outer": s, "delta_bar": step.delta_bar, "gr_calls": step.gr_calls, "P0": step.P0, "Pbar": step.Pbar}
        if step.stationary:
            trace.append(TraceRecord(it, xbar.copy(), step.P0, instance.dist_to_solution(xbar), None, step.center_sample.piece, 0.0, "outer", oracle.calls, dict(ev, stationary=True)))
            trace.oracle_calls = oracle.calls
            return IPPMResult(xbar, trace, steps, s, oracle.calls)
        if s >= cap:
            raise RuntimeError(f"ippm exceeded {cap} outer iterations without reaching the stationarity threshold")
        xbar = step.x
        fx = step.Pbar - step.surrogate.penalty(xbar)
        trace.append(TraceRecord(it, xbar.copy(), fx, instance.dist_to_solution(xbar), None, None, 0.0, "outer", oracle.calls, ev))
        s += 1
