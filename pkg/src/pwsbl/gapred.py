"""Gap Reduction with the empirical-smoothness progress test, and the
bundle-level driver for problems with a known growth modulus."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bundle import Trace, TraceRecord
from .geometry import min_max_affine, project_onto_level_set
from .problems import Oracle

__all__ = [
    "BLMuResult",
    "GapReductionResult",
    "GapState",
    "bl_mu",
    "dp_update",
    "empirical_smoothness",
    "gap_reduction",
    "initial_lower_bound",
]


def empirical_smoothness(sample_r, sample_l, slack):
    """Curvature proxy ``max{2 (f(x_r) - cut_l(x_r) - slack) / |x_r - x_l|^2, 0}``."""
    if slack < 0:
        raise ValueError("slack must be non-negative")
    d = np.asarray(sample_r.x, dtype=float) - np.asarray(sample_l.x, dtype=float)
    d2 = float(d @ d)
    if d2 == 0.0:
        raise ValueError("empirical smoothness is undefined for coincident points")
    return max(2.0 * (sample_r.fx - sample_l.cut.support(sample_r.x) - slack) / d2, 0.0)


def initial_lower_bound(fx, gradient, mu, strongly_convex=False):
    """Lower bound on ``f*`` from one first-order sample and a growth modulus.

    Quadratic growth gives ``f(x) - 2|g|^2/mu``; strong convexity allows the
    sharper ``f(x) - |g|^2/(2 mu)``.
    """
    g2 = float(np.dot(gradient, gradient))
    return fx - (g2 / (2.0 * mu) if strongly_convex else 2.0 * g2 / mu)


@dataclass
class GapState:
    """Running bounds and the progress recursion of one Gap Reduction call."""

    fbar: float
    funder: float
    xbar: np.ndarray
    samples: list = field(default_factory=list)
    S_l: list = field(default_factory=lambda: [0.0])
    S_r: list = field(default_factory=lambda: [0.0])
    arg_r: list = field(default_factory=lambda: [None])
    arg_l: list = field(default_factory=lambda: [0])
    pair_L: dict = field(default_factory=dict)
    levels: list = field(default_factory=list)

    @property
    def delta(self):
        return self.fbar - self.funder


def dp_update(state, t, m, delta_t):
    """Extend the progress recursion to index ``t + 1``.

    ``S_r(t+1) = max_q S_l(q) + 1 / ((t+1-q) * Ltilde(t+1, q; delta_t / 6))`` over
    the window ``q >= t + 1 - m``, and ``S_l(t+1)`` is the running max of
    ``S_r`` over the same window. A zero ``Ltilde`` counts as unbounded
    progress; coincident points contribute nothing.
    """
    tau = max(0, t + 1 - m)
    new = state.samples[t + 1]
    window = state.samples[tau : t + 1]
    xr = np.asarray(new.x, dtype=float)
    D = xr - np.array([old.x for old in window])
    d2 = np.einsum("ij,ij->i", D, D)
    # Cut of each older sample evaluated at the new point.
    support = np.array([old.cut.value + old.cut.gradient @ (xr - old.cut.center) for old in window])
    Ls = np.maximum(2.0 * (new.fx - support - delta_t / 6.0) / np.where(d2 > 0.0, d2, 1.0), 0.0)
    best, arg = -math.inf, None
    for i, q in enumerate(range(tau, t + 1)):
        if not np.any(D[i]):
            term = 0.0
        else:
            Lt = float(Ls[i]) if d2[i] > 0.0 else empirical_smoothness(new, window[i], delta_t / 6.0)
            state.pair_L[(q, t + 1)] = Lt
            term = math.inf if Lt == 0.0 else 1.0 / ((t + 1 - q) * Lt)
        val = state.S_l[q] + term
        if val > best:
            best, arg = val, q
    state.S_r.append(best)
    state.arg_r.append(arg)
    lbest, larg = -math.inf, None
    for q in range(tau, t + 2):
        if state.S_r[q] > lbest:
            lbest, larg = state.S_r[q], q
    state.S_l.append(lbest)
    state.arg_l.append(larg)
    return state


def _chain_pairs(state, end):
    """Backtrack the pair sequence realizing ``S_r(end)``."""
    pairs = []
    r = end
    while r is not None and r > 0:
        q = state.arg_r[r]
        if q is None:
            break
        if (q, r) in state.pair_L:
            pairs.append((q, r))
        nxt = state.arg_l[q]
        if nxt is None or nxt >= r:
            break
        r = nxt
        if state.S_r[r] <= 0.0:
            break
    pairs.reverse()
    return pairs


@dataclass
class GapReductionResult:
    x: np.ndarray
    fbar: float
    funder: float
    trace: list
    inner_iterations: int
    termination: str
    delta0: float
    state: GapState
    chain: list = field(default_factory=list)
    dp_bound: float = math.inf
    dp_ratio: float = math.inf
    samples: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.x, self.fbar, self.funder, self.trace))

    @property
    def delta(self):
        return self.fbar - self.funder


def _chain_ratio(state, chain, N, mu):
    """``kappa sigma Lbar / mu`` for the pair sequence ``chain``."""
    if not chain:
        return math.inf
    p = len(chain)
    inv = sum(1.0 / (r - q) for q, r in chain)
    den = 0.0
    for q, r in chain:
        Lt = state.pair_L[(q, r)]
        if Lt == 0.0:
            return 0.0
        den += 1.0 / ((r - q) * Lt)
    kappa, sigma, L_bar = N / p, p / inv, inv / den
    return kappa * sigma * L_bar / mu


def gap_reduction(mu, x0, fbar, funder, m, oracle, region=None, tol=1e-10, sample0=None, max_inner=100000, iter_offset=0, instance=None):
    """Shrink the gap ``fbar - funder`` by a factor 2/3.

    Iterates are projections onto level sets at one third of the gap above
    the lower bound. The lower bound rises either from the min-max of the
    recent cuts, from an empty level set, or when the progress recursion
    reaches ``6 / mu`` (then the smallest level used is a valid bound if
    ``mu`` is a valid growth modulus).
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    if m < 1:
        raise ValueError("m must be >= 1")
    region = oracle.region if region is None else region
    x0 = np.array(x0, dtype=float)
    if sample0 is None:
        sample0 = oracle(x0)
    delta0 = fbar - funder
    if delta0 < 0:
        raise ValueError("funder must not exceed fbar")
    state = GapState(fbar, funder, x0.copy(), [sample0])
    records = []
    if delta0 == 0.0:
        return GapReductionResult(x0, fbar, funder, records, 0, "zero_gap", 0.0, state, samples=state.samples)
    x = x0
    t = 0
    termination = None
    while True:
        if t >= max_inner:
            raise RuntimeError(f"gap reduction exceeded {max_inner} inner iterations")
        level = (2.0 * state.funder + state.fbar) / 3.0
        state.levels.append(level)
        cuts = [state.samples[q].cut for q in range(max(0, t - m + 1), t + 1)]
        proj = project_onto_level_set(x, cuts, level, region, tol)
        if not proj.feasible:
            state.funder = max(state.funder, level)
            records.append(_record(iter_offset + t, x, state, level, "bound_update", oracle, instance, proj.kkt_residual, "infeasible_level"))
            termination = "infeasible"
            break
        x = proj.point
        s = oracle(x)
        state.samples.append(s)
        delta_t = state.delta
        if s.fx < state.fbar:
            state.fbar, state.xbar = s.fx, x.copy()
        lb_cuts = [state.samples[q].cut for q in range(max(0, t + 2 - m), t + 2)]
        lb = min_max_affine(lb_cuts, region, None, tol)
        if lb > state.funder:
            state.funder = lb
        dp_update(state, t, m, delta_t)
        t += 1
        if state.delta <= 2.0 / 3.0 * delta0:
            records.append(_record(iter_offset + t, x, state, level, "bound_update", oracle, instance, proj.kkt_residual, "gap"))
            termination = "gap"
            break
        if state.S_r[t] >= 6.0 / mu:
            state.funder = max(state.funder, min(state.levels))
            records.append(_record(iter_offset + t, x, state, level, "bound_update", oracle, instance, proj.kkt_residual, "progress"))
            termination = "trigger"
            break
        records.append(_record(iter_offset + t, x, state, level, "step", oracle, instance, proj.kkt_residual, None))
    chain = _chain_pairs(state, t) if t > 0 else []
    res = GapReductionResult(state.xbar, state.fbar, state.funder, records, t, termination, delta0, state, chain, samples=state.samples)
    res.dp_ratio = _chain_ratio(state, chain, t, mu)
    res.dp_bound = float(math.ceil(3.0 * res.dp_ratio)) if math.isfinite(res.dp_ratio) else math.inf
    return res


def _record(it, x, state, level, event, oracle, instance, kkt, reason):
    dist = instance.dist_to_solution(x) if instance is not None else None
    piece = state.samples[-1].piece if state.samples else None
    extra = {"fbar": state.fbar, "funder": state.funder, "S_r": state.S_r[-1]}
    if reason:
        extra["reason"] = reason
    fx = state.samples[-1].fx
    return TraceRecord(it, x.copy(), fx, dist, level, piece, kkt, event, oracle.calls, extra)


@dataclass
class BLMuResult:
    x: np.ndarray
    fbar: float
    funder: float
    trace: Trace
    outer_iterations: int
    delta0: float
    calls: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.x, self.fbar, self.funder, self.trace))


def bl_mu(instance, x0, mu, m, eps, perturbation_radius=0.0, seed=0, tol=1e-10, max_outer=10000, oracle=None):
    """Bundle-level method for a known growth modulus ``mu``.

    Repeats Gap Reduction from the incumbent until the certified gap is at
    most ``eps``.
    """
    if not (mu > 0 and eps > 0):
        raise ValueError("mu and eps must be positive")
    if oracle is None:
        oracle = Oracle(instance, perturbation_radius, seed)
    x = np.array(x0, dtype=float)
    s0 = oracle(x)
    fbar = s0.fx
    funder = initial_lower_bound(s0.fx, s0.cut.gradient, mu)
    trace = Trace(meta={"algorithm": "bl_mu", "mu": mu, "m": m, "eps": eps})
    trace.append(TraceRecord(0, x.copy(), fbar, instance.dist_to_solution(x) if instance else None, None, s0.piece, 0.0, "step", oracle.calls, {"fbar": fbar, "funder": funder}), s0)
    delta0 = fbar - funder
    calls = []
    it = 0
    sample = s0
    while fbar - funder > eps:
        if len(calls) >= max_outer:
            raise RuntimeError(f"bl_mu exceeded {max_outer} gap reductions")
        res = gap_reduction(mu, x, fbar, funder, m, oracle, instance.region, tol, sample0=sample, iter_offset=it, instance=instance)
        calls.append(res)
        for rec, smp in zip(res.trace, res.samples[1:] + [None] * len(res.trace)):
            trace.append(rec, smp)
        it += max(res.inner_iterations, 1)
        x, fbar, funder = res.x, res.fbar, res.funder
        sample = next(s for s in res.samples if np.array_equal(s.x, x))
    trace.oracle_calls = oracle.calls
    return BLMuResult(x, fbar, funder, trace, len(calls), delta0, calls)
