"""Cut bundles, the bundle-level loop with a known optimal value, and
matching-pair diagnostics."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .geometry import project_onto_level_set
from .problems import Oracle, UnsupportedError

__all__ = [
    "Bundle",
    "LevelSetInfeasible",
    "MatchingStats",
    "Trace",
    "TraceRecord",
    "bridged_three_point_check",
    "detect_matching_pairs",
    "run_bl",
]


class LevelSetInfeasible(RuntimeError):
    """The level set became empty; ``trace`` holds the run so far."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class Bundle:
    """The ``capacity`` most recent cuts, oldest evicted first."""

    def __init__(self, capacity):
        if capacity < 1:
            raise ValueError("bundle capacity must be >= 1")
        self.capacity = int(capacity)
        self._cuts = deque(maxlen=self.capacity)

    def add(self, cut):
        if self._cuts and cut.birth <= self._cuts[-1].birth:
            raise ValueError("cut births must be strictly increasing")
        self._cuts.append(cut)

    def clear(self):
        self._cuts.clear()

    @property
    def cuts(self):
        return list(self._cuts)

    def __len__(self):
        return len(self._cuts)

    def __iter__(self):
        return iter(self._cuts)


@dataclass
class TraceRecord:
    iter: int
    x: np.ndarray
    fx: float
    dist_to_xstar: float | None = None
    level: float | None = None
    piece: int | None = None
    kkt_residual: float = 0.0
    event: str = "step"
    oracle_calls: int = 0
    extra: dict = field(default_factory=dict)

    def to_json(self):
        out = {
            "iter": self.iter,
            "x": [float(v) for v in self.x],
            "fx": float(self.fx),
            "dist_to_xstar": self.dist_to_xstar,
            "level": self.level,
            "piece": self.piece,
            "kkt_residual": float(self.kkt_residual),
            "event": self.event,
            "oracle_calls": self.oracle_calls,
        }
        if self.extra:
            out["extra"] = self.extra
        return out


@dataclass
class Trace:
    """Iterates of a run; ``samples[i]`` is the oracle sample behind ``records[i]``."""

    records: list = field(default_factory=list)
    samples: list = field(default_factory=list)
    oracle_calls: int = 0
    meta: dict = field(default_factory=dict)

    def append(self, record, sample=None):
        if self.records and record.iter < self.records[-1].iter:
            raise ValueError("trace iterations must not decrease")
        self.records.append(record)
        self.samples.append(sample)

    @property
    def xs(self):
        return np.array([r.x for r in self.records])

    @property
    def fvals(self):
        return np.array([r.fx for r in self.records])

    @property
    def pieces(self):
        return [r.piece for r in self.records]

    def __len__(self):
        return len(self.records)


def run_bl(instance, m, fstar, x0, perturbation_radius=0.0, max_iters=1000, stop_tol=0.0, seed=0, tol=1e-10, oracle=None):
    """Bundle-level method with known optimal value ``fstar``.

    Each step projects the current iterate onto the level set of the ``m``
    most recent cuts at height ``fstar``. With a positive perturbation radius
    the cuts come from randomly perturbed points.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if not math.isfinite(fstar):
        raise ValueError("fstar must be finite")
    if oracle is None:
        oracle = Oracle(instance, perturbation_radius, seed)
    region = instance.region
    x = np.array(x0, dtype=float)
    bundle = Bundle(m)
    trace = Trace(meta={"algorithm": "bl" if perturbation_radius == 0 else "apx_bl", "m": m, "fstar": fstar, "perturbation_radius": perturbation_radius})
    kkt = 0.0
    for t in range(max_iters + 1):
        s = oracle(x)
        rec = TraceRecord(t, x.copy(), s.fx, instance.dist_to_solution(x), fstar, s.piece, kkt, "step", oracle.calls)
        trace.append(rec, s)
        trace.oracle_calls = oracle.calls
        if s.fx - fstar <= stop_tol or t == max_iters:
            break
        bundle.add(s.cut)
        proj = project_onto_level_set(x, bundle.cuts, fstar, region, tol)
        if not proj.feasible:
            raise LevelSetInfeasible(f"level set empty at iteration {t}", trace)
        x = proj.point
        kkt = proj.kkt_residual
    return trace


@dataclass
class MatchingStats:
    pairs: list
    p: int
    kappa_bar: float
    sigma_bar: float
    L_bar: float | None
    N: int
    l: int
    max_separation: int = 0

    @property
    def within_bundle(self):
        """Every pair has ``r - l <= l_max`` (the stricter of the two conventions)."""
        return self.max_separation <= self.l

    def to_json(self):
        return {
            "pairs": [list(p) for p in self.pairs],
            "p": self.p,
            "kappa_bar": self.kappa_bar,
            "sigma_bar": self.sigma_bar,
            "L_bar": self.L_bar,
            "N": self.N,
            "l": self.l,
            "max_separation": self.max_separation,
            "within_l_plus_one": self.max_separation <= self.l + 1,
        }


def detect_matching_pairs(trace, piece_labels=None, l=1, N=None, slack=None):
    """Greedy non-overlapping ``l``-matching pairs and their statistics.

    Scans ``r = 1..N`` and closes a pair with the nearest earlier index
    ``>= previous r`` within distance ``l`` sharing the piece of ``r``. When
    ``slack`` is given and the trace carries samples, the harmonic average of
    the pairs' empirical smoothness is reported as ``L_bar``.
    """
    if piece_labels is None:
        if not isinstance(trace, Trace):
            piece_labels, trace = list(trace), None
        else:
            piece_labels = trace.pieces
    labels = list(piece_labels)
    if any(lab is None for lab in labels):
        raise UnsupportedError("piece labels are required for matching-pair detection")
    if l < 1:
        raise ValueError("l must be >= 1")
    if N is None:
        N = len(labels) - 1
    pairs = []
    floor = 0
    for r in range(1, N + 1):
        for q in range(r - 1, max(floor, r - l) - 1, -1):
            if labels[q] == labels[r]:
                pairs.append((q, r))
                floor = r
                break
    p = len(pairs)
    inv = sum(1.0 / (r - q) for q, r in pairs)
    kappa = N / p if p else math.inf
    sigma = p / inv if p else math.inf
    L_bar = None
    if slack is not None and isinstance(trace, Trace) and p:
        from .gapred import empirical_smoothness

        den = 0.0
        for q, r in pairs:
            Lt = empirical_smoothness(trace.samples[r], trace.samples[q], slack)
            den = math.inf if Lt == 0 else den + 1.0 / ((r - q) * Lt)
        L_bar = 0.0 if math.isinf(den) else inv / den
    sep = max((r - q for q, r in pairs), default=0)
    return MatchingStats(pairs, p, kappa, sigma, L_bar, N, l, sep)


def bridged_three_point_check(trace, xstar, j_max):
    """Largest value of ``|x^{t+j}-x*|^2 + |x^{t+j}-x^t|^2 / j - |x^t-x*|^2``."""
    X = trace.xs if isinstance(trace, Trace) else np.asarray(trace, dtype=float)
    X = X.reshape(len(X), -1)
    xstar = np.asarray(xstar, dtype=float)
    d2 = np.sum((X - xstar) ** 2, axis=1)
    worst = -math.inf
    for j in range(1, j_max + 1):
        if j >= len(X):
            break
        step = np.sum((X[j:] - X[:-j]) ** 2, axis=1)
        v = d2[j:] + step / j - d2[:-j]
        worst = max(worst, float(np.max(v)))
    return worst
