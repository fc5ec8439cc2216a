"""First-order oracles and test problems with known ground truth.

Every generated instance is a pointwise maximum of quadratics
``q_i(x) = 0.5 x'H_i x + b_i'x + c_i``; its pieces are the argmax regions,
with ties assigned to the lowest index. Piece labels are 1-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import FeasibleRegion

__all__ = [
    "BudgetExhausted",
    "Cut",
    "DomainError",
    "GroundTruth",
    "Oracle",
    "OracleSample",
    "ProblemInstance",
    "UnsupportedError",
    "abs_1d",
    "build_instance",
    "delta_for_radius",
    "demo_pws",
    "evaluate",
    "instance_from_json",
    "instance_to_json",
    "make_max_of_quadratics",
    "make_weakly_convex_max",
    "piece_label",
    "query_rng",
    "radius_for_delta",
    "sample_ball",
    "square_1d",
    "zero_function",
]


class DomainError(ValueError):
    """A query point lies outside the feasible region."""


class UnsupportedError(RuntimeError):
    """The instance does not expose the requested structure."""


class BudgetExhausted(RuntimeError):
    """The oracle-call budget ran out; ``best`` carries the best-so-far state."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


# ---------------------------------------------------------------------------
# Oracle data
# ---------------------------------------------------------------------------


@dataclass
class Cut:
    """Affine minorant ``value + gradient @ (x - center)``."""

    center: np.ndarray
    value: float
    gradient: np.ndarray
    birth: int = 0
    piece: int | None = None

    def support(self, x):
        return float(self.value + np.dot(self.gradient, np.asarray(x, dtype=float) - self.center))

    def support_many(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.value + (X - self.center) @ self.gradient

    def to_json(self):
        return {
            "center": [float(v) for v in self.center],
            "value": float(self.value),
            "gradient": [float(v) for v in self.gradient],
            "birth": int(self.birth),
            "piece": self.piece,
        }

    @staticmethod
    def from_json(d):
        return Cut(np.array(d["center"], float), float(d["value"]), np.array(d["gradient"], float), int(d.get("birth", 0)), d.get("piece"))


@dataclass
class OracleSample:
    """Exact value at ``x`` plus a (possibly perturbed) cut."""

    x: np.ndarray
    fx: float
    cut: Cut
    perturbation_radius: float = 0.0
    piece: int | None = None
    base: OracleSample | None = None  # underlying sample when this one is transformed

    def to_json(self):
        out = {
            "x": [float(v) for v in self.x],
            "fx": float(self.fx),
            "cut": self.cut.to_json(),
            "perturbation_radius": float(self.perturbation_radius),
            "piece": self.piece,
        }
        if self.base is not None:
            out["base"] = self.base.to_json()
        return out

    @staticmethod
    def from_json(d):
        base = OracleSample.from_json(d["base"]) if d.get("base") else None
        return OracleSample(np.array(d["x"], float), float(d["fx"]), Cut.from_json(d["cut"]), float(d["perturbation_radius"]), d.get("piece"), base)


@dataclass
class GroundTruth:
    fstar: float | None = None
    xstar: np.ndarray | None = None
    mu: float | None = None
    L: float | None = None
    k: int | None = None
    rho: float = 0.0
    M: float | None = None
    M_radius: float | None = None  # M bounds the gradient norm on B(xstar, M_radius) or on the region
    f_lower: float | None = None
    strongly_convex: bool = False

    def to_json(self):
        out = {}
        for key, val in self.__dict__.items():
            if isinstance(val, np.ndarray):
                val = [float(v) for v in val]
            out[key] = val
        return out

    @staticmethod
    def from_json(d):
        d = dict(d)
        if d.get("xstar") is not None:
            d["xstar"] = np.array(d["xstar"], float)
        return GroundTruth(**d)


def query_rng(seed, index):
    """Counter-based generator keyed by ``(seed, index)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


def sample_ball(rng, n, radius):
    """Uniform sample from the centered Euclidean ball of given radius."""
    d = rng.standard_normal(n)
    nd = np.linalg.norm(d)
    while nd == 0.0:  # pragma: no cover - probability zero
        d = rng.standard_normal(n)
        nd = np.linalg.norm(d)
    return d * (radius * rng.random() ** (1.0 / n) / nd)


def radius_for_delta(delta, L):
    """Perturbation radius guaranteeing accuracy ``delta`` on an ``L``-smooth piece."""
    if delta <= 0 or L <= 0:
        raise ValueError("delta and L must be positive")
    return min(math.sqrt(delta / (8.0 * L)), delta / (4.0 * L))


def delta_for_radius(radius, L, M):
    """Additive inaccuracy ``2 M r + 4 L r^2`` induced by perturbation radius ``r``."""
    return 2.0 * M * radius + 4.0 * L * radius * radius


# ---------------------------------------------------------------------------
# Instances
# ---------------------------------------------------------------------------


@dataclass
class ProblemInstance:
    """A max-of-quadratics objective (or a black-box function) on a region."""

    name: str
    region: FeasibleRegion
    hess: np.ndarray | None = None
    lin: np.ndarray | None = None
    const: np.ndarray | None = None
    ground_truth: GroundTruth | None = None
    params: dict = field(default_factory=dict)
    func: object = None  # callable x -> (f, g) for black-box instances

    @property
    def n(self):
        return self.region.n

    @property
    def has_pieces(self):
        return self.hess is not None

    @property
    def num_pieces(self):
        return 0 if self.hess is None else self.hess.shape[0]

    def piece_values(self, x):
        if not self.has_pieces:
            raise UnsupportedError(f"instance {self.name!r} has no piece structure")
        x = np.asarray(x, dtype=float)
        return 0.5 * np.einsum("kij,i,j->k", self.hess, x, x) + self.lin @ x + self.const

    def value(self, x):
        if self.has_pieces:
            return float(np.max(self.piece_values(x)))
        return float(self.func(np.asarray(x, dtype=float))[0])

    def values(self, X):
        """Objective at each row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if not self.has_pieces:
            return np.array([self.value(x) for x in X])
        q = 0.5 * np.einsum("kij,pi,pj->pk", self.hess, X, X) + X @ self.lin.T + self.const
        return q.max(axis=1)

    def first_order(self, x):
        """``(f(x), g, piece)`` with ``g`` the gradient of the lowest-index maximal piece."""
        x = np.asarray(x, dtype=float)
        if not self.has_pieces:
            f, g = self.func(x)
            return float(f), np.asarray(g, dtype=float), None
        vals = self.piece_values(x)
        i = int(np.argmax(vals))
        return float(vals[i]), self.hess[i] @ x + self.lin[i], i + 1

    def piece_label(self, x):
        if not self.has_pieces:
            raise UnsupportedError(f"instance {self.name!r} has no piece structure")
        return int(np.argmax(self.piece_values(x))) + 1

    def dist_to_solution(self, x):
        gt = self.ground_truth
        if gt is None or gt.xstar is None:
            return None
        return float(np.linalg.norm(np.asarray(x, dtype=float) - gt.xstar))

    def with_region(self, region):
        return replace(self, region=region)

    def prox_surrogate_instance(self, center, rho):
        """The max-of-quadratics ``f + rho * ||x - center||^2`` (same pieces)."""
        if not self.has_pieces:
            raise UnsupportedError("surrogate instance needs piece structure")
        center = np.asarray(center, dtype=float)
        n = self.n
        return ProblemInstance(
            name=f"{self.name}+prox",
            region=self.region,
            hess=self.hess + 2.0 * rho * np.eye(n)[None, :, :],
            lin=self.lin - 2.0 * rho * center[None, :],
            const=self.const + rho * float(center @ center),
            params={"base": self.name, "rho": rho},
        )


def evaluate(instance, x, perturbation_radius=0.0, rng=None, check_domain=True):
    """Query the first-order oracle at ``x``.

    With a positive radius the cut is generated at a point drawn uniformly from
    the ball around ``x``; ``fx`` is always the exact value at ``x``.
    """
    x = np.array(x, dtype=float).ravel()
    if perturbation_radius < 0:
        raise ValueError("perturbation radius must be non-negative")
    if check_domain and not instance.region.contains(x):
        raise DomainError(f"point outside the feasible region of {instance.name!r}")
    fx, g, piece = instance.first_order(x)
    if perturbation_radius == 0:
        return OracleSample(x, fx, Cut(x, fx, g, 0, piece), 0.0, piece)
    if rng is None:
        rng = np.random.default_rng()
    xt = x + sample_ball(rng, x.size, perturbation_radius)
    ft, gt, pt = instance.first_order(xt)
    return OracleSample(x, fx, Cut(xt, ft, gt, 0, pt), float(perturbation_radius), pt)


def piece_label(instance, x):
    return instance.piece_label(x)


class Oracle:
    """Counting wrapper around :func:`evaluate` with per-query random keys."""

    def __init__(self, instance, perturbation_radius=0.0, seed=0, budget=None):
        self.instance = instance
        self.perturbation_radius = float(perturbation_radius)
        self.seed = int(seed)
        self.budget = budget
        self.calls = 0
        self.queries = 0

    @property
    def region(self):
        return self.instance.region

    def _charge(self):
        if self.budget is not None and self.calls >= self.budget:
            raise BudgetExhausted(f"oracle budget of {self.budget} calls exhausted")
        self.calls += 1

    def __call__(self, x):
        self._charge()
        rng = query_rng(self.seed, self.queries) if self.perturbation_radius > 0 else None
        s = evaluate(self.instance, x, self.perturbation_radius, rng)
        s.cut.birth = self.queries
        self.queries += 1
        return s

    def value(self, x):
        self._charge()
        return self.instance.value(x)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def _random_rotation(rng, n):
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def make_max_of_quadratics(k, n, L, mu, seed=0, m_radius=10.0):
    """Convex max of ``k`` quadratics with curvature in ``[mu, L]``.

    The minimizer is the origin with ``f* = 0``: a random subset of pieces is
    active there with gradients whose convex combination vanishes, the other
    pieces sit strictly below zero. Each piece is ``mu``-strongly convex, so
    ``f`` has quadratic growth with modulus ``mu``.
    """
    if k < 1 or n < 1 or not (L >= mu > 0):
        raise ValueError("need k >= 1, n >= 1 and L >= mu > 0")
    rng = np.random.default_rng(seed)
    active = 1 if k == 1 else int(rng.integers(2, min(k, n + 1) + 1))
    hess = np.empty((k, n, n))
    for i in range(k):
        eig = rng.uniform(mu, L, n)
        eig[0] = L
        eig[-1] = mu if n > 1 else L
        Q = _random_rotation(rng, n)
        hess[i] = (Q * eig) @ Q.T
        hess[i] = 0.5 * (hess[i] + hess[i].T)
    lin = np.zeros((k, n))
    const = np.zeros(k)
    if active > 1:
        v = rng.standard_normal((active, n))
        w = rng.dirichlet(np.ones(active))
        lin[:active] = v - w @ v
    for i in range(active, k):
        lin[i] = rng.standard_normal(n)
        const[i] = -rng.uniform(0.1, 1.0)
    M = float(np.max(np.linalg.norm(lin, axis=1)) + L * m_radius)
    gt = GroundTruth(fstar=0.0, xstar=np.zeros(n), mu=float(mu), L=float(L), k=int(k), rho=0.0, M=M, M_radius=float(m_radius), f_lower=0.0, strongly_convex=True)
    params = {"k": k, "n": n, "L": L, "mu": mu, "seed": seed}
    return ProblemInstance("max_of_quadratics", FeasibleRegion.whole_space(n), hess, lin, const, gt, params)


def make_weakly_convex_max(k, n, rho, seed=0, box_radius=2.0):
    """``max_i [c_i + g_i'x - (rho/2)||x - a_i||^2]`` on the box ``[-R, R]^n``.

    Each piece is concave with curvature exactly ``-rho``, so ``f`` is
    ``rho``-weakly convex and every piece is ``rho``-smooth.
    """
    if k < 1 or n < 1 or not rho > 0 or not box_radius > 0:
        raise ValueError("need k >= 1, n >= 1, rho > 0 and a positive box radius")
    rng = np.random.default_rng(seed)
    R = float(box_radius)
    c = 0.5 * rng.standard_normal(k)
    g = rng.standard_normal((k, n))
    a = rng.uniform(-R, R, (k, n))
    hess = np.repeat(-rho * np.eye(n)[None, :, :], k, axis=0)
    lin = g + rho * a
    const = c - 0.5 * rho * np.einsum("ki,ki->k", a, a)
    # Exact minimum of each concave separable piece over the box (at a vertex).
    piece_min = const + np.sum(np.minimum(lin * R - 0.5 * rho * R * R, -lin * R - 0.5 * rho * R * R), axis=1)
    f_lower = float(np.max(piece_min))
    M = float(np.max(np.linalg.norm(lin, axis=1)) + rho * R * math.sqrt(n))
    gt = GroundTruth(fstar=None, xstar=None, mu=None, L=float(rho), k=int(k), rho=float(rho), M=M, M_radius=None, f_lower=f_lower)
    params = {"k": k, "n": n, "rho": rho, "seed": seed, "box_radius": R}
    return ProblemInstance("weakly_convex_max", FeasibleRegion.box(-R * np.ones(n), R * np.ones(n)), hess, lin, const, gt, params)


def demo_pws(m_radius=1.0):
    """``||x||^2 + |x_1|`` in two dimensions; the line ``x_1 = 0`` belongs to piece 1."""
    hess = np.repeat(2.0 * np.eye(2)[None, :, :], 2, axis=0)
    lin = np.array([[-1.0, 0.0], [1.0, 0.0]])
    const = np.zeros(2)
    gt = GroundTruth(fstar=0.0, xstar=np.zeros(2), mu=2.0, L=2.0, k=2, rho=0.0, M=1.0 + 2.0 * m_radius, M_radius=float(m_radius), f_lower=0.0, strongly_convex=True)
    return ProblemInstance("demo_pws", FeasibleRegion.whole_space(2), hess, lin, const, gt, {"m_radius": m_radius})


def abs_1d():
    """``|x|`` with pieces ``(-inf, 0]`` and ``(0, inf)``."""
    hess = np.zeros((2, 1, 1))
    lin = np.array([[-1.0], [1.0]])
    gt = GroundTruth(fstar=0.0, xstar=np.zeros(1), mu=None, L=0.0, k=2, rho=0.0, M=1.0, f_lower=0.0)
    return ProblemInstance("abs", FeasibleRegion.whole_space(1), hess, lin, np.zeros(2), gt, {})


def square_1d():
    """``x^2``."""
    gt = GroundTruth(fstar=0.0, xstar=np.zeros(1), mu=2.0, L=2.0, k=1, rho=0.0, M=None, f_lower=0.0, strongly_convex=True)
    return ProblemInstance("square", FeasibleRegion.whole_space(1), 2.0 * np.ones((1, 1, 1)), np.zeros((1, 1)), np.zeros(1), gt, {})


def zero_function(n=1):
    gt = GroundTruth(fstar=0.0, xstar=np.zeros(n), mu=None, L=0.0, k=1, rho=0.0, M=0.0, f_lower=0.0)
    return ProblemInstance("zero", FeasibleRegion.whole_space(n), np.zeros((1, n, n)), np.zeros((1, n)), np.zeros(1), gt, {"n": n})


GENERATORS = {
    "max_of_quadratics": make_max_of_quadratics,
    "weakly_convex_max": make_weakly_convex_max,
    "demo_pws": demo_pws,
    "abs": abs_1d,
    "square": square_1d,
    "zero": zero_function,
}


def build_instance(name, params=None):
    if name not in GENERATORS:
        raise KeyError(f"unknown generator {name!r}; known: {sorted(GENERATORS)}")
    return GENERATORS[name](**(params or {}))


def instance_to_json(instance):
    if not instance.has_pieces:
        raise UnsupportedError("black-box instances cannot be serialized")
    return {
        "name": instance.name,
        "params": instance.params,
        "region": instance.region.to_json(),
        "hess": instance.hess.tolist(),
        "lin": instance.lin.tolist(),
        "const": instance.const.tolist(),
        "ground_truth": instance.ground_truth.to_json() if instance.ground_truth else None,
    }


def instance_from_json(d):
    """Rebuild an instance from :func:`instance_to_json` output or a generator spec."""
    if "hess" not in d:
        return build_instance(d.get("generator", d.get("name")), d.get("params"))
    gt = GroundTruth.from_json(d["ground_truth"]) if d.get("ground_truth") else None
    return ProblemInstance(
        d["name"],
        FeasibleRegion.from_json(d["region"]),
        np.array(d["hess"], float),
        np.array(d["lin"], float),
        np.array(d["const"], float),
        gt,
        d.get("params", {}),
    )
