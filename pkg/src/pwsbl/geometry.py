"""Feasible regions, level-set projections and the min-max of affine models.

The projection onto ``{x : A x <= b}`` is solved through its dual with a
coordinate-ascent pass (compiled kernel), followed by an equality-constrained
polish on the detected active set. If the polish does not certify the KKT
conditions, the least-distance form of the problem is solved exactly by
non-negative least squares, which also yields Farkas certificates for empty
polyhedra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, nnls

from . import kernels

__all__ = [
    "FeasibleRegion",
    "LevelProjectionResult",
    "MinMaxResult",
    "PolyProjection",
    "SolverError",
    "cut_arrays",
    "eval_wgap",
    "min_max_affine",
    "min_norm_hull",
    "project_onto_level_set",
    "project_polyhedron",
    "project_region",
    "solve_min_max_affine",
    "wgap_details",
]

# Relative threshold on the least-distance residual below which a polyhedron
# is declared empty: the implied projection distance exceeds 1e6 times the
# problem's own scale.
INFEASIBLE_RATIO = 1e6


class SolverError(RuntimeError):
    """A numerical subproblem failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


# ---------------------------------------------------------------------------
# Regions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeasibleRegion:
    """A simple closed convex set: the whole space, a box or a ball."""

    kind: str
    n: int
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    center: np.ndarray | None = None
    radius: float | None = None

    @staticmethod
    def whole_space(n):
        if n < 1:
            raise ValueError("dimension must be >= 1")
        return FeasibleRegion("whole_space", int(n))

    @staticmethod
    def box(lo, hi):
        lo = np.asarray(lo, dtype=float).ravel()
        hi = np.asarray(hi, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise ValueError("box bounds must have equal length")
        if np.any(lo > hi) or np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ValueError("box requires lo <= hi componentwise")
        return FeasibleRegion("box", lo.size, lo=lo, hi=hi)

    @staticmethod
    def ball(center, radius):
        center = np.asarray(center, dtype=float).ravel()
        if not radius > 0:
            raise ValueError("ball radius must be positive")
        return FeasibleRegion("ball", center.size, center=center, radius=float(radius))

    @property
    def bounded(self):
        if self.kind == "ball":
            return True
        if self.kind == "box":
            return bool(np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi)))
        return False

    def contains(self, x, tol=1e-9):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,) or not np.all(np.isfinite(x)):
            return False
        if self.kind == "whole_space":
            return True
        if self.kind == "box":
            scale = 1.0 + np.maximum(np.abs(self.lo), np.abs(self.hi))
            scale = np.where(np.isfinite(scale), scale, 1.0)
            return bool(np.all(x >= self.lo - tol * scale) and np.all(x <= self.hi + tol * scale))
        return bool(np.linalg.norm(x - self.center) <= self.radius * (1.0 + tol) + tol)

    def project(self, y):
        return project_region(self, y)

    def linear_rows(self):
        """Rows ``(A, b)`` with ``A x <= b`` describing a box; empty otherwise."""
        if self.kind != "box":
            return np.zeros((0, self.n)), np.zeros(0)
        rows, rhs = [], []
        eye = np.eye(self.n)
        for j in range(self.n):
            if np.isfinite(self.hi[j]):
                rows.append(eye[j])
                rhs.append(self.hi[j])
            if np.isfinite(self.lo[j]):
                rows.append(-eye[j])
                rhs.append(-self.lo[j])
        if not rows:
            return np.zeros((0, self.n)), np.zeros(0)
        return np.array(rows), np.array(rhs)

    def to_json(self):
        out = {"kind": self.kind, "n": self.n}
        if self.kind == "box":
            out["lo"] = [float(v) for v in self.lo]
            out["hi"] = [float(v) for v in self.hi]
        elif self.kind == "ball":
            out["center"] = [float(v) for v in self.center]
            out["radius"] = self.radius
        return out

    @staticmethod
    def from_json(data):
        kind = data["kind"]
        if kind == "whole_space":
            return FeasibleRegion.whole_space(data["n"])
        if kind == "box":
            return FeasibleRegion.box(data["lo"], data["hi"])
        if kind == "ball":
            return FeasibleRegion.ball(data["center"], data["radius"])
        raise ValueError(f"unknown region kind {kind!r}")


def project_region(region, y):
    """Euclidean projection onto a simple region."""
    y = np.asarray(y, dtype=float)
    if region.kind == "whole_space":
        return y.copy()
    if region.kind == "box":
        return np.clip(y, region.lo, region.hi)
    d = y - region.center
    nd = np.linalg.norm(d)
    if nd <= region.radius:
        return y.copy()
    return region.center + d * (region.radius / nd)


# ---------------------------------------------------------------------------
# Polyhedral projection
# ---------------------------------------------------------------------------


@dataclass
class PolyProjection:
    feasible: bool
    x: np.ndarray | None
    multipliers: np.ndarray
    kkt_residual: float
    certificate: np.ndarray | None = None
    method: str = ""


def _equality_polish(An, hs, active, rcond=None):
    """Projection of 0 onto ``{z : An_S z = -hs_S}`` and its multipliers."""
    m, n = An.shape
    lam = np.zeros(m)
    if not np.any(active):
        return np.zeros(n), lam
    AS = An[active]
    # One SVD serves both pseudo-inverse solves; the cutoff matches lstsq.
    U, sv, Vt = np.linalg.svd(AS, full_matrices=False)
    if rcond is None:
        rcond = np.finfo(float).eps * max(AS.shape)
    keep = sv > rcond * sv[0] if sv.size else sv.astype(bool)
    U, sv, Vt = U[:, keep], sv[keep], Vt[keep]
    z = -(Vt.T @ ((U.T @ hs[active]) / sv))
    lam[active] = -(U @ ((Vt @ z) / sv))
    return z, lam


def _polish(An, hs, active):
    """Equality polish; retries without singular-value truncation, which
    matters when two active cuts are nearly antiparallel."""
    z, lam = _equality_polish(An, hs, active)
    res = _kkt(An, hs, z, lam)
    if res > 1e-12:
        z2, lam2 = _equality_polish(An, hs, active, rcond=1e-300)
        res2 = _kkt(An, hs, z2, lam2)
        if res2 < res:
            return z2, lam2, res2
    return z, lam, res


def _kkt(An, hs, z, lam):
    """Scaled KKT residual; dual quantities are relative to the multiplier mass,
    which can be huge when nearly antiparallel cuts meet."""
    slack = An @ z + hs
    lam_mass = max(1.0, float(np.sum(np.abs(lam))))
    viol = max(float(np.max(slack)), 0.0) if slack.size else 0.0
    neg = max(float(-np.min(lam)), 0.0) / lam_mass if lam.size else 0.0
    comp = float(np.max(np.abs(lam * slack))) / lam_mass if lam.size else 0.0
    stat = float(np.linalg.norm(z + An.T @ lam)) / max(lam_mass, float(np.linalg.norm(z)))
    return max(viol, neg, comp, stat)


def _lp_interior_point(An, bn):
    """Point maximizing the smallest slack of ``An x <= bn`` (rows normalized),
    or ``None`` when no point with non-negative verified slack is found."""
    m, n = An.shape
    cap = max(1.0, float(np.max(np.abs(bn))))
    res = linprog(
        np.r_[np.zeros(n), -1.0],
        A_ub=np.c_[An, np.ones(m)],
        b_ub=bn,
        bounds=[(None, None)] * n + [(None, cap)],
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        return None
    x = res.x[:n]
    if np.max(An @ x - bn) > 0.0:
        return None
    return x


def _active_set_fallback(An, bn, y, s, max_iter=None):
    """Primal active-set projection of ``y`` onto ``{An x <= bn}``.

    Starts from a verified feasible point, so every iterate is feasible up to
    rounding; nearly parallel working rows are handled by least squares.
    Returns ``(z, lam)`` in the units of the largest violation ``s`` or
    ``None`` if the polyhedron has no verified feasible point.
    """
    x = _lp_interior_point(An, bn)
    if x is None:
        return None
    m, n = An.shape
    if max_iter is None:
        max_iter = 20 * (m + n) + 50
    W = []
    mu = np.zeros(0)
    scale = 1.0 + float(np.linalg.norm(y))
    for _ in range(max_iter):
        if W:
            AW = An[W]
            d = np.linalg.lstsq(AW, AW @ y - bn[W], rcond=None)[0]
            xs = y - d
            mu = np.linalg.lstsq(AW.T, d, rcond=None)[0]
        else:
            xs, mu = y.copy(), np.zeros(0)
        p = xs - x
        if np.linalg.norm(p) <= 1e-15 * scale:
            if not W or float(np.min(mu)) >= -1e-12 * max(1.0, float(np.max(np.abs(mu)))):
                break
            W.pop(int(np.argmin(mu)))
            continue
        Ap = An @ p
        slack = np.maximum(bn - An @ x, 0.0)
        alpha, block = 1.0, None
        for i in np.flatnonzero(Ap > 0.0):
            if i in W:
                continue
            a = slack[i] / Ap[i]
            if a < alpha:
                alpha, block = a, int(i)
        x = x + alpha * p
        if block is not None:
            W.append(block)
    else:
        return None
    lam = np.zeros(m)
    if W:
        lam[W] = np.maximum(mu, 0.0)
    return (x - y) / s, lam / s


def project_polyhedron(y, A, b, tol=1e-10, max_sweeps=None):
    """Project ``y`` onto ``{x : A x <= b}``.

    Returns a :class:`PolyProjection`. Multipliers are in the units of the
    original rows, so ``x = y - A.T @ multipliers`` at optimality. When the
    set is empty, ``certificate`` holds ``u >= 0`` with ``A.T @ u ~ 0`` and
    ``b @ u < 0``.
    """
    y = np.asarray(y, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    m, n = A.shape
    if m == 0:
        return PolyProjection(True, y.copy(), np.zeros(0), 0.0, method="empty")
    norms = np.linalg.norm(A, axis=1)
    zero = norms == 0.0
    if np.any(zero & (b < 0.0)):
        cert = np.zeros(m)
        cert[int(np.argmax(zero & (b < 0.0)))] = 1.0
        return PolyProjection(False, None, np.zeros(m), np.inf, cert, "trivial")
    keep = ~zero
    An = A[keep] / norms[keep, None]
    bn = b[keep] / norms[keep]
    h = An @ y - bn
    hmax = float(np.max(h))
    # Rounding floor of each row's residual; anything below it is noise.
    noise = 8.0 * np.finfo(float).eps * (np.abs(An) @ np.abs(y) + np.abs(bn))
    if np.all(h <= noise):
        return PolyProjection(True, y.copy(), np.zeros(m), 0.0, method="interior")

    # Work in units of the largest violation so that all data are O(1).
    s = hmax
    hs = h / s
    mk = An.shape[0]
    G = An @ An.T
    if max_sweeps is None:
        max_sweeps = min(50 * mk * mk, 2000)
    # The sweeps only need to find the active set; the equality polish
    # supplies the solution and its KKT residual decides acceptance. A short
    # first pass settles most well-conditioned cases.
    lam, sweeps = None, 0
    for budget in (min(60, max_sweeps), max_sweeps - min(60, max_sweeps)):
        if budget <= 0:
            break
        lam, used, kkt = kernels.hildreth(G, hs, lam0=lam, max_sweeps=budget, tol=1e-13)
        sweeps += used
        thr = 1e-12 * max(1.0, float(np.max(lam)))
        z, lam_p, res = _polish(An, hs, lam > thr)
        if (np.isfinite(res) and res <= tol) or kkt <= 1e-13:
            break
    method = "hildreth"
    if not np.isfinite(res) or res > tol:
        # Exact least-distance program: min ||E u - e|| over u >= 0 with
        # E = [-An^T ; hs^T]; a zero residual proves the polyhedron empty.
        E = np.vstack([-An.T, hs[None, :]])
        f = np.zeros(n + 1)
        f[-1] = 1.0
        u, _ = nnls(E, f, maxiter=50 * (mk + n + 1))
        r = E @ u - f
        rho2 = float(r @ r)
        active = u > 1e-14 * max(1.0, float(np.max(u)))
        z2, lam2, res2 = _polish(An, hs, active)
        z, lam_p, res = z2, lam2, res2
        if r[n] < 0.0:
            z_ldp = -r[:n] / r[n]
            lam_ldp = u / (-r[n])
            res3 = _kkt(An, hs, z_ldp, lam_ldp)
            if res3 < res2:
                z, lam_p, res = z_ldp, lam_ldp, res3
        method = "ldp"
        # The implied projection distance is sqrt((1 - rho2) / rho2) in units
        # of the largest violation; compare it with the problem's own scale.
        ratio = INFEASIBLE_RATIO * max(1.0, (float(np.linalg.norm(y)) + float(np.max(np.abs(bn)))) / s)
        if res > max(1e3 * tol, 1e-8) and rho2 <= 1.0 / (1.0 + ratio**2):
            cert = np.zeros(m)
            cert[keep] = u / norms[keep]
            return PolyProjection(False, None, np.zeros(m), float(np.linalg.norm(An.T @ u)), cert, "ldp")
        # x = y + s z carries absolute rounding ~eps (|y| + |x - y|), which
        # bounds the attainable residual in units of s.
        data = (float(np.linalg.norm(y)) + float(np.max(np.abs(bn)))) / s

        def accept(zc):
            return max(1e3 * tol, 1e-7, 64.0 * np.finfo(float).eps * (data + float(np.linalg.norm(zc))))

        if res > accept(z):
            fb = _active_set_fallback(An, bn, y, s)
            if fb is None:
                cert = np.zeros(m)
                cert[keep] = u / norms[keep]
                return PolyProjection(False, None, np.zeros(m), float(np.linalg.norm(An.T @ u)), cert, "lp")
            res_fb = _kkt(An, hs, *fb)
            if res_fb < res:
                (z, lam_p), res = fb, res_fb
                method = "active_set"
        if res > accept(z):
            raise SolverError(f"level projection did not converge (kkt={res:.3e})", res)
    lam_p = np.maximum(lam_p, 0.0)
    x = y + s * z
    mult = np.zeros(m)
    mult[keep] = s * lam_p / norms[keep]
    return PolyProjection(True, x, mult, res, method=f"{method}:{sweeps}")


def _ball_poly_projection(y, A, b, center, radius, tol):
    """Project ``y`` onto ``{A x <= b} ∩ B(center, radius)``.

    The ball multiplier ``theta`` enters through the shifted target
    ``(y + theta * center) / (1 + theta)``; the distance of the resulting
    projection to the center is non-increasing in ``theta`` so a bisection on
    ``t = theta / (1 + theta)`` recovers it.
    """
    y = np.asarray(y, dtype=float)
    center = np.asarray(center, dtype=float)
    p0 = project_polyhedron(y, A, b, tol)
    if not p0.feasible:
        return p0, 0.0
    if np.linalg.norm(p0.x - center) <= radius:
        return p0, 0.0
    pc = project_polyhedron(center, A, b, tol)
    if not pc.feasible:
        return pc, np.inf
    if np.linalg.norm(pc.x - center) > radius * (1.0 + 1e-12):
        return PolyProjection(False, None, np.zeros(len(b)), np.inf, None, "ball-empty"), np.inf
    lo_t, hi_t = 0.0, 1.0
    best = pc
    for _ in range(200):
        mid = 0.5 * (lo_t + hi_t)
        p = project_polyhedron((1.0 - mid) * y + mid * center, A, b, tol)
        if np.linalg.norm(p.x - center) <= radius:
            hi_t, best = mid, p
        else:
            lo_t = mid
        if hi_t - lo_t <= 1e-15:
            break
    theta = hi_t / (1.0 - hi_t) if hi_t < 1.0 else np.inf
    # Rescale the multipliers to the original (unshifted) objective.
    best.multipliers = best.multipliers * (1.0 + theta) if np.isfinite(theta) else best.multipliers
    return best, theta


# ---------------------------------------------------------------------------
# Level sets of bundled cuts
# ---------------------------------------------------------------------------


def cut_arrays(cuts):
    """Stack cuts as ``(G, alpha)`` so that ``support_i(x) = alpha_i + G_i @ x``."""
    cuts = list(cuts)
    if not cuts:
        raise ValueError("at least one cut is required")
    G = np.array([np.asarray(c.gradient, dtype=float) for c in cuts])
    alpha = np.array([float(c.value) - float(np.dot(c.gradient, c.center)) for c in cuts])
    return G, alpha


@dataclass
class LevelProjectionResult:
    feasible: bool
    point: np.ndarray | None
    multipliers: np.ndarray
    kkt_residual: float
    certificate: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    @property
    def status(self):
        return "feasible" if self.feasible else "infeasible"


def project_onto_level_set(y, cuts, level, region, tol=1e-10):
    """Project ``y`` onto ``{x in region : support_i(x) <= level for every cut}``."""
    G, alpha = cut_arrays(cuts)
    k = G.shape[0]
    A = G
    b = level - alpha
    Ar, br = region.linear_rows()
    if Ar.shape[0]:
        A = np.vstack([G, Ar])
        b = np.concatenate([b, br])
    if region.kind == "ball":
        proj, theta = _ball_poly_projection(y, A, b, region.center, region.radius, tol)
    else:
        proj, theta = project_polyhedron(y, A, b, tol), 0.0
    if not proj.feasible:
        cert = proj.certificate[:k] if proj.certificate is not None else None
        return LevelProjectionResult(False, None, np.zeros(k), proj.kkt_residual, cert, {"method": proj.method})
    return LevelProjectionResult(
        True,
        proj.x,
        proj.multipliers[:k],
        proj.kkt_residual,
        None,
        {"method": proj.method, "region_multipliers": proj.multipliers[k:], "ball_multiplier": theta},
    )


# ---------------------------------------------------------------------------
# Min-max of affine functions
# ---------------------------------------------------------------------------


@dataclass
class MinMaxResult:
    """Outcome of ``min_x max_i support_i(x)``.

    ``value`` is a certified lower bound computed from the dual weights
    ``lam``; ``upper`` is the model value at the primal point ``x``.
    """

    value: float
    upper: float
    x: np.ndarray | None
    lam: np.ndarray | None
    unbounded: bool = False


def _min_linear_box_ball(s, lo, hi, c, r):
    """Lower bound and minimizer of ``s @ x`` over box ∩ ball (dual search)."""
    x0 = np.where(s > 0, lo, np.where(s < 0, hi, np.clip(c, lo, hi)))
    if np.linalg.norm(x0 - c) <= r:
        return float(s @ x0), x0
    if not np.any(s):
        x = np.clip(c, lo, hi)
        return float(s @ x), x

    def x_of(eta):
        return np.clip(c - s / eta, lo, hi)

    def dual(eta):
        x = x_of(eta)
        return float(s @ x + 0.5 * eta * (np.dot(x - c, x - c) - r * r)), x

    lo_e, hi_e = 1e-300, max(1.0, float(np.linalg.norm(s)) / r)
    while np.linalg.norm(x_of(hi_e) - c) > r:
        hi_e *= 2.0
    lo_e = hi_e / 2.0
    while lo_e > 1e-300 and np.linalg.norm(x_of(lo_e) - c) <= r:
        lo_e /= 2.0
    for _ in range(200):
        mid = math.sqrt(lo_e * hi_e) if lo_e > 0 else 0.5 * hi_e
        if np.linalg.norm(x_of(mid) - c) > r:
            lo_e = mid
        else:
            hi_e = mid
        if hi_e - lo_e <= 1e-15 * hi_e:
            break
    val, _ = dual(hi_e)
    return val, x_of(hi_e)


def _inner_min(s, region, ball):
    """``min s @ x`` over region (∩ ball); returns ``-inf`` when unbounded."""
    if ball is None:
        if region.kind == "whole_space":
            return (0.0 if not np.any(s) else -np.inf), None
        if region.kind == "box":
            lo, hi = region.lo, region.hi
            tot = 0.0
            for sj, l, h in zip(s, lo, hi):
                if sj > 0:
                    tot += sj * l
                elif sj < 0:
                    tot += sj * h
            return (tot if np.isfinite(tot) else -np.inf), None
        c, r = region.center, region.radius
        return float(s @ c - r * np.linalg.norm(s)), None
    c, r = ball
    if region.kind == "whole_space":
        return float(s @ c - r * np.linalg.norm(s)), None
    if region.kind == "box":
        return _min_linear_box_ball(s, region.lo, region.hi, c, r)
    raise NotImplementedError("intersection of two balls is not supported")


def _dual_value(lam, G, alpha, region, ball):
    s = G.T @ lam
    inner, _ = _inner_min(s, region, ball)
    return float(lam @ alpha + inner)


def _clean_simplex(lam):
    lam = np.maximum(np.asarray(lam, dtype=float), 0.0)
    tot = lam.sum()
    return lam / tot if tot > 0 else None


def _polish_zero_gradient(G, lam):
    """Refine simplex weights so that ``G.T @ lam`` vanishes on their support."""
    S = lam > 1e-10 * max(1.0, float(np.max(lam)))
    if not np.any(S):
        return None
    GS = G[S]
    M = np.vstack([GS.T, np.ones((1, GS.shape[0]))])
    rhs = np.zeros(M.shape[0])
    rhs[-1] = 1.0
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    if np.min(sol) < -1e-12:
        return None
    out = np.zeros_like(lam)
    out[S] = np.maximum(sol, 0.0)
    out /= out.sum()
    gscale = max(1.0, float(np.max(np.linalg.norm(G, axis=1))))
    if np.linalg.norm(G.T @ out) > 1e-11 * gscale:
        return None
    return out


def min_norm_hull(G, threshold=None):
    """Simplex weights ``lam`` minimizing ``||G.T @ lam||``; returns ``(lam, norm)``.

    Frank-Wolfe gives a fast estimate; when it does not reach zero the
    support is identified by a non-negative least-squares solve with a
    heavily weighted sum-to-one row and then solved exactly. With
    ``threshold``, the refinement is skipped once the Frank-Wolfe dual
    bound proves the minimum norm exceeds it (the returned norm is then
    an upper estimate).
    """
    G = np.atleast_2d(np.asarray(G, dtype=float))
    m = G.shape[0]
    K = G @ G.T
    lam = None
    # A short first pass often settles a threshold query on its own.
    for budget in ((50, 1950) if threshold is not None else (2000,)):
        lam, _, _ = kernels.min_norm_simplex(K, lam0=lam, tol=1e-30, max_iter=budget)
        if threshold is not None:
            grad = K @ lam
            # ||G.T mu||^2 >= 2 mu.K lam - lam.K lam for every simplex mu.
            lower_sq = 2.0 * float(np.min(grad)) - float(lam @ grad)
            if lower_sq > threshold * threshold:
                return lam, float(np.linalg.norm(G.T @ lam))
    nrm = float(np.linalg.norm(G.T @ lam))
    gscale = max(float(np.max(np.linalg.norm(G, axis=1))), 1e-300)
    if nrm <= 1e-13 * gscale or m == 1:
        return lam, nrm
    w = 1e3 * gscale
    E = np.vstack([G.T, w * np.ones((1, m))])
    f = np.zeros(E.shape[0])
    f[-1] = w
    u, _ = nnls(E, f, maxiter=50 * (m + G.shape[1] + 1))
    if u.sum() <= 0:
        return lam, nrm
    S = u > 1e-12 * float(np.max(u))
    KS = K[np.ix_(S, S)]
    k = int(S.sum())
    M = np.zeros((k + 1, k + 1))
    M[:k, :k] = KS
    M[:k, k] = 1.0
    M[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol = np.linalg.lstsq(M, rhs, rcond=None)[0][:k]
    cands = [u / u.sum()]
    if np.min(sol) >= 0.0:
        full = np.zeros(m)
        full[S] = sol
        cands.append(full / full.sum())
    for c in cands:
        cn = float(np.linalg.norm(G.T @ c))
        if cn < nrm:
            lam, nrm = c, cn
    return lam, nrm


def _min_max_polyhedral(G, alpha, region, tol):
    m, n = G.shape
    gscale = float(np.max(np.linalg.norm(G, axis=1))) if m else 0.0
    if region.kind == "whole_space":
        cutoff = max(tol, 1e-9) * max(gscale, 1e-300)
        lam_mn, nrm = min_norm_hull(G, threshold=cutoff)
        if nrm > cutoff:
            return MinMaxResult(-np.inf, -np.inf, None, lam_mn, True)
        bounds = [(None, None)] * (n + 1)
    else:
        bounds = [(None if not np.isfinite(l) else l, None if not np.isfinite(h) else h) for l, h in zip(region.lo, region.hi)]
        bounds.append((None, None))
    c = np.zeros(n + 1)
    c[-1] = 1.0
    A_ub = np.hstack([G, -np.ones((m, 1))])
    res = linprog(c, A_ub=A_ub, b_ub=-alpha, bounds=bounds, method="highs")
    row_scale = np.ones(m)
    if res.status not in (0, 3):
        # Cuts from far-away points can span many orders of magnitude;
        # normalized rows give HiGHS a second chance.
        row_scale = np.linalg.norm(A_ub, axis=1)
        res = linprog(c, A_ub=A_ub / row_scale[:, None], b_ub=-alpha / row_scale, bounds=bounds, method="highs")
    if res.status == 3:
        return MinMaxResult(-np.inf, -np.inf, None, None, True)
    if res.status != 0:
        raise SolverError(f"min-max LP failed: {res.message}")
    x = res.x[:n]
    if region.kind == "box":
        x = np.clip(x, region.lo, region.hi)
    upper = float(np.max(alpha + G @ x))
    lam = _clean_simplex(-res.ineqlin.marginals / row_scale)
    if lam is None:
        raise SolverError("min-max LP returned no dual weights")
    if region.kind == "whole_space":
        lam = _polish_zero_gradient(G, lam)
        if lam is None:
            return MinMaxResult(-np.inf, upper, x, None, True)
        lower = float(lam @ alpha)
    else:
        lower = _dual_value(lam, G, alpha, region, None)
        if not np.isfinite(lower):
            lower = float(res.fun)
    return MinMaxResult(min(lower, upper), upper, x, lam)


def _min_max_ball(G, alpha, region, center, radius, tol):
    m, n = G.shape
    center = np.asarray(center, dtype=float)
    vals_c = alpha + G @ center
    psi_c = float(np.max(vals_c))
    gnorm = np.linalg.norm(G, axis=1)
    t_lo = float(np.max(vals_c - radius * gnorm))
    t_hi = psi_c
    Ar, br = region.linear_rows()
    scale = 1.0 + abs(psi_c) + radius * float(np.max(gnorm))

    def feasible(t):
        A = np.vstack([G, Ar]) if Ar.shape[0] else G
        b = np.concatenate([t - alpha, br]) if Ar.shape[0] else t - alpha
        p = project_polyhedron(center, A, b, tol=tol)
        if not p.feasible:
            return False, p
        return bool(np.linalg.norm(p.x - center) <= radius), p

    ok, p_hi = feasible(t_hi)
    if not ok:
        raise SolverError("center is not feasible for its own model value")
    p_lo = None
    for _ in range(200):
        if t_hi - t_lo <= 1e-15 * scale:
            break
        mid = 0.5 * (t_lo + t_hi)
        ok, p = feasible(mid)
        if ok:
            t_hi, p_hi = mid, p
        else:
            t_lo, p_lo = mid, p
    x = p_hi.x
    upper = float(np.max(alpha + G @ x))

    candidates = []
    mu = p_hi.multipliers[:m]
    if mu.sum() > 0:
        candidates.append(mu / mu.sum())
    if p_lo is not None and p_lo.certificate is not None:
        u = _clean_simplex(p_lo.certificate[:m])
        if u is not None:
            candidates.append(u)
    # Weights from the minimum-norm combination of cuts active at the optimum.
    active = alpha + G @ x >= upper - 1e-9 * scale
    idx = np.flatnonzero(active)
    if idx.size:
        lam_a, _ = min_norm_hull(G[idx])
        full = np.zeros(m)
        full[idx] = lam_a
        candidates.append(full)
    best_lam, best_val = None, -np.inf
    for lam in candidates:
        val = _dual_value(lam, G, alpha, region, (center, radius))
        if val > best_val:
            best_lam, best_val = lam, val
    return MinMaxResult(min(best_val, upper), upper, x, best_lam)


def solve_min_max_affine(cuts, region, ball=None, tol=1e-10):
    """Minimize ``max_i support_i(x)`` over ``region`` (∩ ``ball``)."""
    G, alpha = cut_arrays(cuts)
    if ball is not None:
        center, radius = ball
        if not np.isfinite(radius):
            ball = None
        elif region.kind == "ball":
            raise NotImplementedError("intersection of two balls is not supported")
        else:
            return _min_max_ball(G, alpha, region, center, float(radius), tol)
    if region.kind == "ball":
        return _min_max_ball(G, alpha, FeasibleRegion.whole_space(region.n), region.center, region.radius, tol)
    return _min_max_polyhedral(G, alpha, region, tol)


def min_max_affine(cuts, region, ball=None, tol=1e-10):
    """Value of ``min max_i support_i(x)``; ``-inf`` signals an unbounded model."""
    return solve_min_max_affine(cuts, region, ball, tol).value


# ---------------------------------------------------------------------------
# Normalized descent of a model within a ball
# ---------------------------------------------------------------------------


def wgap_details(center, cuts, iota, region, tol=1e-10):
    """Return ``(V, result)`` where ``V`` is the normalized model descent."""
    if not iota > 0:
        raise ValueError("iota must be positive")
    center = np.asarray(center, dtype=float)
    G, alpha = cut_arrays(cuts)
    psi_c = float(np.max(alpha + G @ center))
    res = solve_min_max_affine(cuts, region, (center, iota), tol)
    return max(psi_c - res.value, 0.0) / iota, res


def eval_wgap(center, cuts, iota, region, tol=1e-10):
    """Largest descent of the max-of-cuts model over a ball, divided by its radius."""
    return wgap_details(center, cuts, iota, region, tol)[0]
