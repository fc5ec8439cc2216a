"""W-stationarity certificates: search, validation and the bounds they imply."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gapred import empirical_smoothness
from .geometry import min_norm_hull, project_onto_level_set, solve_min_max_affine, wgap_details
from .problems import OracleSample, UnsupportedError

__all__ = [
    "UNBOUNDED",
    "WCertificate",
    "certificate_distance_bound",
    "certificate_gap_bound",
    "goldstein_norm_from_cert",
    "moreau_bound_from_cert",
    "search_ltilde",
    "transfer_cert_to_f",
    "validate_certificate",
    "wcert_search",
]


class _Unbounded:
    """Marker for a certificate radius that may be taken arbitrarily large."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNBOUNDED"

    def __reduce__(self):
        return (_Unbounded, ())


UNBOUNDED = _Unbounded()


@dataclass
class WCertificate:
    """A radius ``iota`` and value ``nu`` bounding the model descent rate.

    ``points`` are the samples whose cuts, together with ``center_sample``'s
    cut, make up the model. For an unbounded radius ``nu`` is the limit
    ``0+`` of ``2 delta / R`` and is stored as ``0.0``.
    """

    center: np.ndarray
    center_sample: OracleSample
    points: list
    iota: float | _Unbounded
    nu: float
    delta_used: float
    Ltilde: float | None = None
    termination: str = ""
    last_point: OracleSample | None = None
    meta: dict = field(default_factory=dict)

    @property
    def unbounded(self):
        return self.iota is UNBOUNDED

    @property
    def model(self):
        return [self.center_sample.cut] + [p.cut for p in self.points]

    def nu_at(self, radius):
        """``nu`` for the radius ``radius`` (only meaningful when unbounded)."""
        if not self.unbounded:
            return self.nu
        return 2.0 * self.delta_used / radius

    def to_json(self):
        return {
            "center": [float(v) for v in self.center],
            "center_sample": self.center_sample.to_json(),
            "points": [p.to_json() for p in self.points],
            "iota": "unbounded" if self.unbounded else float(self.iota),
            "nu": float(self.nu),
            "delta_used": float(self.delta_used),
            "Ltilde": None if self.Ltilde is None or not math.isfinite(self.Ltilde) else float(self.Ltilde),
            "termination": self.termination,
            "last_point": self.last_point.to_json() if self.last_point is not None else None,
        }

    @staticmethod
    def from_json(d):
        iota = UNBOUNDED if d["iota"] == "unbounded" else float(d["iota"])
        return WCertificate(
            np.array(d["center"], dtype=float),
            OracleSample.from_json(d["center_sample"]),
            [OracleSample.from_json(p) for p in d["points"]],
            iota,
            float(d["nu"]),
            float(d["delta_used"]),
            d.get("Ltilde"),
            d.get("termination", ""),
            OracleSample.from_json(d["last_point"]) if d.get("last_point") else None,
        )


def search_ltilde(samples, slack):
    """Smallest clamped empirical smoothness over ordered pairs of ``samples``.

    Coincident pairs are skipped; ``inf`` if no pair is usable.
    """
    best = math.inf
    for r in range(1, len(samples)):
        for q in range(r):
            if np.array_equal(samples[r].x, samples[q].x):
                continue
            best = min(best, empirical_smoothness(samples[r], samples[q], slack))
    return best


def wcert_search(oracle, xbar, Delta, m, iota_max=UNBOUNDED, region=None, tol=1e-10, center_sample=None, return_info=False):
    """Search for a W-certificate at ``xbar`` assuming ``f(xbar) - f* <= Delta``.

    Projects ``xbar`` onto level sets of the growing model at height
    ``f(xbar) - 2 Delta``. Returns a :class:`WCertificate`, or ``False`` when
    the final search point is too close to ``xbar`` for the observed
    curvature, which shows that ``Delta`` underestimates the gap of a convex
    ``f``. Randomly perturbed cuts come from the oracle itself.
    """
    if not Delta > 0:
        raise ValueError("Delta must be positive")
    if m < 1:
        raise ValueError("m must be >= 1")
    if iota_max is not UNBOUNDED and not iota_max > 0:
        raise ValueError("iota_max must be positive or UNBOUNDED")
    region = oracle.region if region is None else region
    xbar = np.array(xbar, dtype=float)
    c = center_sample if center_sample is not None else oracle(xbar)
    level = c.fx - 2.0 * Delta
    cuts = [c.cut]
    points = []
    dists = []
    info = {"level": level, "dists": dists}

    def done(result):
        return (result, info) if return_info else result

    for t in range(m + 1):
        proj = project_onto_level_set(xbar, cuts, level, region, tol)
        # An empty level set counts as infinite distance, so a finite radius
        # cap takes precedence over the unbounded certificate.
        d = float(np.linalg.norm(proj.point - xbar)) if proj.feasible else math.inf
        if iota_max is not UNBOUNDED and d > iota_max:
            return done(WCertificate(xbar, c, points, float(iota_max), 2.0 * Delta / iota_max, Delta, None, "iota_max"))
        if not proj.feasible:
            return done(WCertificate(xbar, c, points, UNBOUNDED, 0.0, Delta, None, "infeasible"))
        x = proj.point
        s = oracle(x)
        points.append(s)
        dists.append(d)
        if t < m:
            cuts.append(s.cut)
    Lt = search_ltilde([c] + points, Delta / 6.0)
    info["Ltilde"] = Lt
    d = dists[-1]
    threshold = math.inf if Lt == 0.0 else 0.5 * math.sqrt(Delta / Lt)
    info["threshold"] = threshold
    if d == 0.0 or d < threshold:
        return done(False)
    return done(WCertificate(xbar, c, points[:m], d, 2.0 * Delta / d, Delta, Lt, "radius", points[m]))


def validate_certificate(cert, region, tol=1e-10, radius=None):
    """Recompute the W-gap of the certificate's model.

    Unbounded certificates need an explicit ``radius``; compare the result
    with ``cert.nu_at(radius)``.
    """
    iota = cert.iota
    if cert.unbounded:
        if radius is None:
            raise ValueError("an unbounded certificate is validated on a caller-supplied radius")
        iota = radius
    elif radius is not None:
        iota = radius
    return wgap_details(cert.center, cert.model, iota, region, tol)[0]


def certificate_gap_bound(cert, mu):
    """Upper bound on ``f(center) - f*`` under quadratic growth with modulus ``mu``."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    if cert.unbounded:
        return 2.0 * cert.delta_used
    return max(cert.iota * cert.nu, 2.0 * cert.nu**2 / mu)


def certificate_distance_bound(cert, mu):
    """``max{iota, nu / mu}``; infinite (no information) for an unbounded radius."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    if cert.unbounded:
        return math.inf
    return max(cert.iota, cert.nu / mu)


def moreau_bound_from_cert(cert, rho):
    """Moreau stationarity level ``2 nu + 4 iota rho`` implied by the certificate."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    if cert.unbounded:
        raise ValueError("the Moreau bound needs a finite radius")
    return 2.0 * cert.nu + 4.0 * cert.iota * rho


def goldstein_norm_from_cert(cert, tol=1e-10, region=None):
    """Norm of the multiplier-weighted gradient average of the model cuts.

    Unconstrained problems only. The weights are the dual solution of the
    W-gap problem, so the norm is at most ``nu`` up to solver accuracy.
    """
    if region is not None and region.kind != "whole_space":
        raise UnsupportedError("Goldstein certificates are defined for unconstrained problems")
    from .geometry import FeasibleRegion

    whole = FeasibleRegion.whole_space(cert.center.size)
    cuts = cert.model
    if len(cuts) == 1:
        return float(np.linalg.norm(cuts[0].gradient))
    G = np.array([cut.gradient for cut in cuts])
    if cert.unbounded:
        # A model bounded below has 0 in the hull of its gradients.
        return min_norm_hull(G)[1]
    res = solve_min_max_affine(cuts, whole, (cert.center, cert.iota), tol)
    if res.lam is None:
        raise RuntimeError("W-gap solve did not return dual weights")
    return float(np.linalg.norm(res.lam @ G))


def transfer_cert_to_f(cert, rho, tol=1e-12):
    """Reinterpret a certificate built on the proximal surrogate as one for ``f``.

    Keeps the points and radius, rebuilds the model from the base samples
    and doubles ``nu``. Requires ``nu >= 2 iota rho``.
    """
    if cert.unbounded:
        raise ValueError("cannot transfer an unbounded certificate")
    if cert.nu < 2.0 * cert.iota * rho * (1.0 - tol):
        raise ValueError(f"transfer requires nu >= 2 iota rho (nu={cert.nu:.6g}, 2 iota rho={2 * cert.iota * rho:.6g})")

    def base(s):
        if s.base is None:
            raise ValueError("certificate samples carry no base-oracle sample")
        return s.base

    last = base(cert.last_point) if cert.last_point is not None else None
    return WCertificate(
        cert.center.copy(),
        base(cert.center_sample),
        [base(p) for p in cert.points],
        cert.iota,
        2.0 * cert.nu,
        cert.delta_used,
        None,
        cert.termination,
        last,
        {"transferred_from_rho": rho},
    )
