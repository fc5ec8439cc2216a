"""Drivers that adapt an unknown growth modulus or weak-convexity modulus
by guessing, checking progress with W-certificates, and restarting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bundle import Trace, TraceRecord
from .certify import UNBOUNDED, WCertificate, certificate_gap_bound, wcert_search
from .gapred import gap_reduction, initial_lower_bound
from .geometry import eval_wgap
from .problems import BudgetExhausted, Oracle
from .proximal import solve_subproblem

__all__ = [
    "AdaptiveRunState",
    "PFBLStep",
    "PFBLResult",
    "PFIPPMResult",
    "iter_pf_bl_mu",
    "pf_bl_mu",
    "pf_ippm",
]

MAX_RESTARTS = 60


@dataclass
class AdaptiveRunState:
    guess: float
    restart_count: int = 0
    tau_index: int = 0
    delta_tau: float = math.inf
    history: list = field(default_factory=list)

    def record(self, outer, certificates):
        self.history.append({"guess": self.guess, "outer_iterations": outer, "certificates": certificates})


@dataclass
class PFBLStep:
    """One Gap Reduction call of the adaptive driver."""

    x: np.ndarray
    fbar: float
    funder: float
    guess: float
    restart: int
    outer: int
    certificate: WCertificate | None = None
    search_failed: bool = False
    oracle_calls: int = 0

    @property
    def gap(self):
        return self.fbar - self.funder


def _sample_at(samples, x):
    for s in samples:
        if np.array_equal(s.x, x):
            return s
    return None


def iter_pf_bl_mu(instance, x0, mu_tilde, m, target_eps=None, budget=None, seed=0, perturbation_radius=0.0, tol=1e-10, max_restarts=MAX_RESTARTS, oracle=None, state=None):
    """Anytime bundle-level driver for an unknown growth modulus.

    Yields a :class:`PFBLStep` after every Gap Reduction call. Whenever the
    gap halves relative to the last anchor a certificate search runs at the
    incumbent; a failed search halves the guess and restarts from the
    current incumbent. With ``target_eps`` the stream ends once a
    certificate bounds the gap by ``target_eps`` under the current guess.
    """
    if not mu_tilde > 0:
        raise ValueError("mu_tilde must be positive")
    if oracle is None:
        oracle = Oracle(instance, perturbation_radius, seed, budget)
    st = state if state is not None else AdaptiveRunState(float(mu_tilde))
    x = np.array(x0, dtype=float)
    best = None
    try:
        sample = oracle(x)
        while True:
            fbar = sample.fx
            funder = initial_lower_bound(sample.fx, sample.cut.gradient, st.guess)
            st.tau_index, st.delta_tau = 0, fbar - funder
            certs = []
            outer = 0
            restarted = False
            while not restarted:
                res = gap_reduction(st.guess, x, fbar, funder, m, oracle, instance.region, tol, sample0=sample, instance=instance)
                outer += 1
                x, fbar, funder = res.x, res.fbar, res.funder
                sample = _sample_at(res.samples, x)
                best = (x.copy(), fbar)
                step = PFBLStep(x.copy(), fbar, funder, st.guess, st.restart_count, outer, oracle_calls=oracle.calls)
                delta = fbar - funder
                if delta <= 0.5 * st.delta_tau:
                    st.tau_index, st.delta_tau = outer, delta
                    cert = wcert_search(oracle, x, delta, m, UNBOUNDED, instance.region, tol, center_sample=sample) if delta > 0 else None
                    if cert is False:
                        step.search_failed = True
                        st.record(outer, certs)
                        if st.restart_count >= max_restarts:
                            raise BudgetExhausted(f"pf_bl_mu exceeded {max_restarts} restarts", best)
                        st.restart_count += 1
                        st.guess *= 0.5
                        restarted = True
                        sample = oracle(x)
                    else:
                        step.certificate = cert
                        if cert is not None:
                            certs.append(cert)
                yield step
                if target_eps is not None and not restarted:
                    if delta <= 0.0 or (step.certificate is not None and certificate_gap_bound(step.certificate, st.guess) <= target_eps):
                        st.record(outer, certs)
                        return
    except BudgetExhausted as exc:
        if exc.best is None:
            exc.best = best
        raise


@dataclass
class PFBLResult:
    x: np.ndarray
    fbar: float
    funder: float
    guess: float
    restarts: int
    guesses: list
    steps: list
    certificate: WCertificate | None
    trace: Trace
    oracle_calls: int

    def __iter__(self):
        return iter((self.x, self.fbar, self.funder, self.certificate))


def pf_bl_mu(instance, x0, mu_tilde, m, target_eps, budget=None, seed=0, perturbation_radius=0.0, tol=1e-10, max_restarts=MAX_RESTARTS, max_steps=100000):
    """Run :func:`iter_pf_bl_mu` until ``target_eps`` is certified."""
    if not target_eps > 0:
        raise ValueError("target_eps must be positive")
    oracle = Oracle(instance, perturbation_radius, seed, budget)
    state = AdaptiveRunState(float(mu_tilde))
    steps = []
    guesses = [float(mu_tilde)]
    trace = Trace(meta={"algorithm": "pf_bl_mu", "mu_tilde": mu_tilde, "m": m, "target_eps": target_eps})
    for i, step in enumerate(iter_pf_bl_mu(instance, x0, mu_tilde, m, target_eps, None, seed, perturbation_radius, tol, max_restarts, oracle, state)):
        steps.append(step)
        extra = {"fbar": step.fbar, "funder": step.funder, "guess": step.guess, "restart": step.restart}
        if step.certificate is not None:
            c = step.certificate
            extra["certificate"] = {"iota": "unbounded" if c.unbounded else c.iota, "nu": c.nu, "delta": c.delta_used}
        event = "restart" if step.search_failed else "bound_update"
        trace.append(TraceRecord(i, step.x, step.fbar, instance.dist_to_solution(step.x), None, None, 0.0, event, step.oracle_calls, extra))
        if step.search_failed:
            guesses.append(state.guess)
        if len(steps) >= max_steps:
            raise BudgetExhausted(f"pf_bl_mu exceeded {max_steps} gap reductions", (step.x, step.fbar))
    last = steps[-1]
    trace.oracle_calls = oracle.calls
    return PFBLResult(last.x, last.fbar, last.funder, state.guess, state.restart_count, guesses, steps, last.certificate, trace, oracle.calls)


@dataclass
class PFIPPMResult:
    xbar: np.ndarray
    certificate: WCertificate
    rho: float
    guesses: list
    restarts: int
    trace: Trace
    oracle_calls: int
    history: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.xbar, self.certificate))


def pf_ippm(instance, xbar0, rho_tilde, m, eps, budget=None, seed=0, perturbation_radius=0.0, tol=1e-10, max_restarts=MAX_RESTARTS, max_outer=100000):
    """Proximal point method for an unknown weak-convexity modulus.

    After each half-descent step a certificate search runs on the surrogate
    with radius cap ``sqrt(Delta / rho)``; the same points are re-scored
    against ``f``'s own cuts. A failed search or an ``f``-score of at least
    twice the surrogate score doubles the guess and restarts. Returns once
    the ``f``-certificate has both radius and value at most ``eps``.
    """
    if not (rho_tilde > 0 and eps > 0):
        raise ValueError("rho_tilde and eps must be positive")
    oracle = Oracle(instance, perturbation_radius, seed, budget)
    st = AdaptiveRunState(float(rho_tilde))
    guesses = [st.guess]
    trace = Trace(meta={"algorithm": "pf_ippm", "rho_tilde": rho_tilde, "m": m, "eps": eps})
    xbar = np.array(xbar0, dtype=float)
    best = (xbar.copy(), None)
    it = 0
    outer_total = 0
    try:
        while True:
            rho = st.guess
            # Safety floor: a center this close to stationary ends the inner loop.
            floor = eps**2 / (512.0 * rho)
            s = 0
            restart = False
            while not restart:
                if outer_total >= max_outer:
                    raise BudgetExhausted(f"pf_ippm exceeded {max_outer} outer iterations", best)
                step = solve_subproblem(instance, xbar, rho, m, oracle, floor, tol, iter_offset=it)
                outer_total += 1
                for rec in step.records:
                    trace.append(rec)
                it = (trace.records[-1].iter + 1) if trace.records else it + 1
                delta = step.delta_bar
                if not delta > 0:
                    delta = max(floor, np.finfo(float).tiny)
                sur_oracle = _ProxOracleView(step.surrogate, oracle)
                iota_max = math.sqrt(delta / rho)
                cert = wcert_search(sur_oracle, xbar, delta, m, iota_max, instance.region, tol, center_sample=step.center_sample)
                extra = {"outer": s, "guess": rho, "delta": delta}
                if cert is False:
                    restart = True
                    extra["search"] = "failed"
                else:
                    f_cert = _rescore_on_f(cert, instance.region, tol)
                    extra.update(iota=cert.iota, nu=cert.nu, nu_f=f_cert.nu)
                    if f_cert.nu >= 2.0 * cert.nu:
                        restart = True
                    elif f_cert.nu <= eps and f_cert.iota <= eps:
                        trace.append(TraceRecord(it, xbar.copy(), step.P0, None, None, None, 0.0, "certificate", oracle.calls, extra))
                        trace.oracle_calls = oracle.calls
                        st.record(s + 1, [f_cert])
                        return PFIPPMResult(xbar, f_cert, rho, guesses, st.restart_count, trace, oracle.calls, st.history)
                new_x = step.x
                if restart:
                    st.record(s + 1, [])
                    if st.restart_count >= max_restarts:
                        raise BudgetExhausted(f"pf_ippm exceeded {max_restarts} restarts", best)
                    st.restart_count += 1
                    st.guess *= 2.0
                    guesses.append(st.guess)
                    trace.append(TraceRecord(it, new_x.copy(), step.Pbar - step.surrogate.penalty(new_x), None, None, None, 0.0, "restart", oracle.calls, extra))
                else:
                    trace.append(TraceRecord(it, new_x.copy(), step.Pbar - step.surrogate.penalty(new_x), None, None, None, 0.0, "outer", oracle.calls, extra))
                xbar = new_x
                best = (xbar.copy(), step.Pbar - step.surrogate.penalty(xbar))
                s += 1
    except BudgetExhausted as exc:
        if exc.best is None:
            exc.best = best
        raise


class _ProxOracleView:
    """Surrogate oracle over an existing base oracle (shares its counter)."""

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


def _rescore_on_f(cert, region, tol):
    """Same points and radius, model rebuilt from ``f``'s own cuts."""
    base_center = cert.center_sample.base
    base_points = [p.base for p in cert.points]
    if base_center is None or any(p is None for p in base_points):
        raise ValueError("certificate samples carry no base-oracle sample")
    model = [base_center.cut] + [p.cut for p in base_points]
    nu_f = eval_wgap(cert.center, model, cert.iota, region, tol)
    last = cert.last_point.base if cert.last_point is not None else None
    return WCertificate(cert.center.copy(), base_center, base_points, cert.iota, nu_f, cert.delta_used, None, cert.termination, last, {"surrogate_nu": cert.nu})
