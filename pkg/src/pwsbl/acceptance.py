"""The sixteen acceptance checks, shared by the test suite and ``pwsbl suite``.

Each check returns a :class:`CriterionResult`; none of them raises on a
failed property, so a full battery always reports every line.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .adaptive import pf_bl_mu, pf_ippm
from .bundle import LevelSetInfeasible, bridged_three_point_check, detect_matching_pairs, run_bl
from .certify import (
    certificate_distance_bound,
    certificate_gap_bound,
    moreau_bound_from_cert,
    validate_certificate,
    wcert_search,
)
from .gapred import bl_mu, gap_reduction, initial_lower_bound
from .geometry import FeasibleRegion, eval_wgap, solve_min_max_affine
from .harness import polyak_subgradient
from .problems import (
    Cut,
    Oracle,
    demo_pws,
    evaluate,
    make_max_of_quadratics,
    make_weakly_convex_max,
    query_rng,
    radius_for_delta,
    square_1d,
)
from .proximal import ProxSurrogate, ippm, moreau_residual

__all__ = ["CRITERIA", "CriterionResult", "format_result", "run_criterion", "run_suite"]


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0


def format_result(res):
    tag = "PASS" if res.passed else "FAIL"
    return f"[{tag}] criterion {res.number:2d} {res.title}: {res.detail} ({res.seconds:.1f}s)"


# ---------------------------------------------------------------------------
# Shared suites
# ---------------------------------------------------------------------------


def qg_suite(count, seed=0, L=10.0, mu=1.0):
    """Convex max-of-quadratics instances with ``x* = 0`` and varied shapes."""
    out = []
    for i in range(count):
        rng = np.random.default_rng([seed, 7919, i])
        k = int(rng.integers(2, 7))
        n = int(rng.integers(2, 11))
        inst = make_max_of_quadratics(k, n, L, mu, seed=1000 * seed + i)
        x0 = rng.standard_normal(n)
        x0 *= rng.uniform(0.5, 3.0) / np.linalg.norm(x0)
        out.append((inst, x0, rng))
    return out


def wc_suite(count, seed=0, rho=1.0, k=5, n=4):
    out = []
    for i in range(count):
        inst = make_weakly_convex_max(k, n, rho, seed=1000 * seed + i)
        rng = np.random.default_rng([seed, 104729, i])
        x0 = rng.uniform(-1.5, 1.5, n)
        out.append((inst, x0, rng))
    return out


def _sign_changes(values):
    s = np.sign(values)
    s = s[s != 0]
    return int(np.sum(s[1:] != s[:-1]))


def _calls_to_dist(trace, target):
    for r in trace.records:
        if r.dist_to_xstar is not None and r.dist_to_xstar <= target:
            return r.oracle_calls
    return None


# ---------------------------------------------------------------------------
# Criteria
# ---------------------------------------------------------------------------


def criterion_1(seed=0):
    inst = demo_pws()
    x0 = np.array([1e-4, 1e-2])
    bl = run_bl(inst, 3, 0.0, x0, max_iters=100)
    pk = polyak_subgradient(inst, x0, 5000, stop_dist=1e-8)
    bl_calls = _calls_to_dist(bl, 1e-8)
    pk_calls = _calls_to_dist(pk, 1e-8)
    flips = _sign_changes(pk.xs[:, 0])
    ok = bl_calls is not None and bl_calls <= 100 and (pk_calls is None or bl_calls < pk_calls) and flips >= 10
    pk_txt = f"{pk_calls}" if pk_calls is not None else f"not within {pk.oracle_calls}"
    return ok, f"BL reached 1e-8 after {bl_calls} calls, Polyak {pk_txt}; Polyak x1 sign changes {flips}", {"bl_calls": bl_calls, "polyak_calls": pk_calls, "sign_changes": flips}


def criterion_2(seed=0):
    worst = -math.inf
    for inst, x0, _ in qg_suite(20, seed):
        m = inst.ground_truth.k
        tr = run_bl(inst, m, 0.0, x0, max_iters=150, stop_tol=1e-14)
        d0 = float(np.sum(x0**2))
        worst = max(worst, bridged_three_point_check(tr, inst.ground_truth.xstar, m) / d0)
    return worst <= 1e-8, f"max violation / dist0^2 = {worst:.3e} (limit 1e-8)", {"worst_ratio": worst}


def criterion_3(seed=0):
    worst, npairs = -math.inf, 0
    for inst, x0, _ in qg_suite(20, seed):
        gt = inst.ground_truth
        k = gt.k
        tr = run_bl(inst, k, 0.0, x0, max_iters=150, stop_tol=1e-14)
        st = detect_matching_pairs(tr, l=k)
        factor = k * gt.L / (k * gt.L + gt.mu)
        d2 = np.sum(tr.xs**2, axis=1)
        for q, r in st.pairs:
            worst = max(worst, d2[r] - factor * d2[q])
            npairs += 1
    return worst <= 1e-10, f"{npairs} pairs, max excess {worst:.3e} (limit 1e-10)", {"pairs": npairs, "worst_excess": worst}


def criterion_4(seed=0):
    worst, checked, floor_skips = 0.0, 0, 0
    for inst, x0, _ in qg_suite(20, seed):
        gt = inst.ground_truth
        m = gt.k
        try:
            tr = run_bl(inst, m, 0.0, x0, max_iters=200, stop_tol=0.0)
        except LevelSetInfeasible as exc:
            # Only happens once the iterates agree with x* to ~1e-30.
            tr = exc.trace
        d2 = np.sum(tr.xs**2, axis=1)
        for N in range(1, len(tr)):
            st = detect_matching_pairs(tr.pieces[: N + 1], l=m)
            if st.p == 0:
                continue
            kappa = st.sigma_bar * st.kappa_bar * (math.e * gt.L / gt.mu + 1.0)
            bound = math.e * (1.0 + 1.0 / kappa) ** (-N) * d2[0]
            # Below ~1e-28 relative the iterates sit at rounding level.
            if bound < 1e-28 * d2[0]:
                floor_skips += 1
                continue
            checked += 1
            worst = max(worst, d2[N] / bound)
    return worst <= 2.0, f"{checked} prefixes, max dist^2 / bound = {worst:.3e} (limit 2)", {"checked": checked, "worst_ratio": worst, "floor_skips": floor_skips}


def criterion_5(seed=0):
    delta = 1e-3
    worst = 0.0
    for inst, x0, _ in qg_suite(20, seed):
        gt = inst.ground_truth
        radius = radius_for_delta(delta, gt.L)
        induced = 2.0 * gt.M * radius + 4.0 * gt.L * radius**2
        tr = run_bl(inst, gt.k, 0.0, x0, perturbation_radius=radius, max_iters=300, seed=seed)
        tail = tr.fvals[-50:]
        worst = max(worst, float(np.max(tail)) / induced)
    return worst <= 10.0, f"max tail gap / induced delta = {worst:.3e} (limit 10)", {"worst_ratio": worst}


def criterion_6(seed=0):
    worst_gap, worst_lb, worst_iter, worst_iter6 = -math.inf, -math.inf, -math.inf, -math.inf
    calls = 0
    for i in range(200):
        rng = np.random.default_rng([seed, 6, i])
        k = int(rng.integers(1, 8))
        n = int(rng.integers(1, 9))
        L = float(rng.uniform(1.0, 20.0))
        mu = float(rng.uniform(0.2, 1.0)) * L if k == 1 else float(rng.uniform(0.05, 1.0)) * L
        inst = make_max_of_quadratics(k, n, L, mu, seed=int(rng.integers(1 << 30)))
        m = int(rng.integers(max(1, k), 2 * k + 3))
        x0 = rng.standard_normal(n) * rng.uniform(0.1, 3.0)
        oracle = Oracle(inst)
        s0 = oracle(x0)
        if s0.fx <= 0.0:
            continue
        lb0 = initial_lower_bound(s0.fx, s0.cut.gradient, mu)
        funder = lb0 + rng.uniform(0.0, 1.0) * (0.0 - lb0)
        res = gap_reduction(mu, x0, s0.fx, funder, m, oracle, sample0=s0, instance=inst)
        calls += 1
        worst_gap = max(worst_gap, res.delta - (2.0 / 3.0) * (s0.fx - funder))
        worst_lb = max(worst_lb, res.funder)
        worst_iter = max(worst_iter, res.inner_iterations - (res.dp_bound + m))
        # Diagnostic only: the same statistics against the 6 / mu trigger constant.
        worst_iter6 = max(worst_iter6, res.inner_iterations - (math.ceil(6.0 * res.dp_ratio) + m))
    ok = worst_gap <= 1e-12 and worst_lb <= 1e-10 and worst_iter <= 0
    detail = (
        f"{calls} calls; max gap excess {worst_gap:.2e}, max funder - f* {worst_lb:.2e}, "
        f"max inner - (ceil(3 ratio) + m) {worst_iter:.0f}, max inner - (ceil(6 ratio) + m) {worst_iter6:.0f}"
    )
    return ok, detail, {"calls": calls, "gap_excess": worst_gap, "lb_excess": worst_lb, "iter_excess": worst_iter, "iter_excess_6": worst_iter6}


def criterion_7(seed=0):
    worst_outer, worst_gap = -math.inf, -math.inf
    for inst, x0, rng in qg_suite(15, seed):
        gt = inst.ground_truth
        eps = float(10.0 ** rng.uniform(-8, -3))
        res = bl_mu(inst, x0, gt.mu, gt.k + 2, eps)
        bound = math.ceil(math.log(res.delta0 / eps) / math.log(1.5)) + 1
        worst_outer = max(worst_outer, res.outer_iterations - bound)
        worst_gap = max(worst_gap, (inst.value(res.x) - gt.fstar) / eps)
    ok = worst_outer <= 0 and worst_gap <= 1.0
    return ok, f"max outer - bound {worst_outer:.0f}, max (f - f*)/eps {worst_gap:.3f}", {"outer_excess": worst_outer, "gap_ratio": worst_gap}


def _brute_min_max(cuts, lo, hi, ball=None, rounds=6, pts=201):
    """Min of the max of affine functions over a box (or box ∩ ball) by zoomed grids."""
    G = np.array([c.gradient for c in cuts])
    a = np.array([c.value - c.gradient @ c.center for c in cuts])
    lo, hi = np.array(lo, float), np.array(hi, float)
    n = lo.size
    best_val, best_x = math.inf, None
    cur_lo, cur_hi = lo.copy(), hi.copy()
    for _ in range(rounds):
        axes = [np.linspace(cur_lo[j], cur_hi[j], pts) for j in range(n)]
        X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        if ball is not None:
            c, r = ball
            X = X[np.sum((X - c) ** 2, axis=1) <= r * r]
            if X.size == 0:
                break
        vals = np.max(X @ G.T + a, axis=1)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_x = float(vals[i]), X[i]
        width = (cur_hi - cur_lo) / (pts - 1)
        cur_lo = np.maximum(lo, best_x - 4 * width)
        cur_hi = np.minimum(hi, best_x + 4 * width)
    return best_val


def _random_cuts(rng, n, k):
    return [Cut(rng.uniform(-1, 1, n), float(rng.uniform(-1, 1)), rng.standard_normal(n)) for _ in range(k)]


def criterion_8(seed=0):
    # (a) every certificate the package emits validates.
    worst_valid, emitted = -math.inf, 0
    for inst, x0, rng in qg_suite(15, seed):
        oracle = Oracle(inst)
        gap = inst.value(x0) - inst.ground_truth.fstar
        cert = wcert_search(oracle, x0, gap * rng.uniform(1.0, 3.0), inst.ground_truth.k + 2)
        if cert is False:
            continue
        radii = [0.1, 1.0, 10.0] if cert.unbounded else [None]
        for R in radii:
            v = validate_certificate(cert, inst.region, radius=R)
            worst_valid = max(worst_valid, v - cert.nu_at(R if R is not None else cert.iota))
            emitted += 1
    for inst, x0, _ in qg_suite(4, seed + 1):
        res = pf_bl_mu(inst, x0, 16.0 * inst.ground_truth.mu, inst.ground_truth.k + 2, 1e-6)
        for st in res.steps:
            c = st.certificate
            if c is None:
                continue
            R = 1.0 if c.unbounded else None
            v = validate_certificate(c, inst.region, radius=R)
            worst_valid = max(worst_valid, v - c.nu_at(R if R is not None else c.iota))
            emitted += 1
    # (b) monotonicity of the normalized descent in the radius.
    worst_mono = -math.inf
    for i in range(40):
        rng = np.random.default_rng([seed, 8, i])
        n = int(rng.integers(1, 6))
        cuts = _random_cuts(rng, n, int(rng.integers(1, 7)))
        center = rng.uniform(-1, 1, n)
        region = FeasibleRegion.whole_space(n) if i % 2 else FeasibleRegion.box(-2 * np.ones(n), 2 * np.ones(n))
        vs = [eval_wgap(center, cuts, r, region) for r in (0.05, 0.2, 0.7, 2.0, 6.0)]
        worst_mono = max(worst_mono, max(b - a for a, b in zip(vs, vs[1:])))
    # (c) LP/dual solution vs brute-force grid in 1D and 2D.
    worst_grid = 0.0
    for i in range(30):
        rng = np.random.default_rng([seed, 88, i])
        n = 1 + i % 2
        cuts = _random_cuts(rng, n, int(rng.integers(1, 6)))
        lo, hi = -1.5 * np.ones(n), 1.5 * np.ones(n)
        box = FeasibleRegion.box(lo, hi)
        if i % 3 == 2:
            c, r = rng.uniform(-1, 1, n), float(rng.uniform(0.2, 1.0))
            res = solve_min_max_affine(cuts, box, (c, r))
            brute = _brute_min_max(cuts, lo, hi, (c, r))
        else:
            res = solve_min_max_affine(cuts, box)
            brute = _brute_min_max(cuts, lo, hi)
        worst_grid = max(worst_grid, abs(res.value - brute), abs(res.upper - brute))
    ok = worst_valid <= 1e-8 and worst_mono <= 1e-10 and worst_grid <= 1e-6
    detail = f"{emitted} certificates, max V - nu {worst_valid:.2e}; max V increase {worst_mono:.2e}; max |solver - grid| {worst_grid:.2e}"
    return ok, detail, {"valid_excess": worst_valid, "mono_increase": worst_mono, "grid_error": worst_grid}


def criterion_9(seed=0):
    worst_low, worst_high, worst_dist = math.inf, -math.inf, math.inf
    count = 0
    for inst, x0, rng in qg_suite(40, seed):
        gt = inst.ground_truth
        xbar = x0 * rng.uniform(0.05, 1.0)
        gap = inst.value(xbar) - gt.fstar
        if gap <= 1e-12:
            continue
        cert = wcert_search(Oracle(inst), xbar, gap, gt.k + 2)
        if cert is False:
            worst_low = -math.inf
            continue
        count += 1
        gb = certificate_gap_bound(cert, gt.mu)
        worst_low = min(worst_low, gb - gap)
        Lt = cert.Ltilde if cert.Ltilde is not None else 0.0
        worst_high = max(worst_high, gb - max(2.0, 32.0 * Lt / gt.mu) * gap)
        worst_dist = min(worst_dist, certificate_distance_bound(cert, gt.mu) - inst.dist_to_solution(xbar))
    ok = worst_low >= 0 and worst_high <= 1e-8 and worst_dist >= 0
    detail = f"{count} certificates; min(bound - gap) {worst_low:.2e}, max(bound - cap) {worst_high:.2e}, min(dist bound - dist) {worst_dist:.2e}"
    return ok, detail, {"count": count, "low": worst_low, "high": worst_high, "dist": worst_dist}


def criterion_10(seed=0):
    false, kinds = 0, {}
    for i in range(500):
        rng = np.random.default_rng([seed, 10, i])
        k = int(rng.integers(1, 8))
        n = int(rng.integers(1, 9))
        L = float(rng.uniform(1.0, 20.0))
        inst = make_max_of_quadratics(k, n, L, float(rng.uniform(0.05, 1.0)) * L, seed=int(rng.integers(1 << 30)))
        xbar = rng.standard_normal(n) * rng.uniform(0.01, 3.0)
        gap = inst.value(xbar)
        if gap <= 0:
            continue
        cert = wcert_search(Oracle(inst), xbar, gap * (1.0 + rng.exponential(1.0)), int(rng.integers(1, 10)))
        if cert is False:
            false += 1
        else:
            kinds[cert.termination] = kinds.get(cert.termination, 0) + 1
    return false == 0, f"{false} false negatives in 500 trials; terminations {kinds}", {"false": false, "kinds": kinds}


def criterion_11(seed=0):
    worst_chain, worst_cert, certs = -math.inf, -math.inf, 0
    for inst, x0, rng in wc_suite(12, seed):
        rho = inst.ground_truth.rho
        for xbar in (x0, rng.uniform(-2, 2, inst.n)):
            r, det = moreau_residual(inst, xbar, rho, return_details=True)
            sur = ProxSurrogate(inst, xbar, rho)
            cands = [det.x] + ([det.x_polished] if det.x_polished is not None else [])
            xhat = min(cands, key=sur.value)
            env_gap = inst.value(xbar) - sur.value(xhat)
            # The envelope gradient is 2 rho (xbar - xhat), twice the residual.
            grad_norm = 2.0 * rho * float(np.linalg.norm(xbar - xhat))
            worst_chain = max(worst_chain, grad_norm**2 - 8.0 * rho * env_gap, r**2 - 8.0 * rho * env_gap)
        # Certificates from two sources: a search on f itself with the
        # observed gap as Delta, and the f-certificate returned by pf_ippm.
        fmin = float(np.min(inst.values(rng.uniform(-2, 2, (4000, inst.n)))))
        found = []
        delta = max(inst.value(x0) - fmin, 1e-6)
        found.append((x0, wcert_search(Oracle(inst), x0, delta, 8, iota_max=math.sqrt(delta / rho))))
        run = pf_ippm(inst, x0, rho * float(rng.uniform(0.25, 1.0)), 8, 0.1)
        found.append((run.xbar, run.certificate))
        for delta in (1e-2, 1e-3):
            found.append((run.xbar, wcert_search(Oracle(inst), run.xbar, delta, 8, iota_max=math.sqrt(delta / rho))))
        for xbar, cert in found:
            if cert is False or cert.unbounded:
                continue
            certs += 1
            worst_cert = max(worst_cert, moreau_residual(inst, xbar, rho) - moreau_bound_from_cert(cert, rho))
    ok = worst_chain <= 1e-8 and certs > 0 and worst_cert <= 0.0
    return ok, f"max |grad|^2 - 8 rho gap {worst_chain:.2e}; {certs} certificates, max residual - bound {worst_cert:.3e}", {"chain": worst_chain, "cert": worst_cert}


def criterion_12(seed=0):
    worst_outer, worst_desc, worst_res = -math.inf, -math.inf, -math.inf
    eps = 0.1
    for inst, x0, rng in wc_suite(8, seed):
        rho = inst.ground_truth.rho
        res = ippm(inst, x0, rho, 8, eps)
        fs = [s.P0 for s in res.steps]
        for s, step in enumerate(res.steps[:-1]):
            worst_desc = max(worst_desc, step.delta_bar / 2.0 - (fs[s] - fs[s + 1]) - 1e-10)
        # Lowest value seen anywhere is an upper estimate of min f, so this
        # under-estimates the true initial gap.
        seen = [r.fx for r in res.trace.records] + list(inst.values(rng.uniform(-2, 2, (4000, inst.n))))
        gap_f = inst.value(x0) - min(seen)
        bound = math.ceil(16.0 * rho * gap_f / eps**2)
        worst_outer = max(worst_outer, res.outer_iterations - bound)
        worst_res = max(worst_res, moreau_residual(inst, res.xbar, rho) - eps)
    ok = worst_outer <= 0 and worst_desc <= 0 and worst_res <= 1e-6
    return ok, f"max outer - bound {worst_outer:.0f}; max descent shortfall {worst_desc:.2e}; max residual - eps {worst_res:.3e}", {"outer": worst_outer, "descent": worst_desc, "residual": worst_res}


def criterion_13(seed=0):
    max_restarts, wrong, worst_gap = 0, 0, -math.inf
    eps = 1e-6
    for inst, x0, rng in qg_suite(20, seed):
        gt = inst.ground_truth
        hi = pf_bl_mu(inst, x0, 64.0 * gt.mu, gt.k + 2, eps)
        lo = pf_bl_mu(inst, x0, gt.mu * rng.uniform(0.25, 1.0), gt.k + 2, eps)
        max_restarts = max(max_restarts, hi.restarts)
        wrong += lo.restarts
        worst_gap = max(worst_gap, (inst.value(hi.x) - gt.fstar) / eps, (inst.value(lo.x) - gt.fstar) / eps)
    ok = max_restarts <= 7 and wrong == 0 and worst_gap <= 1.0
    return ok, f"max restarts from 64 mu: {max_restarts}; restarts with mu~ <= mu: {wrong}; max (f - f*)/eps {worst_gap:.3f}", {"max_restarts": max_restarts, "low_restarts": wrong, "gap_ratio": worst_gap}


def criterion_14(seed=0):
    max_guesses, worst_iota, worst_nu, worst_valid = 0, -math.inf, -math.inf, -math.inf
    eps = 0.1
    runs = 0
    for rho in (2.0, 16.0):
        for inst, x0, _ in wc_suite(8, seed, rho=rho):
            res = pf_ippm(inst, x0, rho / 8.0, 8, eps)
            c = res.certificate
            runs += 1
            max_guesses = max(max_guesses, len(res.guesses))
            worst_iota = max(worst_iota, c.iota - eps)
            worst_nu = max(worst_nu, c.nu - eps)
            worst_valid = max(worst_valid, validate_certificate(c, inst.region) - c.nu)
    ok = max_guesses <= 4 and worst_iota <= 0 and worst_nu <= 0 and worst_valid <= 1e-8
    return ok, f"{runs} runs; max guesses {max_guesses}; max iota - eps {worst_iota:.3e}, max nu - eps {worst_nu:.3e}, max V - nu {worst_valid:.2e}", {"guesses": max_guesses}


def criterion_15(seed=0):
    worst, pairs = -math.inf, 0
    target = 10_000
    insts = [make_max_of_quadratics(int(k), int(n), 10.0, 1.0, seed=1000 * seed + j) for j, (k, n) in enumerate([(3, 2), (5, 4), (4, 6), (6, 3)])]
    insts.append(demo_pws())
    per = target // len(insts)
    for j, inst in enumerate(insts):
        gt = inst.ground_truth
        rng = np.random.default_rng([seed, 15, j])
        found = 0
        while found < per:
            radius = float(10.0 ** rng.uniform(-4, -1))
            # Keep both samples and their perturbations inside the ball where M holds.
            span = gt.M_radius - radius
            c = rng.standard_normal(inst.n)
            c *= rng.uniform(0, 0.5 * span) / np.linalg.norm(c)
            spread = float(10.0 ** rng.uniform(-3, -0.5))
            X = c + spread * rng.standard_normal((20, inst.n))
            X = X[np.linalg.norm(X, axis=1) <= span]
            samples = [evaluate(inst, x, radius, query_rng(seed, 15_000 + found + t)) for t, x in enumerate(X)]
            for a in samples:
                for b in samples:
                    if a is b or a.piece != b.piece or found >= per:
                        continue
                    lhs = a.fx - b.cut.support(a.x)
                    rhs = gt.L * float(np.sum((a.x - b.x) ** 2)) + 2.0 * gt.M * radius + 4.0 * gt.L * radius**2
                    worst = max(worst, lhs - rhs)
                    found += 1
        pairs += found
    return worst <= 1e-10, f"{pairs} same-piece pairs, max lhs - rhs {worst:.3e}", {"pairs": pairs, "worst": worst}


def criterion_16(seed=0):
    worst_qg, worst_sc, count = -math.inf, -math.inf, 0
    instances = [demo_pws(), square_1d()] + [inst for inst, _, _ in qg_suite(30, seed)]
    for j, inst in enumerate(instances):
        gt = inst.ground_truth
        rng = np.random.default_rng([seed, 16, j])
        for _ in range(20):
            x = rng.standard_normal(inst.n) * 10.0 ** rng.uniform(-3, 1)
            s = evaluate(inst, x)
            count += 1
            worst_qg = max(worst_qg, initial_lower_bound(s.fx, s.cut.gradient, gt.mu) - gt.fstar)
            if gt.strongly_convex:
                worst_sc = max(worst_sc, initial_lower_bound(s.fx, s.cut.gradient, gt.mu, strongly_convex=True) - gt.fstar)
    ok = worst_qg <= 0 and worst_sc <= 0
    return ok, f"{count} points; max QG bound - f* {worst_qg:.3e}, max strongly convex bound - f* {worst_sc:.3e}", {"qg": worst_qg, "sc": worst_sc}


CRITERIA = {
    1: ("demo reproduction", criterion_1),
    2: ("bridged three-point inequality", criterion_2),
    3: ("matching-pair contraction", criterion_3),
    4: ("linear convergence rate", criterion_4),
    5: ("apx-BL accuracy floor", criterion_5),
    6: ("gap reduction contract", criterion_6),
    7: ("BL-mu outer count and accuracy", criterion_7),
    8: ("W-gap properties", criterion_8),
    9: ("certificate soundness", criterion_9),
    10: ("no false negatives", criterion_10),
    11: ("Moreau chain", criterion_11),
    12: ("IPPM complexity and output", criterion_12),
    13: ("pfBL-mu restarts", criterion_13),
    14: ("pf-IPPM guesses and certificate", criterion_14),
    15: ("perturbed-cut smoothness transfer", criterion_15),
    16: ("initial lower bounds", criterion_16),
}


def run_criterion(number, seed=0):
    title, fn = CRITERIA[number]
    t0 = time.perf_counter()
    try:
        ok, detail, metrics = fn(seed)
    except Exception as exc:  # a crash is reported as a failure, not swallowed
        ok, detail, metrics = False, f"raised {type(exc).__name__}: {exc}", {}
    return CriterionResult(number, title, bool(ok), detail, metrics, time.perf_counter() - t0)


def run_suite(numbers=None, seed=0, echo=None):
    out = []
    for k in numbers or sorted(CRITERIA):
        res = run_criterion(k, seed)
        if echo is not None:
            echo(format_result(res))
        out.append(res)
    return out
