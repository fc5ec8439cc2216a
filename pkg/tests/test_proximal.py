import cvxpy as cp
import numpy as np
import pytest
from numpy.testing import assert_allclose

from pwsbl.problems import abs_1d, make_max_of_quadratics, make_weakly_convex_max, query_rng, zero_function
from pwsbl.proximal import ProxSurrogate, ippm, moreau_residual, prox_oracle

from _oracles import solve_tight


def test_prox_cut_of_zero_function():
    sur = ProxSurrogate(zero_function(1), np.zeros(1), 1.0)
    s = prox_oracle(sur, np.array([1.0]))
    xs = np.linspace(-2, 2, 9)
    assert_allclose(s.cut.support_many(xs[:, None]), 2 * xs - 1, atol=1e-14)


def test_surrogate_equals_f_at_center():
    inst = make_weakly_convex_max(3, 2, 1.0, seed=2)
    c = np.array([0.3, -0.4])
    assert ProxSurrogate(inst, c, 1.0).value(c) == inst.value(c)


@pytest.mark.parametrize("seed", range(4))
def test_surrogate_cuts_are_global_minorants(seed):
    rho = 1.0
    inst = make_weakly_convex_max(3, 2, rho, seed=seed)
    rng = np.random.default_rng(seed)
    sur = ProxSurrogate(inst, rng.uniform(-1, 1, 2), rho)
    g = np.linspace(-2, 2, 81)
    X = np.stack(np.meshgrid(g, g), axis=-1).reshape(-1, 2)
    P = np.array([sur.value(x) for x in X])
    for q in range(5):
        s = prox_oracle(sur, rng.uniform(-2, 2, 2), 0.05, query_rng(seed, q))
        assert np.all(s.cut.support_many(X) <= P + 1e-10)


def test_moreau_residual_of_abs():
    assert moreau_residual(abs_1d(), np.array([2.0]), 1.0) == pytest.approx(0.5, abs=1e-9)


def test_moreau_residual_vanishes_at_smooth_minimizer():
    inst = make_max_of_quadratics(1, 3, 4.0, 4.0, seed=0)
    assert moreau_residual(inst, inst.ground_truth.xstar, 1.0) <= 1e-9


def test_moreau_residual_matches_cvxpy_prox():
    inst = make_max_of_quadratics(3, 3, 5.0, 1.0, seed=6)
    rho = 1.0
    xbar = np.array([1.0, -0.5, 0.7])
    x = cp.Variable(3)
    pieces = [0.5 * cp.quad_form(x, H) + l @ x + c for H, l, c in zip(inst.hess, inst.lin, inst.const)]
    prob = cp.Problem(cp.Minimize(cp.max(cp.hstack(pieces)) + rho * cp.sum_squares(x - xbar)))
    solve_tight(prob)
    ref = rho * float(np.linalg.norm(xbar - x.value))
    assert moreau_residual(inst, xbar, rho) == pytest.approx(ref, abs=1e-5)


def test_ippm_stationary_start_stops_immediately():
    inst = make_max_of_quadratics(3, 2, 5.0, 1.0, seed=1)
    res = ippm(inst, inst.ground_truth.xstar, 1.0, 4, 1e-3)
    assert res.outer_iterations <= 1
    assert moreau_residual(inst, res.xbar, 1.0) <= 1e-3


@pytest.mark.parametrize("seed", range(3))
def test_ippm_descent_and_output(seed):
    rho, eps = 1.0, 0.05
    inst = make_weakly_convex_max(4, 3, rho, seed=seed)
    x0 = np.random.default_rng(seed).uniform(-1.5, 1.5, 3)
    res = ippm(inst, x0, rho, 6, eps)
    for a, b in zip(res.steps, res.steps[1:]):
        assert a.P0 - b.P0 >= a.delta_bar / 2 - 1e-10
    assert moreau_residual(inst, res.xbar, rho) <= eps + 1e-6
