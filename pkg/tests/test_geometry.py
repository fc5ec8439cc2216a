"""Geometry solvers, cross-checked against cvxpy where an independent answer helps."""

import cvxpy as cp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from pwsbl.geometry import (
    FeasibleRegion,
    eval_wgap,
    min_max_affine,
    min_norm_hull,
    project_onto_level_set,
    project_polyhedron,
    project_region,
    solve_min_max_affine,
)
from pwsbl.problems import Cut

from _oracles import solve_tight

def cut(center, value, grad):
    return Cut(np.atleast_1d(np.array(center, float)), float(value), np.atleast_1d(np.array(grad, float)))


def test_project_region_basic_shapes():
    assert_allclose(project_region(FeasibleRegion.whole_space(2), np.array([3.0, -1.0])), [3.0, -1.0])
    assert_allclose(project_region(FeasibleRegion.box([0, 0], [1, 1]), np.array([2.0, 0.5])), [1.0, 0.5])
    assert_allclose(project_region(FeasibleRegion.ball([0, 0], 1.0), np.array([0.0, 2.0])), [0.0, 1.0])


def test_halfspace_projection():
    res = project_onto_level_set(np.array([2.0, 0.0]), [cut([0, 0], 0.0, [1, 0])], 1.0, FeasibleRegion.whole_space(2))
    assert res.feasible
    assert_allclose(res.point, [1.0, 0.0], atol=1e-14)


def test_square_cut_level_zero():
    # Support of x^2 at 1 is 2x - 1; the zero level set is x <= 1/2.
    res = project_onto_level_set(np.array([1.0]), [cut([1.0], 1.0, [2.0])], 0.0, FeasibleRegion.whole_space(1))
    assert_allclose(res.point, [0.5], atol=1e-14)


@pytest.mark.parametrize("y", [-3.0, 0.0, 0.1, 5.0])
def test_disjoint_halflines_are_infeasible(y):
    # x >= 0.2 and x <= -0.2 written as cuts below level 0.
    cuts = [cut([0.0], 0.2, [-1.0]), cut([0.0], 0.2, [1.0])]
    res = project_onto_level_set(np.array([y]), cuts, 0.0, FeasibleRegion.whole_space(1))
    assert not res.feasible


def test_min_max_examples():
    ball = (np.array([1.0]), 1.0)
    assert min_max_affine([cut([0.0], 0.0, [1.0])], FeasibleRegion.whole_space(1), ball) == pytest.approx(0.0, abs=1e-12)
    assert min_max_affine([cut([0.0], 0.0, [1.0]), cut([0.0], 0.0, [-1.0])], FeasibleRegion.whole_space(1)) == pytest.approx(0.0, abs=1e-12)
    assert min_max_affine([cut([0.0, 0.0], 1.0, [1.0, 2.0])], FeasibleRegion.whole_space(2)) == -np.inf


def test_wgap_examples():
    whole = FeasibleRegion.whole_space(2)
    g = np.array([3.0, 4.0])
    for iota in (0.01, 1.0, 7.0):
        assert eval_wgap(np.zeros(2), [cut([0, 0], 2.0, g)], iota, whole) == pytest.approx(5.0, rel=1e-9)
    abs_cuts = [cut([0.0], 0.0, [1.0]), cut([0.0], 0.0, [-1.0])]
    assert eval_wgap(np.zeros(1), abs_cuts, 1.0, FeasibleRegion.whole_space(1)) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), r1=st.floats(0.05, 3.0), r2=st.floats(0.05, 3.0))
def test_wgap_is_monotone_in_radius(seed, r1, r2):
    rng = np.random.default_rng(seed)
    n, k = 3, 5
    cuts = [cut(rng.standard_normal(n), rng.standard_normal(), rng.standard_normal(n)) for _ in range(k)]
    center = rng.standard_normal(n)
    lo, hi = sorted((r1, r2))
    whole = FeasibleRegion.whole_space(n)
    assert eval_wgap(center, cuts, lo, whole) >= eval_wgap(center, cuts, hi, whole) - 1e-8


def _cvx_projection(y, A, b):
    x = cp.Variable(y.size)
    prob = cp.Problem(cp.Minimize(cp.sum_squares(x - y)), [A @ x <= b])
    solve_tight(prob)
    return prob.status, x.value


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), m=st.integers(1, 8), n=st.integers(1, 6))
def test_polyhedron_projection_matches_cvxpy(seed, m, n):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    b = rng.uniform(0.1, 1.0, m)  # origin strictly feasible
    y = 3.0 * rng.standard_normal(n)
    res = project_polyhedron(y, A, b)
    status, ref = _cvx_projection(y, A, b)
    assert status == "optimal"
    assert res.feasible
    assert np.max(A @ res.x - b) <= 1e-9
    assert np.sum((res.x - y) ** 2) <= np.sum((ref - y) ** 2) + 1e-9
    assert_allclose(res.x, ref, atol=1e-5)
    # Multipliers reproduce the projection.
    assert_allclose(y - A.T @ res.multipliers, res.x, atol=1e-8)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(1, 4))
def test_infeasible_polyhedron_certificate(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(n)
    A = np.vstack([a, -a, rng.standard_normal((2, n))])
    b = np.array([-1.0, -1.0, 5.0, 5.0])  # a.x <= -1 and a.x >= 1
    res = project_polyhedron(rng.standard_normal(n), A, b)
    assert not res.feasible
    u = res.certificate
    assert np.all(u >= 0)
    assert b @ u < 0
    assert np.linalg.norm(A.T @ u) <= 1e-8 * max(1.0, np.abs(b @ u))


@pytest.mark.parametrize("kind", ["box", "ball"])
def test_level_projection_with_region_matches_cvxpy(kind):
    rng = np.random.default_rng(3)
    n = 3
    region = FeasibleRegion.box(-np.ones(n), np.ones(n)) if kind == "box" else FeasibleRegion.ball(np.zeros(n), 1.0)
    for _ in range(10):
        cuts = [cut(rng.uniform(-1, 1, n), rng.uniform(0, 1), rng.standard_normal(n)) for _ in range(4)]
        level = 0.5
        y = 2.5 * rng.standard_normal(n)
        res = project_onto_level_set(y, cuts, level, region)
        x = cp.Variable(n)
        cons = [c.value + c.gradient @ (x - c.center) <= level for c in cuts]
        cons += [x >= -1, x <= 1] if kind == "box" else [cp.norm(x) <= 1]
        prob = cp.Problem(cp.Minimize(cp.sum_squares(x - y)), cons)
        solve_tight(prob)
        if prob.status == "infeasible":
            assert not res.feasible
        else:
            assert res.feasible
            assert region.contains(res.point, 1e-12)
            assert max(c.support(res.point) for c in cuts) <= level + 1e-12
            assert np.sum((res.point - y) ** 2) <= prob.value + 1e-9
            assert_allclose(res.point, x.value, atol=1e-6)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_min_max_over_ball_matches_cvxpy(seed):
    rng = np.random.default_rng(seed)
    n, k = 3, 4
    cuts = [cut(rng.standard_normal(n), rng.standard_normal(), rng.standard_normal(n)) for _ in range(k)]
    center, radius = rng.standard_normal(n), float(rng.uniform(0.1, 2.0))
    res = solve_min_max_affine(cuts, FeasibleRegion.whole_space(n), (center, radius))
    x = cp.Variable(n)
    obj = cp.max(cp.hstack([c.value + c.gradient @ (x - c.center) for c in cuts]))
    prob = cp.Problem(cp.Minimize(obj), [cp.norm(x - center) <= radius])
    solve_tight(prob)
    assert res.value == pytest.approx(prob.value, abs=1e-6)
    assert res.value <= res.upper + 1e-12


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), m=st.integers(1, 7), n=st.integers(1, 5))
def test_min_norm_hull_matches_cvxpy(seed, m, n):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((m, n)) + rng.standard_normal(n)
    lam, nrm = min_norm_hull(G)
    assert np.all(lam >= -1e-12)
    assert lam.sum() == pytest.approx(1.0)
    w = cp.Variable(m)
    prob = cp.Problem(cp.Minimize(cp.norm(G.T @ w)), [w >= 0, cp.sum(w) == 1])
    solve_tight(prob)
    assert nrm == pytest.approx(prob.value, abs=1e-6)
