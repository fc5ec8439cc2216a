import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pwsbl.gapred import GapState, bl_mu, dp_update, empirical_smoothness, gap_reduction, initial_lower_bound
from pwsbl.problems import Oracle, OracleSample, make_max_of_quadratics, square_1d, Cut, evaluate


def _sample(inst, x):
    return evaluate(inst, np.atleast_1d(np.array(x, float)))


def test_empirical_smoothness_square():
    inst = square_1d()
    assert empirical_smoothness(_sample(inst, 0.0), _sample(inst, 1.0), 0.0) == pytest.approx(2.0)


def test_empirical_smoothness_clamps_at_zero():
    inst = square_1d()
    assert empirical_smoothness(_sample(inst, 0.0), _sample(inst, 1.0), 1.0) == 0.0


def test_empirical_smoothness_coincident_points():
    inst = square_1d()
    with pytest.raises(ValueError):
        empirical_smoothness(_sample(inst, 1.0), _sample(inst, 1.0), 0.0)


def _state_with(samples):
    return GapState(1.0, 0.0, samples[0].x, list(samples))


def _synthetic(xs, fxs, grads):
    return [OracleSample(np.array([x], float), float(f), Cut(np.array([x], float), float(f), np.array([g], float))) for x, f, g in zip(xs, fxs, grads)]


def test_dp_first_step():
    inst = square_1d()
    st_ = _state_with([_sample(inst, 1.0), _sample(inst, 0.0)])
    dp_update(st_, 0, 1, 0.0)
    assert st_.S_r[1] == pytest.approx(0.5)


def test_dp_zero_smoothness_is_unbounded_progress():
    # The cut at 0 lies on f at the next point: Ltilde = 0.
    samples = _synthetic([0.0, 1.0], [0.0, 1.0], [1.0, 1.0])
    st_ = _state_with(samples)
    dp_update(st_, 0, 2, 0.0)
    assert st_.S_r[1] == math.inf


def test_dp_coincident_points_add_nothing():
    samples = _synthetic([0.5, 0.5], [1.0, 1.0], [1.0, 1.0])
    st_ = _state_with(samples)
    dp_update(st_, 0, 2, 0.0)
    assert st_.S_r[1] == st_.S_l[0] == 0.0


def test_initial_lower_bound_square():
    assert initial_lower_bound(1.0, np.array([2.0]), 2.0) == pytest.approx(-3.0)
    assert initial_lower_bound(1.0, np.array([2.0]), 2.0, strongly_convex=True) == pytest.approx(0.0)


def test_first_level_is_one_third_up():
    inst = square_1d()
    res = gap_reduction(2.0, np.array([1.0]), 3.0, 0.0, 1, Oracle(inst), instance=inst)
    assert res.state.levels[0] == pytest.approx(1.0)


def test_gap_reduction_square_contract():
    inst = square_1d()
    res = gap_reduction(2.0, np.array([1.0]), 1.0, -1.0, 2, Oracle(inst), instance=inst)
    assert res.fbar - res.funder <= 4.0 / 3.0 + 1e-12
    assert res.funder <= 0.0


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_gap_reduction_keeps_a_valid_lower_bound(seed):
    rng = np.random.default_rng(seed)
    k, n = int(rng.integers(1, 5)), int(rng.integers(1, 5))
    L = float(rng.uniform(1, 10))
    mu = float(rng.uniform(0.1, 1.0)) * L
    inst = make_max_of_quadratics(k, n, L, mu, seed=seed % 1000)
    x0 = rng.standard_normal(n)
    s0 = evaluate(inst, x0)
    lb = initial_lower_bound(s0.fx, s0.cut.gradient, mu)
    funder = lb + rng.uniform() * (0.0 - lb)
    res = gap_reduction(mu, x0, s0.fx, funder, k + 1, Oracle(inst), sample0=s0, instance=inst)
    assert res.funder <= inst.ground_truth.fstar + 1e-10
    assert res.fbar - res.funder <= (2.0 / 3.0) * (s0.fx - funder) + 1e-12
    assert res.fbar == pytest.approx(inst.value(res.x))


@pytest.mark.parametrize("eps", [1e-3, 1e-6, 1e-9])
def test_bl_mu_outer_bound_and_accuracy(eps):
    inst = make_max_of_quadratics(3, 4, 10.0, 1.0, seed=4)
    x0 = np.full(4, 1.5)
    res = bl_mu(inst, x0, 1.0, 4, eps)
    assert res.outer_iterations <= math.ceil(math.log(res.delta0 / eps) / math.log(1.5)) + 1
    assert inst.value(res.x) - inst.ground_truth.fstar <= res.fbar - res.funder <= eps
