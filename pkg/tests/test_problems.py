import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from pwsbl.problems import (
    DomainError,
    Oracle,
    abs_1d,
    build_instance,
    delta_for_radius,
    demo_pws,
    evaluate,
    instance_from_json,
    instance_to_json,
    make_max_of_quadratics,
    make_weakly_convex_max,
    piece_label,
    query_rng,
    radius_for_delta,
    square_1d,
)
from pwsbl.geometry import FeasibleRegion


def test_abs_kink_uses_left_subgradient():
    s = evaluate(abs_1d(), np.array([0.0]))
    assert s.fx == 0.0
    assert_allclose(s.cut.gradient, [-1.0])
    assert s.piece == 1


def test_square_cut_at_one():
    s = evaluate(square_1d(), np.array([1.0]))
    assert s.cut.value == 1.0
    assert_allclose(s.cut.gradient, [2.0])


def test_perturbed_abs_cut_is_a_global_minorant():
    inst = abs_1d()
    grid = np.linspace(-1.0, 1.0, 2001)
    for q in range(50):
        s = evaluate(inst, np.array([0.0]), 0.1, query_rng(7, q))
        assert s.cut.gradient[0] in (-1.0, 1.0)
        assert abs(s.cut.center[0]) <= 0.1
        support = s.cut.support_many(grid[:, None])
        assert np.all(support <= np.abs(grid) + 1e-15)


def test_perturbation_is_reproducible_per_query_index():
    inst = make_max_of_quadratics(3, 4, 5.0, 1.0, seed=2)
    a = Oracle(inst, 0.05, seed=11)
    b = Oracle(inst, 0.05, seed=11)
    x = np.ones(4)
    for _ in range(5):
        sa, sb = a(x), b(x)
        assert_allclose(sa.cut.center, sb.cut.center)
    assert a.calls == 5


def test_single_piece_generator_is_a_parabola():
    inst = make_max_of_quadratics(1, 1, 2.0, 2.0, seed=0)
    xs = np.linspace(-3, 3, 13)
    assert_allclose(inst.values(xs[:, None]), xs**2, atol=1e-12)
    assert inst.ground_truth.fstar == 0.0
    assert_allclose(inst.ground_truth.xstar, [0.0])


def test_tie_break_prefers_lowest_index():
    inst = demo_pws()
    assert piece_label(inst, np.array([0.0, 3.0])) == 1
    assert piece_label(inst, np.array([-1.0, 5.0])) == 1
    assert piece_label(inst, np.array([0.5, 0.0])) == 2


def test_max_of_quadratics_tie_point_is_piece_one():
    inst = make_max_of_quadratics(2, 2, 4.0, 1.0, seed=3)
    rng = np.random.default_rng(0)
    # Bisect along a segment joining strict argmax regions of pieces 1 and 2.
    pts = rng.uniform(-2, 2, (4000, 2))
    lab = np.array([piece_label(inst, p) for p in pts])
    a, b = pts[lab == 1][0], pts[lab == 2][0]
    for _ in range(200):
        mid = 0.5 * (a + b)
        if piece_label(inst, mid) == 1:
            a = mid
        else:
            b = mid
    v = inst.piece_values(a)
    assert abs(v[0] - v[1]) < 1e-9
    assert piece_label(inst, a) == 1


def test_strict_argmax_label():
    inst = make_max_of_quadratics(3, 2, 4.0, 1.0, seed=5)
    rng = np.random.default_rng(1)
    for p in rng.uniform(-3, 3, (200, 2)):
        v = inst.piece_values(p)
        if np.sort(v)[-1] - np.sort(v)[-2] > 1e-6:
            assert piece_label(inst, p) == int(np.argmax(v)) + 1


@pytest.mark.parametrize("seed", range(6))
def test_quadratic_growth_on_grid(seed):
    mu = 1.0
    inst = make_max_of_quadratics(4, 2, 10.0, mu, seed=seed)
    g = np.linspace(-3, 3, 121)
    X = np.stack(np.meshgrid(g, g), axis=-1).reshape(-1, 2)
    gap = inst.values(X) - inst.ground_truth.fstar
    dist2 = np.sum((X - inst.ground_truth.xstar) ** 2, axis=1)
    assert np.all(gap >= 0.5 * mu * dist2 - 1e-12)


def test_weakly_convex_single_piece_is_concave_quadratic():
    rho = 1.5
    inst = make_weakly_convex_max(1, 3, rho, seed=0)
    H = inst.hess[0]
    assert np.max(np.linalg.eigvalsh(H)) <= 1e-12
    # Adding rho |x - c|^2 leaves a convex function.
    assert np.min(np.linalg.eigvalsh(H + 2.0 * rho * np.eye(3))) >= -1e-12


def test_weakly_convex_curvature_finite_differences():
    rho = 2.0
    inst = make_weakly_convex_max(2, 1, rho, seed=4)
    xs = np.linspace(-1.9, 1.9, 3801)
    h = 1e-3
    f = inst.values(xs[:, None])
    fp = inst.values((xs + h)[:, None])
    fm = inst.values((xs - h)[:, None])
    labels = np.array([piece_label(inst, np.array([x])) for x in xs])
    same = np.array([piece_label(inst, np.array([x - h])) == piece_label(inst, np.array([x + h])) == lab for x, lab in zip(xs, labels)])
    second = (fp - 2 * f + fm) / h**2
    assert np.all(second[same] >= -2.0 * rho - 1e-4)
    assert not np.all(same)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), t=st.floats(0.0, 1.0))
def test_prox_objective_is_strongly_convex_along_segments(seed, t):
    rho = 1.0
    inst = make_weakly_convex_max(3, 3, rho, seed=seed % 17)
    rng = np.random.default_rng(seed)
    c, a, b = rng.uniform(-2, 2, (3, 3))

    def F(x):
        return inst.value(x) + rho * float(np.sum((x - c) ** 2))

    m = t * a + (1 - t) * b
    gap = t * F(a) + (1 - t) * F(b) - F(m)
    assert gap >= 0.5 * rho * t * (1 - t) * float(np.sum((a - b) ** 2)) - 1e-9


def test_demo_values():
    inst = demo_pws()
    assert inst.value(np.zeros(2)) == 0.0
    assert_allclose(inst.value(np.array([1e-4, 1e-2])), 2.0001e-4, rtol=1e-12)


def test_domain_error_outside_box():
    inst = make_max_of_quadratics(2, 2, 4.0, 1.0).with_region(FeasibleRegion.box([-1, -1], [1, 1]))
    with pytest.raises(DomainError):
        evaluate(inst, np.array([2.0, 0.0]))


def test_radius_delta_roundtrip_is_conservative():
    L, M = 10.0, 5.0
    r = radius_for_delta(1e-3, L)
    assert 4 * L * r * r <= 1e-3 / 2 + 1e-18
    assert delta_for_radius(r, L, M) == pytest.approx(2 * M * r + 4 * L * r * r)


def test_instance_json_roundtrip():
    inst = make_max_of_quadratics(3, 4, 6.0, 1.0, seed=9)
    back = instance_from_json(instance_to_json(inst))
    x = np.linspace(-1, 1, 4)
    assert back.value(x) == inst.value(x)
    assert back.ground_truth.fstar == inst.ground_truth.fstar


def test_unknown_generator():
    with pytest.raises(KeyError):
        build_instance("nope")
