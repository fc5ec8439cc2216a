import math

import numpy as np
import pytest

from pwsbl.adaptive import iter_pf_bl_mu, pf_bl_mu, pf_ippm
from pwsbl.certify import moreau_bound_from_cert, validate_certificate
from pwsbl.gapred import bl_mu
from pwsbl.problems import BudgetExhausted, make_max_of_quadratics, make_weakly_convex_max
from pwsbl.proximal import moreau_residual


@pytest.fixture(scope="module")
def qg_instance():
    return make_max_of_quadratics(3, 3, 6.0, 1.0, seed=12), np.array([1.0, -1.2, 0.8])


def test_correct_guess_never_restarts(qg_instance):
    inst, x0 = qg_instance
    res = pf_bl_mu(inst, x0, 1.0, 5, 1e-6)
    assert res.restarts == 0
    assert inst.value(res.x) - inst.ground_truth.fstar <= 1e-6


def test_correct_guess_matches_bl_mu_path(qg_instance):
    inst, x0 = qg_instance
    ref = bl_mu(inst, x0, 1.0, 5, 1e-4)
    steps = []
    for step in iter_pf_bl_mu(inst, x0, 1.0, 5):
        steps.append(step)
        if len(steps) == ref.outer_iterations:
            break
    assert steps[-1].fbar == ref.fbar
    assert steps[-1].funder == ref.funder


def test_overestimate_halves_exactly(qg_instance):
    inst, x0 = qg_instance
    res = pf_bl_mu(inst, x0, 64.0, 5, 1e-6)
    assert res.restarts <= 7
    assert res.guesses == [64.0 / 2**i for i in range(len(res.guesses))]
    assert inst.value(res.x) - inst.ground_truth.fstar <= 1e-6


def test_budget_exhaustion_carries_best(qg_instance):
    inst, x0 = qg_instance
    with pytest.raises(BudgetExhausted) as exc:
        pf_bl_mu(inst, x0, 1.0, 5, 1e-9, budget=30)
    x, fbar = exc.value.best
    assert fbar == pytest.approx(inst.value(x))


def test_pf_ippm_accurate_guess():
    rho, eps = 1.0, 0.05
    inst = make_weakly_convex_max(4, 3, rho, seed=1)
    res = pf_ippm(inst, np.array([0.5, -0.5, 1.0]), rho, 6, eps)
    assert res.restarts == 0
    assert validate_certificate(res.certificate, inst.region) <= res.certificate.nu + 1e-8
    assert res.certificate.iota <= eps and res.certificate.nu <= eps


def test_pf_ippm_underestimate_doubles():
    rho, eps = 2.0, 0.05
    inst = make_weakly_convex_max(4, 3, rho, seed=2)
    res = pf_ippm(inst, np.array([1.0, 0.2, -0.7]), rho / 8, 6, eps)
    assert len(res.guesses) <= math.ceil(math.log2(8)) + 1
    assert res.guesses == [rho / 8 * 2**i for i in range(len(res.guesses))]
    r = max(res.rho, rho)
    residual = moreau_residual(inst, res.xbar, r)
    assert residual <= moreau_bound_from_cert(res.certificate, r) + 1e-8
    assert residual <= 2 * eps + 4 * eps * res.rho + 1e-8
