import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pwsbl.certify import (
    UNBOUNDED,
    WCertificate,
    certificate_distance_bound,
    certificate_gap_bound,
    goldstein_norm_from_cert,
    moreau_bound_from_cert,
    transfer_cert_to_f,
    validate_certificate,
    wcert_search,
)
from pwsbl.geometry import FeasibleRegion
from pwsbl.problems import Cut, Oracle, OracleSample, abs_1d, make_max_of_quadratics, make_weakly_convex_max, square_1d
from pwsbl.proximal import ProxOracle, ProxSurrogate, moreau_residual


def _cert(iota, nu, delta=0.1, cuts=None):
    cuts = cuts or [Cut(np.zeros(1), 0.0, np.array([1.0]))]
    samples = [OracleSample(c.center, c.value, c) for c in cuts]
    return WCertificate(np.zeros(1), samples[0], samples[1:], iota, nu, delta)


def test_abs_hand_trace():
    cert, info = wcert_search(Oracle(abs_1d()), np.zeros(1), 0.1, 1, return_info=True)
    assert info["level"] == pytest.approx(-0.2)
    # First projection moves to the level of the left subgradient cut -x.
    assert cert.points[0].x[0] == pytest.approx(0.2)
    assert cert.unbounded and cert.termination == "infeasible"
    assert certificate_gap_bound(cert, 1.0) == pytest.approx(0.2)


@pytest.mark.parametrize("delta", [1e-6, 1e-3, 0.5, 10.0])
def test_search_at_minimizer_never_false(delta):
    assert wcert_search(Oracle(square_1d()), np.zeros(1), delta, 3) is not False


def test_search_distances_do_not_decrease():
    inst = make_max_of_quadratics(4, 3, 8.0, 1.0, seed=3)
    for x in np.random.default_rng(0).standard_normal((10, 3)):
        res = wcert_search(Oracle(inst), x, 0.5, 6, return_info=True)
        d = res[1]["dists"]
        assert all(b >= a - 1e-12 for a, b in zip(d, d[1:]))


def test_formula_examples():
    assert certificate_gap_bound(_cert(1.0, 0.1), 2.0) == pytest.approx(0.1)
    assert certificate_gap_bound(_cert(UNBOUNDED, 0.0, delta=0.1), 2.0) == pytest.approx(0.2)
    assert certificate_distance_bound(_cert(0.01, 0.1), 2.0) == pytest.approx(0.05)
    assert certificate_distance_bound(_cert(0.3, 0.0), 2.0) == pytest.approx(0.3)
    assert moreau_bound_from_cert(_cert(0.05, 0.1), 1.0) == pytest.approx(0.4)
    assert moreau_bound_from_cert(_cert(1e-12, 0.1), 1.0) == pytest.approx(0.2)


def test_single_cut_validation_is_gradient_norm():
    cut = Cut(np.zeros(2), 1.0, np.array([0.6, 0.8]))
    c = WCertificate(np.zeros(2), OracleSample(np.zeros(2), 1.0, cut), [], 0.7, 1.0, 0.1)
    assert validate_certificate(c, FeasibleRegion.whole_space(2)) == pytest.approx(1.0)
    assert goldstein_norm_from_cert(c) == pytest.approx(1.0)


def test_goldstein_of_abs_cuts():
    cuts = [Cut(np.zeros(1), 0.0, np.array([1.0])), Cut(np.zeros(1), 0.0, np.array([-1.0]))]
    assert goldstein_norm_from_cert(_cert(1.0, 0.0, cuts=cuts)) == pytest.approx(0.0, abs=1e-12)


def test_transfer_parameters():
    base = OracleSample(np.zeros(1), 0.0, Cut(np.zeros(1), 0.0, np.ones(1)))
    wrapped = OracleSample(np.zeros(1), 0.0, Cut(np.zeros(1), 0.0, np.ones(1)), base=base)
    c = WCertificate(np.zeros(1), wrapped, [], 0.05, 0.2, 0.1)
    f_cert = transfer_cert_to_f(c, 1.0)
    assert (f_cert.iota, f_cert.nu) == (0.05, 0.4)
    with pytest.raises(ValueError):
        transfer_cert_to_f(WCertificate(np.zeros(1), wrapped, [], 0.5, 0.2, 0.1), 1.0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), delta=st.floats(1e-4, 1.0))
def test_convex_certificates_validate_and_bound_the_gap(seed, delta):
    rng = np.random.default_rng(seed)
    mu = 1.0
    inst = make_max_of_quadratics(int(rng.integers(1, 5)), 3, 6.0, mu, seed=seed % 500)
    x = rng.standard_normal(3) * 0.3
    cert = wcert_search(Oracle(inst), x, delta, 5)
    gap = inst.value(x) - inst.ground_truth.fstar
    if cert is False:
        assert gap > delta  # a False answer is only allowed when delta was too small
        return
    region = FeasibleRegion.whole_space(3)
    radius = 1.0 if cert.unbounded else cert.iota
    assert validate_certificate(cert, region, radius=radius) <= cert.nu_at(radius) + 1e-8
    if gap <= delta:
        assert certificate_gap_bound(cert, mu) >= gap - 1e-10
        if not cert.unbounded:
            assert certificate_distance_bound(cert, mu) >= inst.dist_to_solution(x) - 1e-10
            assert goldstein_norm_from_cert(cert) <= cert.nu + 1e-8


def test_transferred_surrogate_certificate_validates():
    rho = 1.0
    found = 0
    for seed in range(6):
        inst = make_weakly_convex_max(4, 3, rho, seed=seed)
        xbar = np.random.default_rng(seed).uniform(-1, 1, 3)
        sur = ProxSurrogate(inst, xbar, 2.0 * rho)
        oracle = ProxOracle(sur, Oracle(inst))
        delta = 0.05
        cert = wcert_search(oracle, xbar, delta, 6, math.sqrt(delta / rho))
        if cert is False or cert.unbounded or cert.nu < 2 * cert.iota * rho:
            continue
        f_cert = transfer_cert_to_f(cert, rho)
        assert validate_certificate(f_cert, inst.region) <= f_cert.nu + 1e-8
        assert moreau_residual(inst, xbar, rho) <= moreau_bound_from_cert(f_cert, rho) + 1e-8
        found += 1
    assert found > 0
