import json
import math

import numpy as np
import pytest

from kelvin_enclosure.oracle import (OracleCase, decay_rate, first_correction, in_limit_closedform,
                                     in_quadrature, in_quadrature_checked, in_quadrature_fixed,
                                     scaled_ratio, verify_decay_dichotomy, verify_tip_limit)

CASES = [OracleCase(1, 1.0, 0.0), OracleCase(2, 1.0, 0.0), OracleCase(1, 1.0, 0.8),
         OracleCase(1, 2.0, -0.8)]


def test_closed_form_simple_case():
    # n=1, s0=1, alpha=0: -i sqrt(2) Gamma(3/2) = -i sqrt(pi/2)
    assert in_limit_closedform(OracleCase()) == pytest.approx(-1j * math.sqrt(math.pi / 2))


def test_default_cutoff():
    c = OracleCase(1, 2.0, 0.3)
    assert c.eta_prime == pytest.approx(0.5 * 2.0 * (1 + math.sin(0.3)) / math.cos(0.3))


@pytest.mark.parametrize("kw", [dict(n=0), dict(n=1.5), dict(s0=0.0), dict(alpha=2.0),
                                dict(eta_prime=-1.0)])
def test_case_validation(kw):
    with pytest.raises(ValueError):
        OracleCase(**kw)


@pytest.mark.parametrize("case", CASES)
@pytest.mark.parametrize("tau", [8.0, 64.0, 100.0])
def test_quadrature_routes_agree(case, tau):
    a = in_quadrature(case, tau)
    b, err = in_quadrature_checked(case, tau)
    assert err < 1e-12 * abs(b)
    assert abs(a - b) < 1e-10 * abs(b)


def test_conjugate_route():
    case = OracleCase(1, 1.0, 0.4)
    v = in_quadrature_fixed(case, 20.0)
    assert in_quadrature_fixed(case, 20.0, conjugate=True) == pytest.approx(v.conjugate())


def test_zero_cutoff():
    assert in_quadrature(OracleCase(eta_prime=0.0), 10.0) == 0j


@pytest.mark.parametrize("case", CASES)
def test_first_correction_matches_quadrature(case):
    tau = 4000.0
    measured = tau * (scaled_ratio(case, tau) - 1)
    c1 = first_correction(case)
    assert abs(measured - c1) < 0.01 * abs(c1)


def test_second_tip_order_is_limited_by_first_correction():
    # |ratio - 1| at tau = 100 is set by |c1| / tau; for n = 2, |c1| = 15 / (2 sqrt 2)
    case = OracleCase(2, 1.0, 0.0)
    assert abs(first_correction(case)) == pytest.approx(3.75 * math.sqrt(2))
    err = abs(scaled_ratio(case, 100.0) - 1)
    assert err == pytest.approx(abs(first_correction(case)) / 100, rel=0.1)


def test_report_serialises():
    rep = verify_tip_limit(OracleCase(1, 1.0, 0.0))
    d = json.loads(rep.to_json())
    assert d["passed"] and d["tau"] == [8.0, 16.0, 32.0, 64.0, 100.0]
    assert "PASS" in rep.text()
    assert rep.rate < -0.75 and not rep.slow
    with pytest.raises(ValueError):
        verify_tip_limit(OracleCase(tau_list=(10.0, 5.0)))


def test_decay_rate_closed_form():
    # on the circle of radius s hanging below xi the rate vanishes
    xi, s = np.array([0.3, 1.0]), 0.4
    ang = np.array([-1.5, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0])   # avoids xi itself at pi/2
    pts = xi - [0, s] + s * np.stack([np.cos(ang), np.sin(ang)], 1)
    np.testing.assert_allclose(decay_rate(pts, xi, s), 0.0, atol=1e-12)


def test_dichotomy_random():
    rng = np.random.default_rng(0)
    xi, s = np.array([0.0, 1.0]), 0.6
    centre = xi - [0, s]
    r = s * np.sqrt(rng.uniform(0.01, 0.98, 500))
    th = rng.uniform(0, 2 * np.pi, 500)
    inside = centre + np.stack([r * np.cos(th), r * np.sin(th)], 1)
    r = s * rng.uniform(1.02, 5.0, 500)
    outside = centre + np.stack([r * np.cos(th), r * np.sin(th)], 1)
    rep = verify_decay_dichotomy(s, xi, inside, outside)
    assert rep.passed and rep.inside_ok == 500
    with pytest.raises(ValueError):
        verify_decay_dichotomy(s, xi, centre + [[s, 0.0]], outside)


def test_tau_zero_routes_agree():
    # at tau = 0 the integrand is algebraic: int r^(1/2) / (r + 1 + i)^2 dr
    case = OracleCase(1, 1.0, 0.0)
    a = in_quadrature(case, 0.0)
    b, _ = in_quadrature_checked(case, 0.0)
    assert abs(a - b) < 1e-10
    from scipy.integrate import quad
    re = quad(lambda r: (np.sqrt(r) / (r + 1 + 1j) ** 2).real, 0, case.eta_prime, epsabs=1e-14)[0]
    im = quad(lambda r: (np.sqrt(r) / (r + 1 + 1j) ** 2).imag, 0, case.eta_prime, epsabs=1e-14)[0]
    assert abs(a - complex(re, im)) < 1e-10
