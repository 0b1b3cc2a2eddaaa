import warnings

import numpy as np
import pytest

from kelvin_enclosure.fem import (build_mesh, crack_jump, neumann_from_function, neumann_sin3,
                                  solve_neumann)
from kelvin_enclosure.geometry import CrackSet, SlabGeometry
from kelvin_enclosure.probe import (ProbeConfig, UntrustedCutoffWarning, add_noise, dv_dnu,
                                    dv_dx2, indicator, indicator_from_jump, indicator_partial,
                                    v_tau)

TAU = np.round(np.arange(1.0, 5.0001, 0.5), 10)


def kelvin_exponent(x, xi, tau):
    # independent form: exp(-tau (x - xi).(e2 + i e1) / |x - xi|^2)
    d = np.asarray(x) - np.asarray(xi)
    r2 = (d**2).sum(-1)
    return np.exp(-np.multiply.outer(tau, (d[..., 1] + 1j * d[..., 0]) / r2))


def test_v_matches_vector_form():
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 2, size=(50, 2))
    xi = np.array([1.0, 3.0])
    np.testing.assert_allclose(v_tau(x, xi, TAU), kelvin_exponent(x, xi, TAU), rtol=1e-13)


def test_derivatives_match_finite_differences():
    rng = np.random.default_rng(2)
    x = rng.uniform(0, 2, size=(20, 2))
    xi = np.array([0.7, 2.5])
    h = 1e-6
    e1, e2 = np.array([h, 0.0]), np.array([0.0, h])
    d1 = (v_tau(x + e1, xi, TAU) - v_tau(x - e1, xi, TAU)) / (2 * h)
    d2 = (v_tau(x + e2, xi, TAU) - v_tau(x - e2, xi, TAU)) / (2 * h)
    np.testing.assert_allclose(dv_dx2(x, xi, TAU), d2, rtol=1e-6)
    for tag, (n1, n2) in {"bottom": (0, -1), "right": (1, 0), "top": (0, 1),
                          "left": (-1, 0)}.items():
        np.testing.assert_allclose(dv_dnu(x, tag, xi, TAU), n1 * d1 + n2 * d2, rtol=1e-6)


def test_v_is_harmonic():
    x = np.array([[0.3, 0.1], [1.5, 0.35]])
    xi = np.array([1.0, 1.2])
    h = 1e-3
    lap = sum(v_tau(x + s * e, xi, 2.0) for e in np.eye(2) * h for s in (1, -1)) \
        - 4 * v_tau(x, xi, 2.0)
    # five-point stencil: O(h^2) truncation only
    assert np.all(np.abs(lap / h**2) < 1e-3 * np.abs(v_tau(x, xi, 2.0)))


def test_dv_dnu_edge_check():
    with pytest.raises(ValueError):
        dv_dnu(np.array([[0.5, 0.3]]), "top", (0.0, 2.0), 1.0, a=1.0, b=0.4)
    with pytest.raises(ValueError):
        dv_dnu(np.array([[0.5, 0.4]]), "diagonal", (0.0, 2.0), 1.0)
    with pytest.raises(ValueError):
        v_tau(np.array([[0.5, 0.4]]), (0.5, 0.4), 1.0)


@pytest.fixture(scope="module")
def slab():
    geom = SlabGeometry.centered(8.0, 0.4, 0.2)
    cr = CrackSet.from_joined([(2.5, 3.0)], 0.2, 8.0)
    m = build_mesh(geom, cr, target_elements=8000)
    return geom, cr, solve_neumann(m, neumann_sin3(m))


def test_green_identity_for_harmonic_pair():
    # exact Cauchy pair of a harmonic function: the indicator reduces to
    # quadrature error, far below the integrand scale
    geom = SlabGeometry(2.0, 0.4, 0.2)
    cr = CrackSet.from_joined([(0.0, 2.0)], 0.2, 2.0)
    m = build_mesh(geom, cr, target_elements=8000)

    def flux(p, n):
        return (-np.sin(p[:, 0]) * np.cosh(p[:, 1]) * n[0]
                + np.cos(p[:, 0]) * np.sinh(p[:, 1]) * n[1])

    g = neumann_from_function(m, flux)
    p = m.nodes[m.outer_nodes]
    u = np.cos(p[:, 0]) * np.cosh(p[:, 1])
    cd = solve_neumann(m, g).replace_trace(u)
    s = indicator(cd, ProbeConfig((1.0, 1.0), TAU))
    scale = s.floor / 1e-14
    assert np.all(np.abs(s.values) < 1e-4 * scale)


def test_gauge_invariance(slab):
    _, _, cd = slab
    cfg = ProbeConfig((3.1, 0.9), TAU)
    base = indicator(cd, cfg).values
    for C in (1.0, -1e3):
        shifted = indicator(cd.replace_trace(cd.u_trace + C), cfg).values
        assert np.max(np.abs(shifted - base) / np.abs(base)) < 1e-10


def test_probe_inside_slab_rejected(slab):
    _, _, cd = slab
    with pytest.raises(ValueError):
        indicator(cd, ProbeConfig((3.0, 0.3), TAU))


def test_tau_grid_validation():
    with pytest.raises(ValueError):
        ProbeConfig((0.0, 1.0), np.array([2.0, 1.0]))
    with pytest.raises(ValueError):
        ProbeConfig((0.0, 1.0), np.array([-1.0, 1.0]))


def test_partial_indicator_with_full_cutoff_equals_full(slab):
    geom, _, cd = slab
    cfg = ProbeConfig((3.1, 0.9), TAU, delta=1.0)
    np.testing.assert_allclose(indicator_partial(cd, cfg, geom.c).values,
                               indicator(cd, cfg).values, rtol=1e-12)


def test_partial_indicator_flags_small_cutoff(slab):
    geom, _, cd = slab
    cfg = ProbeConfig((3.1, 0.9), TAU, delta=0.01)
    with pytest.warns(UntrustedCutoffWarning):
        s = indicator_partial(cd, cfg, geom.c, bound_m=0.5)
    assert not s.trusted
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        s = indicator_partial(cd, ProbeConfig((3.1, 0.9), TAU, delta=0.15), geom.c, bound_m=0.3)
    assert s.trusted


def test_jump_representation_close(slab):
    _, cr, cd = slab
    xi = np.array([2.7, 0.8])
    tau = TAU[TAU <= 3]
    full = indicator(cd, ProbeConfig(tuple(xi), tau)).values
    jump = indicator_from_jump(crack_jump(cd, cr), cr, xi, tau)
    assert np.max(np.abs(jump - full) / np.abs(full)) < 0.05


def test_noise_reproducible_and_centred(slab):
    _, _, cd = slab
    a = add_noise(cd, 2e-4, seed=7)
    b = add_noise(cd, 2e-4, seed=7)
    c = add_noise(cd, 2e-4, seed=8)
    np.testing.assert_array_equal(a.u_trace, b.u_trace)
    assert not np.array_equal(a.u_trace, c.u_trace)
    assert abs(cd.mesh.boundary_weights @ a.u_trace) < 1e-12
    np.testing.assert_array_equal(a.g.values, cd.g.values)
    std = np.std(a.u_trace - cd.u_trace)
    assert 0.5 < std / (2e-4 * np.abs(cd.u_trace).max()) < 1.5
    assert add_noise(cd, 0.0) is cd
    with pytest.raises(ValueError):
        add_noise(cd, -1.0)
