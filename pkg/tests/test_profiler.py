import numpy as np
import pytest

from kelvin_enclosure.fem import build_mesh, neumann_sin3, solve_neumann
from kelvin_enclosure.geometry import CrackSet, ProbingLine, SlabGeometry, s_sigma_analytic
from kelvin_enclosure.probe import IndicatorSamples, indicator_from_jump
from kelvin_enclosure.profiler import (MissingTip, Profile, TooFewSamples, detect_tips,
                                       profile_maxima, slope_estimate, sweep_profile)

TAU = np.round(np.arange(1.0, 5.0001, 0.1), 10)


def samples(values, floor=0.0):
    return IndicatorSamples((0.0, 1.0), TAU, np.asarray(values), np.full(TAU.shape, floor))


def test_slope_of_pure_exponential():
    kappa = 1.7
    slope, r2 = slope_estimate(samples(3.0 * np.exp(kappa * TAU) * np.exp(2j * TAU)))
    assert slope == pytest.approx(kappa, rel=1e-12)
    assert r2 == pytest.approx(1.0)


def test_floor_drops_samples_and_window():
    vals = np.exp(0.5 * TAU)
    s = samples(vals, floor=np.exp(0.5 * 3.0))
    assert s.valid.sum() == np.sum(TAU > 3.0 + 1e-12)
    assert slope_estimate(s)[0] == pytest.approx(0.5)
    slope, _ = slope_estimate(samples(np.exp(np.where(TAU < 3, 1.0, 2.0) * TAU)), window=(1.0, 2.5))
    assert slope == pytest.approx(1.0)
    with pytest.raises(TooFewSamples):
        slope_estimate(samples(vals, floor=1e9))


def synthetic_profile(peaks, xs=None):
    xs = np.round(np.arange(-4, 4.0001, 0.05), 10) if xs is None else xs
    phi = sum(np.exp(-((xs - p) / 0.1) ** 2) for p in peaks) + 0.1 * np.abs(xs) / 4
    return Profile(xs, phi, np.ones_like(phi))


def test_detect_nearest_maxima():
    prof = synthetic_profile([-2.5, -1.4, -1.0, 0.35])
    tips = detect_tips(prof, -1.25)
    assert (tips.x_left, tips.x_right) == (-1.4, -1.0)
    assert tips.gap == pytest.approx(0.4)


def test_missing_side_and_search_radius():
    prof = synthetic_profile([-1.5, 0.35])
    assert detect_tips(prof, -1.25).x_right == 0.35
    tips = detect_tips(prof, -1.25, search_radius=1.0)
    assert tips.x_left == -1.5 and tips.x_right is None and tips.gap is None
    with pytest.raises(MissingTip):
        detect_tips(prof, -1.25, search_radius=1.0, strict=True)


def test_plateau_resolution():
    xs = np.round(np.arange(-2, 2.0001, 0.05), 10)
    phi = np.zeros_like(xs)
    phi[(xs >= -1.0) & (xs <= -0.8)] = 1.0       # left plateau
    phi[(xs >= 0.6) & (xs <= 0.7)] = 1.0         # right plateau
    tips = detect_tips(Profile(xs, phi, phi), 0.0)
    assert tips.x_left == -1.0 and tips.x_right == 0.7


def test_edge_plateau_and_small_bumps_ignored():
    xs = np.round(np.arange(-2, 2.0001, 0.05), 10)
    phi = np.where(xs < -1.5, 1.0, 0.0)
    phi = phi + 0.001 * np.exp(-((xs - 0.5) / 0.1) ** 2)
    assert profile_maxima(Profile(xs, phi, phi)) == []


def test_nan_samples_do_not_break_detection():
    prof = synthetic_profile([-1.4, -1.0])
    phi = prof.phi.copy()
    phi[::17] = np.nan
    tips = detect_tips(Profile(prof.xi1_grid, phi, prof.fit_quality), -1.25)
    assert (tips.x_left, tips.x_right) == (-1.4, -1.0)


def tip_jump(cracks, n=100001):
    # leading tip term of the crack opening: 2 sqrt(distance to the nearest tip)
    out = []
    for lo, hi in cracks.intervals:
        x = np.linspace(lo, hi, n)
        r = np.full_like(x, np.inf)
        for t in cracks.tips:
            if lo - 1e-12 <= t <= hi + 1e-12:
                r = np.minimum(r, np.abs(x - t))
        out.append((x, 2 * np.sqrt(r)))
    return out


@pytest.mark.parametrize("xi", [(2.1, 0.3), (2.2, 0.4), (3.3, 0.4), (5.9, 0.3), (3.45, 0.25)])
def test_slope_matches_support_function_for_tip_jump(xi):
    cr = CrackSet.from_joined([(2.0, 3.5), (5.0, 6.0)], 0.2, 8.0)
    tau = np.round(np.arange(2.0, 5.0001, 0.1), 10)
    vals = indicator_from_jump(tip_jump(cr), cr, np.array(xi), tau)
    s = IndicatorSamples(xi, tau, vals, np.zeros_like(tau))
    slope, _ = slope_estimate(s)
    target = 1 / (2 * s_sigma_analytic(xi, cr))
    assert abs(slope / target - 1) < 0.1


def test_sweep_threads_match_serial():
    geom = SlabGeometry.centered(8.0, 0.4, 0.2)
    cr = CrackSet.from_joined([(2.5, 3.0)], 0.2, 8.0)
    m = build_mesh(geom, cr, target_elements=4000)
    cd = solve_neumann(m, neumann_sin3(m))
    xs = np.round(np.arange(-2.0, -0.5, 0.1), 10)
    a = sweep_profile(cd, geom, ProbingLine(), xs, TAU)
    b = sweep_profile(cd, geom, ProbingLine(), xs, TAU, threads=4)
    np.testing.assert_array_equal(a.phi, b.phi)
    assert np.all(np.isfinite(a.phi))
    with pytest.raises(ValueError):
        sweep_profile(cd, geom, ProbingLine(), xs[::-1], TAU)
