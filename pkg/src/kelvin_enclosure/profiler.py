"""Slope profiles along the probing line and crack-tip picking."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .fem import CauchyData
from .geometry import ProbingLine, SlabGeometry, gamma_eps
from .probe import IndicatorSamples, ProbeConfig, indicator

log = logging.getLogger(__name__)


class TooFewSamples(ValueError):
    pass


class MissingTip(LookupError):
    pass


def slope_estimate(samples: IndicatorSamples, min_valid: int = 3,
                   window: tuple[float, float] | None = None):
    """Least-squares slope of ``log|I|`` against ``tau`` and its R^2.

    Samples under the magnitude floor are dropped; ``window`` optionally
    restricts the fit to ``lo <= tau <= hi``.
    """
    tau = np.asarray(samples.tau, dtype=float)
    keep = samples.valid
    if window is not None:
        keep = keep & (tau >= window[0]) & (tau <= window[1])
    if keep.sum() < min_valid:
        raise TooFewSamples(f"only {int(keep.sum())} valid samples")
    t = tau[keep]
    y = samples.log_abs[keep]
    tc = t - t.mean()
    slope = float(tc @ (y - y.mean()) / (tc @ tc))
    resid = y - y.mean() - slope * tc
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return slope, r2


@dataclass(frozen=True, eq=False)
class Profile:
    xi1_grid: np.ndarray      # user frame
    phi: np.ndarray
    fit_quality: np.ndarray
    line: ProbingLine | None = None

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.phi)


def sweep_profile(cauchy: CauchyData, geom: SlabGeometry, line: ProbingLine,
                  xi1_grid, tau_grid, window=None, threads: int = 1) -> Profile:
    """Slope of ``log|I|`` at each probe position ``(xi1, height(xi1))``.

    ``xi1_grid`` is in the user frame.  Positions whose fit fails keep
    ``nan`` and the sweep carries on.
    """
    xs = np.asarray(xi1_grid, dtype=float)
    if xs.size == 0 or np.any(np.diff(xs) <= 0):
        raise ValueError("xi1 grid must be non-empty and strictly increasing")
    tau_grid = np.asarray(tau_grid, dtype=float)
    pts = geom.to_slab(gamma_eps(xs, line))

    def work(k):
        s = indicator(cauchy, ProbeConfig(tuple(pts[k]), tau_grid))
        try:
            return slope_estimate(s, window=window)
        except TooFewSamples as exc:
            log.warning("xi1=%g: %s", xs[k], exc)
            return np.nan, np.nan

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            res = list(ex.map(work, range(len(xs))))
    else:
        res = [work(k) for k in range(len(xs))]
    phi, r2 = (np.array(v) for v in zip(*res))
    return Profile(xs, phi, r2, line)


@dataclass(frozen=True)
class TipEstimate:
    x_left: float | None
    x_right: float | None
    prominence_left: float | None = None
    prominence_right: float | None = None

    @property
    def gap(self) -> float | None:
        if self.x_left is None or self.x_right is None:
            return None
        return self.x_right - self.x_left


def profile_maxima(profile: Profile, rel_prominence: float = 0.02):
    """Interior local maxima whose prominence exceeds a fraction of the range.

    Returns ``(left_edge_index, right_edge_index, prominence)`` per maximum; a
    plateau maximum spans several grid points.
    """
    phi = profile.phi
    ok = np.isfinite(phi)
    if ok.sum() < 3:
        return []
    filled = np.where(ok, phi, np.nanmin(phi))
    rng = float(np.nanmax(phi) - np.nanmin(phi))
    pk, props = find_peaks(filled, prominence=rel_prominence * rng if rng > 0 else None,
                           plateau_size=1)
    if rng == 0:
        return []
    out = []
    for p, lo, hi, prom in zip(pk, props["left_edges"], props["right_edges"],
                               props["prominences"]):
        if lo == 0 or hi == len(phi) - 1:
            continue
        out.append((int(lo), int(hi), float(prom)))
    return out


def detect_tips(profile: Profile, pressure_point: float, rel_prominence: float = 0.02,
                search_radius: float | None = None, strict: bool = False) -> TipEstimate:
    """Nearest qualifying maxima left and right of the pressure point.

    Plateaus resolve to their leftmost point on the left side and their
    rightmost point on the right side.  Maxima farther than
    ``search_radius`` from the pressure point are ignored.  A missing side
    is reported as ``None`` (or raises :class:`MissingTip` if ``strict``).
    """
    xs = profile.xi1_grid
    left = right = None
    for lo, hi, prom in profile_maxima(profile, rel_prominence):
        if search_radius is not None:
            near = min(abs(xs[lo] - pressure_point), abs(xs[hi] - pressure_point))
            if near > search_radius + 1e-12:
                continue
        if xs[hi] < pressure_point:
            if left is None or xs[lo] > left[0]:
                left = (float(xs[lo]), prom)
        elif xs[lo] > pressure_point:
            if right is None or xs[hi] < right[0]:
                right = (float(xs[hi]), prom)
    if strict and (left is None or right is None):
        raise MissingTip("no qualifying maximum on the "
                         + ("left" if left is None else "right") + " of the pressure point")
    return TipEstimate(left[0] if left else None, right[0] if right else None,
                       left[1] if left else None, right[1] if right else None)
