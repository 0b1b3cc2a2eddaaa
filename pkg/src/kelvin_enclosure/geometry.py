"""Slab, crack set, probing line and the exact support function.

All quantities are stored in the *slab frame*: the rectangle is
``[0, a] x [0, b]`` and the interface carrying the cracks is the line
``x2 = c``.  A translation (``origin_shift``) maps the slab frame to the
user frame in which configuration files and reports are written.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np


class GeometryError(ValueError):
    """Raised for an inconsistent slab / crack / probe configuration."""


class EdgeCrackWarning(UserWarning):
    """A crack set whose joined region touches a lateral edge of the slab."""


@dataclass(frozen=True)
class SlabGeometry:
    a: float
    b: float
    c: float
    origin_shift: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.a > 0:
            raise GeometryError(f"slab width must be positive, got a={self.a}")
        if not 0 < self.c < self.b:
            raise GeometryError(
                f"crack line must satisfy 0 < c < b, got c={self.c}, b={self.b}")
        object.__setattr__(self, "origin_shift",
                           tuple(float(v) for v in self.origin_shift))

    def to_user(self, pts):
        return np.asarray(pts, dtype=float) + np.asarray(self.origin_shift)

    def to_slab(self, pts):
        return np.asarray(pts, dtype=float) - np.asarray(self.origin_shift)

    def x_to_user(self, x1):
        return np.asarray(x1, dtype=float) + self.origin_shift[0]

    def x_to_slab(self, x1):
        return np.asarray(x1, dtype=float) - self.origin_shift[0]

    @property
    def top_user(self) -> float:
        return self.b + self.origin_shift[1]

    @classmethod
    def centered(cls, a: float, b: float, c: float | None = None):
        """Slab shown to the user as ``[-a/2, a/2] x [-b/2, b/2]``."""
        if c is None:
            c = b / 2
        return cls(a, b, c, (-a / 2, -b / 2))


@dataclass(frozen=True)
class CrackSet:
    """Closed crack intervals ``[lo, hi]`` on the line ``x2 = line_height``.

    Intervals are sorted; overlapping or touching intervals are merged
    with a warning.  ``a`` is the slab width, used for the joined set.
    """

    intervals: tuple[tuple[float, float], ...]
    line_height: float
    a: float

    def __post_init__(self):
        raw = sorted((float(lo), float(hi)) for lo, hi in self.intervals)
        merged: list[list[float]] = []
        for lo, hi in raw:
            if not hi > lo:
                raise GeometryError(f"crack interval [{lo}, {hi}] is empty or inverted")
            if lo < -1e-12 or hi > self.a + 1e-12:
                raise GeometryError(
                    f"crack interval [{lo}, {hi}] leaves the slab [0, {self.a}]")
            if merged and lo <= merged[-1][1]:
                warnings.warn(f"merging touching/overlapping crack intervals at x1={lo}",
                              stacklevel=3)
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([min(max(lo, 0.0), self.a), min(hi, self.a)])
        object.__setattr__(self, "intervals", tuple((lo, hi) for lo, hi in merged))
        if merged and not self.pinned:
            warnings.warn("crack set does not reach both lateral edges; the "
                          "single-tip limit theory assumes it does", EdgeCrackWarning,
                          stacklevel=3)

    @classmethod
    def from_joined(cls, joined, line_height: float, a: float):
        """Build the crack set as the complement of the joined intervals in ``[0, a]``."""
        cuts = [0.0]
        for lo, hi in sorted(joined):
            cuts.extend([lo, hi])
        cuts.append(a)
        ivs = [(cuts[i], cuts[i + 1]) for i in range(0, len(cuts), 2)
               if cuts[i + 1] > cuts[i]]
        return cls(tuple(ivs), line_height, a)

    @property
    def pinned(self) -> bool:
        return (not self.intervals
                or (self.intervals[0][0] <= 0.0 and self.intervals[-1][1] >= self.a))

    @property
    def joined(self) -> tuple[tuple[float, float], ...]:
        """Welded intervals ``W``: complement of the cracks in ``[0, a]``."""
        out = []
        prev = 0.0
        for lo, hi in self.intervals:
            if lo > prev:
                out.append((prev, lo))
            prev = hi
        if prev < self.a:
            out.append((prev, self.a))
        return tuple(out)

    @property
    def tips(self) -> np.ndarray:
        """Crack endpoints lying strictly inside the slab."""
        ends = [x for iv in self.intervals for x in iv]
        return np.array([x for x in ends if 0.0 < x < self.a])

    def distance(self, x1):
        """Distance from ``x1`` to the projection of the crack set onto the line."""
        x1 = np.asarray(x1, dtype=float)
        if not self.intervals:
            return np.full(x1.shape, np.inf)
        d = np.full(x1.shape, np.inf)
        for lo, hi in self.intervals:
            d = np.minimum(d, np.maximum(np.maximum(lo - x1, x1 - hi), 0.0))
        return d

    def shifted_view(self, geom: SlabGeometry):
        """Intervals expressed in the user frame."""
        s = geom.origin_shift[0]
        return tuple((lo + s, hi + s) for lo, hi in self.intervals)


@dataclass(frozen=True)
class ProbingLine:
    """Piecewise-linear standoff curve above the slab.

    In the user frame the probe sits at
    ``x2 = base + min(max_standoff, max(|x1 - center| / scale, min_standoff))``;
    ``base`` is normally the user-frame height of the top face.
    """

    min_standoff: float = 0.5
    max_standoff: float = 2.0
    scale: float = 2.5
    center: float = 0.0
    base: float = 0.0

    def __post_init__(self):
        if not 0 < self.min_standoff <= self.max_standoff:
            raise GeometryError("probing line needs 0 < min_standoff <= max_standoff")
        if not self.scale > 0:
            raise GeometryError("probing line scale must be positive")

    def standoff(self, xi1_user):
        t = np.abs(np.asarray(xi1_user, dtype=float) - self.center) / self.scale
        return np.minimum(self.max_standoff, np.maximum(t, self.min_standoff))

    def height_fn(self, xi1_user):
        return self.base + self.standoff(xi1_user)

    def check(self, geom: SlabGeometry):
        xs = geom.x_to_user(np.linspace(0.0, geom.a, 2001))
        if np.any(self.height_fn(xs) <= geom.top_user):
            raise GeometryError("probing line dips into the closed slab")


def gamma_eps(xi1_user, line: ProbingLine):
    """Probe point(s) on the probing line, user frame, shape ``(..., 2)``."""
    xi1_user = np.asarray(xi1_user, dtype=float)
    return np.stack([xi1_user, line.height_fn(xi1_user)], axis=-1)


def s_sigma_analytic(xi, cracks: CrackSet) -> float:
    """Radius of the largest disc hanging below ``xi`` that avoids the cracks.

    ``xi`` is in the slab frame.  A point ``(p, c)`` of the crack line is on
    the circle of radius ``s`` tangent at ``xi`` from below when
    ``s = ((xi1 - p)**2 + h**2) / (2 h)`` with ``h = xi2 - c``, so the
    supremum is attained at the crack point nearest in ``x1``.
    """
    xi1, xi2 = float(xi[0]), float(xi[1])
    h = xi2 - cracks.line_height
    if h <= 0:
        raise GeometryError(f"probe point must lie above the crack line (xi2={xi2})")
    d = float(cracks.distance(xi1))
    return (d * d + h * h) / (2.0 * h)


def single_tip_contact(xi, cracks: CrackSet, rtol: float = 1e-12):
    """Whether the extremal disc touches the cracks at exactly one tip.

    Returns ``(True, j)`` with ``j`` the index into ``cracks.tips``, else
    ``(False, None)``.
    """
    s = s_sigma_analytic(xi, cracks)
    xi1 = float(xi[0])
    if not cracks.intervals or cracks.distance(xi1) == 0.0:
        # projection on a crack: contact point is (xi1, c), a tip only if xi1 is one
        tips = cracks.tips
        hit = np.flatnonzero(np.abs(tips - xi1) <= rtol * max(1.0, abs(xi1)))
        if hit.size == 1:
            return True, int(hit[0])
        return False, None
    h = float(xi[1]) - cracks.line_height
    tips = cracks.tips
    radii = ((tips - xi1) ** 2 + h * h) / (2 * h)
    touching = np.flatnonzero(np.abs(radii - s) <= rtol * s)
    if touching.size == 1:
        return True, int(touching[0])
    return False, None


def s_sigma_bruteforce(xi, cracks: CrackSet, n_samples: int = 10_000,
                       tol: float = 1e-8) -> float:
    """Largest empty hanging disc by bisection against sampled crack points.

    Independent of :func:`s_sigma_analytic`: the crack set is sampled at
    ``n_samples`` points (endpoints included) and the radius is bisected
    until the open disc ``B_s(xi - s e2)`` just excludes every sample.
    """
    xi = np.asarray(xi, dtype=float)
    h = xi[1] - cracks.line_height
    if h <= 0:
        raise GeometryError("probe point must lie above the crack line")
    lengths = np.array([hi - lo for lo, hi in cracks.intervals])
    counts = np.maximum(2, np.round(n_samples * lengths / lengths.sum()).astype(int))
    pts = np.concatenate([np.linspace(lo, hi, k)
                          for (lo, hi), k in zip(cracks.intervals, counts)])
    pts = np.stack([pts, np.full_like(pts, cracks.line_height)], axis=1)

    def empty(s):
        centre = xi - np.array([0.0, s])
        return np.min(np.linalg.norm(pts - centre, axis=1)) >= s

    lo, hi = 0.0, h
    while empty(hi):
        lo, hi = hi, 2 * hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if empty(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def contact_tips_bruteforce(xi, cracks: CrackSet, n_grid: int = 200_001):
    """Tips touched by the extremal disc, found by scanning a fine crack grid.

    Grid points whose hanging-disc radius lies within one grid cell's worth
    of the minimum are grouped into contiguous runs; a run at a tip counts
    as contact at that tip.
    """
    xi = np.asarray(xi, dtype=float)
    h = xi[1] - cracks.line_height
    x = np.linspace(0.0, cracks.a, n_grid)
    on = np.zeros_like(x, dtype=bool)
    for lo, hi in cracks.intervals:
        on |= (x >= lo) & (x <= hi)
    r = np.where(on, ((x - xi[0]) ** 2 + h * h) / (2 * h), np.inf)
    dx = x[1] - x[0]
    slack = (abs(xi[0]) + cracks.a + h) * dx / h
    close = r <= r.min() + slack
    idx = np.flatnonzero(close)
    runs = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
    tips = cracks.tips
    touched = set()
    for run in runs:
        centre = x[run].mean()
        j = np.argmin(np.abs(tips - centre)) if tips.size else None
        if j is not None and abs(tips[j] - centre) <= 2 * dx * max(1, len(run)):
            touched.add(int(j))
        else:
            touched.add(-1)  # contact away from any tip
    return touched
