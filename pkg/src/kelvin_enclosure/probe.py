"""Kelvin-transformed exponential probes and the boundary indicator.

Writing ``D = (x1 - xi1) + i (x2 - xi2)`` the special solution is
``v = exp(-i tau / D)``, a holomorphic function of ``D``; hence
``dv/dx1 = i tau / D**2 * v`` and ``dv/dx2 = -tau / D**2 * v``.  All points
here are in the slab frame.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .fem import NORMALS, CauchyData, Mesh
from .geometry import CrackSet

MAG_FLOOR = 1e-14


class UntrustedCutoffWarning(UserWarning):
    """Partial-boundary cutoff violates the sufficient condition on ``delta``."""


def _offset(x, xi):
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    D = (x[..., 0] - xi[..., 0]) + 1j * (x[..., 1] - xi[..., 1])
    if np.any(D == 0):
        raise ValueError("special solution is singular at x = xi")
    return D


def v_tau(x, xi, tau):
    """``exp{-tau (x - xi).(e2 + i e1) / |x - xi|^2}``; broadcasts over ``tau``."""
    D = _offset(x, xi)
    return np.exp(-1j * np.multiply.outer(np.asarray(tau, dtype=float), 1.0 / D))


def dv_dx2(x, xi, tau):
    D = _offset(x, xi)
    tau = np.asarray(tau, dtype=float)
    return -np.multiply.outer(tau, 1.0 / D**2) * v_tau(x, xi, tau)


def dv_dnu(x, edge_tag, xi, tau, a=None, b=None):
    """Outward normal derivative of ``v_tau`` on a rectangle edge.

    ``edge_tag`` is one of ``bottom/right/top/left``.  If ``a`` and ``b`` are
    given, points are checked to lie on that edge.
    """
    if edge_tag not in NORMALS:
        raise ValueError(f"unknown edge tag {edge_tag!r}")
    x = np.asarray(x, dtype=float)
    if a is not None and b is not None:
        coord, val = {"bottom": (1, 0.0), "top": (1, b),
                      "left": (0, 0.0), "right": (0, a)}[edge_tag]
        if not np.allclose(x[..., coord], val, atol=1e-12 * max(a, b)):
            raise ValueError(f"points do not lie on the {edge_tag} edge")
    n1, n2 = NORMALS[edge_tag]
    D = _offset(x, xi)
    tau = np.asarray(tau, dtype=float)
    return np.multiply.outer(tau, (1j * n1 - n2) / D**2) * v_tau(x, xi, tau)


@dataclass(frozen=True)
class ProbeConfig:
    xi: tuple[float, float]
    tau_grid: np.ndarray = field(default_factory=lambda: np.round(np.arange(1.0, 5.0001, 0.1), 10))
    delta: float | None = None
    epsilon: float | None = None

    def __post_init__(self):
        t = np.asarray(self.tau_grid, dtype=float)
        if t.ndim != 1 or t.size == 0 or np.any(t < 0) or np.any(np.diff(t) <= 0):
            raise ValueError("tau grid must be non-negative and strictly increasing")
        object.__setattr__(self, "tau_grid", t)
        object.__setattr__(self, "xi", (float(self.xi[0]), float(self.xi[1])))


@dataclass(frozen=True, eq=False)
class IndicatorSamples:
    xi: tuple[float, float]
    tau: np.ndarray
    values: np.ndarray
    floor: np.ndarray
    trusted: bool = True

    @property
    def valid(self) -> np.ndarray:
        return np.abs(self.values) > self.floor

    @property
    def log_abs(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.where(self.valid, np.log(np.abs(self.values)), np.nan)


def _edge_data(mesh: Mesh, keep=None):
    """Outer edges grouped by tag, with endpoints and half lengths."""
    pos = np.empty(len(mesh.nodes), dtype=int)
    pos[mesh.outer_nodes] = np.arange(len(mesh.outer_nodes))
    edges = mesh.outer_edges
    tags = mesh.outer_tags
    half = 0.5 * mesh.edge_lengths
    if keep is not None:
        m = keep(mesh.nodes[edges[:, 0]], mesh.nodes[edges[:, 1]])
        edges, tags, half = edges[m], tags[m], half[m]
    return pos, edges, tags, half


def _boundary_integral(cauchy: CauchyData, xi, tau, keep=None):
    mesh = cauchy.mesh
    pos, edges, tags, half = _edge_data(mesh, keep)
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    g = cauchy.g.values
    # the Neumann trace is defined up to a constant; use its mean-free
    # representative (the cavity windows in the lateral edges open the outer
    # contour, so the discrete integral of dv/dnu alone does not vanish)
    w = mesh.boundary_weights
    u = cauchy.u_trace - (w @ cauchy.u_trace) / w.sum()
    total = np.zeros(tau.shape, dtype=complex)
    gv_max = np.zeros(tau.shape)
    for tag in NORMALS:
        sel = tags == tag
        if not np.any(sel):
            continue
        e = edges[sel]
        hw = half[sel]
        for k in (0, 1):
            pts = mesh.nodes[e[:, k]]
            i = pos[e[:, k]]
            v = v_tau(pts, xi, tau)                  # (T, n)
            dv = dv_dnu(pts, tag, xi, tau)
            gv = g[i] * v
            total += (gv - u[i] * dv) @ hw
            gv_max = np.maximum(gv_max, np.abs(gv).max(axis=1))
    return total, gv_max


def indicator(cauchy: CauchyData, cfg: ProbeConfig) -> IndicatorSamples:
    """Trapezoid evaluation of ``int (g v - u dv/dnu) ds`` over the outer boundary."""
    xi = np.asarray(cfg.xi)
    if xi[1] <= cauchy.mesh.b and 0 <= xi[0] <= cauchy.mesh.a:
        raise ValueError("probe point must lie outside the closed slab")
    vals, gv_max = _boundary_integral(cauchy, xi, cfg.tau_grid)
    perim = 2 * (cauchy.mesh.a + cauchy.mesh.b)
    return IndicatorSamples(cfg.xi, cfg.tau_grid, vals, MAG_FLOOR * perim * gv_max)


def indicator_partial(cauchy: CauchyData, cfg: ProbeConfig, crack_line: float,
                      bound_m: float | None = None) -> IndicatorSamples:
    """Indicator restricted to the boundary part above ``x2 = c - delta``.

    An edge is kept when its midpoint lies in that region.  If ``bound_m``
    (an upper bound of the support function along the probing line) is
    supplied, ``delta > c - (xi2 - 2 M)`` is checked and a violation only
    flags the result as untrusted.
    """
    if cfg.delta is None:
        raise ValueError("partial indicator needs a cutoff delta")
    cut = crack_line - cfg.delta
    trusted = True
    if bound_m is not None and not cfg.delta > crack_line - (cfg.xi[1] - 2 * bound_m):
        warnings.warn("delta violates delta > c - (b + eps - 2M); result untrusted",
                      UntrustedCutoffWarning, stacklevel=2)
        trusted = False
    xi = np.asarray(cfg.xi)

    def keep(p, q):
        return 0.5 * (p[:, 1] + q[:, 1]) > cut

    vals, gv_max = _boundary_integral(cauchy, xi, cfg.tau_grid, keep)
    perim = 2 * (cauchy.mesh.a + cauchy.mesh.b)
    return IndicatorSamples(cfg.xi, cfg.tau_grid, vals, MAG_FLOOR * perim * gv_max, trusted)


def indicator_from_jump(jumps, cracks: CrackSet, xi, tau):
    """Crack-line representation ``-int_Sigma (u+ - u-) dv/dx2 ds`` (trapezoid)."""
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    total = np.zeros(tau.shape, dtype=complex)
    for x1, jump in jumps:
        pts = np.stack([x1, np.full_like(x1, cracks.line_height)], axis=1)
        f = jump * dv_dx2(pts, xi, tau)
        total -= trapezoid(f, x1, axis=-1)
    return total


def add_noise(cauchy: CauchyData, level: float, seed=None) -> CauchyData:
    """Gaussian noise on the trace, std ``level * max|u|``, then re-centred."""
    if level < 0:
        raise ValueError("noise level must be non-negative")
    if level == 0:
        return cauchy
    rng = np.random.default_rng(seed)
    u = cauchy.u_trace
    noisy = u + rng.normal(0.0, level * np.abs(u).max(), size=u.shape)
    w = cauchy.mesh.boundary_weights
    noisy = noisy - (w @ noisy) / w.sum()
    return cauchy.replace_trace(noisy)
