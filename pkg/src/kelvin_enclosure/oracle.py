"""Desk-scale numerical checks of the large-tau asymptotics.

The tip integral

    I_n(tau) = int_0^eta r^((2n-1)/2) / (r + A)^2 exp(i tau / (r + A)) dr,
    A = s0 cos(alpha) + i s0 (1 + sin(alpha)),

grows like ``exp(tau / (2 s0))``.  Everything here works with the scaled
value ``exp(-tau/(2 s0)) I_n(tau)`` so nothing overflows, and compares
``tau^((2n+1)/2) exp(-i tau cos(alpha) / (2 s0 (1 + sin(alpha))))`` times
that against the closed-form limit.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, special


class QuadratureError(RuntimeError):
    def __init__(self, msg, estimate=None):
        super().__init__(msg)
        self.estimate = estimate


@dataclass(frozen=True)
class OracleCase:
    n: int = 1
    s0: float = 1.0
    alpha: float = 0.0
    eta_prime: float | None = None
    tau_list: tuple = (8.0, 16.0, 32.0, 64.0, 100.0)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        if not self.s0 > 0:
            raise ValueError("s0 must be positive")
        if not -np.pi / 2 < self.alpha < np.pi / 2:
            raise ValueError("alpha must lie in (-pi/2, pi/2)")
        if self.eta_prime is None:
            eta = 0.5 * self.s0 * (1 + np.sin(self.alpha)) / np.cos(self.alpha)
            object.__setattr__(self, "eta_prime", float(eta))
        elif self.eta_prime < 0:
            raise ValueError("eta_prime must be non-negative")
        object.__setattr__(self, "tau_list", tuple(float(t) for t in self.tau_list))

    @property
    def shift(self) -> complex:
        """``A = -s0 * conj(z_alpha)``."""
        return self.s0 * complex(np.cos(self.alpha), 1 + np.sin(self.alpha))

    @property
    def oscillation(self) -> float:
        """Frequency of the phase factor removed before taking the limit."""
        return np.cos(self.alpha) / (2 * self.s0 * (1 + np.sin(self.alpha)))


def _scaled_integrand(case: OracleCase, tau: float, conjugate: bool = False):
    A = case.shift
    if conjugate:
        A = A.conjugate()
    p = (2 * case.n - 1) / 2
    g = tau / (2 * case.s0)
    sgn = -1j if conjugate else 1j

    def f(r):
        w = r + A
        return r**p / w**2 * np.exp(sgn * tau / w - g)

    return f


def in_quadrature(case: OracleCase, tau: float, rtol: float = 1e-12,
                  limit: int = 500) -> complex:
    """``exp(-tau/(2 s0)) I_n(tau)`` by adaptive Gauss-Kronrod (QUADPACK)."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    eta = case.eta_prime
    if eta == 0:
        return 0j
    f = _scaled_integrand(case, tau)
    pts = [eta * 0.5**k for k in range(1, 40) if eta * 0.5**k > 1e-3 / max(tau, 1.0)]
    pts = sorted(p for p in pts if 0 < p < eta)
    val, err = integrate.quad(f, 0.0, eta, points=pts or None, limit=limit,
                              epsabs=0.0, epsrel=rtol, complex_func=True)
    scale = abs(val) + 1e-300
    err = abs(err.real) + abs(err.imag)
    if err > max(1e3 * rtol * scale, 1e-13):
        raise QuadratureError(f"adaptive quadrature missed tolerance (err {err:.2e})", err)
    return complex(val)


def in_quadrature_fixed(case: OracleCase, tau: float, order: int = 40,
                        panels: int | None = None, conjugate: bool = False) -> complex:
    """Same scaled integral by composite Gauss-Legendre in ``t = sqrt(r)``.

    The substitution removes the half-integer power at ``r = 0``; panels are
    graded geometrically towards ``t = 0`` on the scale ``1/sqrt(tau)``.
    """
    eta = case.eta_prime
    if eta == 0:
        return 0j
    f = _scaled_integrand(case, tau, conjugate)
    T = math.sqrt(eta)
    if panels is None:
        panels = 30
    inner = min(T, 0.01 / math.sqrt(max(tau, 1.0)))
    edges = np.concatenate([[0.0], np.geomspace(inner, T, panels)])
    x, w = np.polynomial.legendre.leggauss(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    t = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    wt = 0.5 * (hi - lo) * w
    return complex(np.sum(wt * f(t * t) * 2 * t))


def in_quadrature_checked(case: OracleCase, tau: float, order: int = 40):
    """Fixed-rule value and a refinement error estimate (doubling the order)."""
    v1 = in_quadrature_fixed(case, tau, order)
    v2 = in_quadrature_fixed(case, tau, 2 * order)
    return v2, abs(v2 - v1)


def in_limit_closedform(case: OracleCase) -> complex:
    """Closed-form value of the scaled large-tau limit."""
    n, s0, al = case.n, case.s0, case.alpha
    k = (2 * n - 1) / 2
    mag = s0 ** (2 * n - 1) * 2**k * (1 + math.sin(al)) ** k * special.gamma(n + 0.5)
    return -1j * mag * complex(math.cos(k * al), math.sin(k * al))


def first_correction(case: OracleCase) -> complex:
    """Coefficient ``c1`` in ``ratio = 1 + c1 / tau + O(tau^-2)``.

    Expanding ``(r + A)^-2 exp(i tau / (r + A))`` about the saddle at
    ``r = 0`` gives ``c1 = -i p (p + 1) A`` with ``p = n - 1/2``; its modulus
    ``p (p + 1) s0 sqrt(2 (1 + sin alpha))`` grows quickly with ``n``.
    """
    p = case.n - 0.5
    return -1j * p * (p + 1) * case.shift


def scaled_ratio(case: OracleCase, tau: float, value: complex | None = None) -> complex:
    if value is None:
        value = in_quadrature(case, tau)
    phase = np.exp(-1j * tau * case.oscillation)
    return tau ** (case.n + 0.5) * phase * value / in_limit_closedform(case)


@dataclass
class TipLimitReport:
    case: dict
    tau: list
    ratio_re: list
    ratio_im: list
    error: list
    rate: float
    passed: bool
    slow: bool = False
    tolerance: float = 0.02

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def text(self) -> str:
        c = self.case
        lines = [f"tip-integral limit check  n={c['n']} s0={c['s0']} alpha={c['alpha']}"
                 f" eta'={c['eta_prime']:.6g}",
                 f"{'tau':>8} {'Re ratio':>14} {'Im ratio':>14} {'|ratio-1|':>12}"]
        for t, re, im, e in zip(self.tau, self.ratio_re, self.ratio_im, self.error):
            lines.append(f"{t:8.3g} {re:14.8f} {im:14.8f} {e:12.3e}")
        lines.append(f"fitted rate {self.rate:.3f}; "
                     f"{'PASS' if self.passed else 'FAIL'} (tol {self.tolerance})"
                     + (" [slow]" if self.slow else ""))
        return "\n".join(lines)


def verify_tip_limit(case: OracleCase, tolerance: float = 0.02) -> TipLimitReport:
    """Ratio of the scaled quadrature to the closed-form limit along ``tau_list``."""
    taus = np.asarray(case.tau_list, dtype=float)
    if np.any(np.diff(taus) <= 0):
        raise ValueError("tau_list must be increasing")
    ratios = np.array([scaled_ratio(case, t) for t in taus])
    err = np.abs(ratios - 1)
    ok = err > 0
    rate = float(np.polyfit(np.log(taus[ok]), np.log(err[ok]), 1)[0]) if ok.sum() >= 2 else 0.0
    d = asdict(case)
    d["tau_list"] = list(d["tau_list"])
    return TipLimitReport(case=d, tau=taus.tolist(), ratio_re=ratios.real.tolist(),
                       ratio_im=ratios.imag.tolist(), error=err.tolist(), rate=rate,
                       passed=bool(err[-1] < tolerance), slow=bool(rate > -0.75),
                       tolerance=tolerance)


def decay_rate(x, xi, s):
    """Real exponent rate of ``exp(-tau/(2s)) v_tau(x; xi)`` per unit ``tau``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    d = x - np.asarray(xi, dtype=float)
    return -d[:, 1] / np.sum(d * d, axis=1) - 1.0 / (2 * s)


@dataclass
class DichotomyReport:
    n_inside: int
    n_outside: int
    inside_ok: int
    outside_ok: int

    @property
    def passed(self) -> bool:
        return self.inside_ok == self.n_inside and self.outside_ok == self.n_outside


def verify_decay_dichotomy(s, xi, inside, outside, tol: float = 1e-12) -> DichotomyReport:
    """Growth inside the hanging disc ``B_s(xi - s e2)``, decay outside it."""
    xi = np.asarray(xi, dtype=float)
    centre = xi - np.array([0.0, s])
    inside = np.atleast_2d(np.asarray(inside, dtype=float)).reshape(-1, 2)
    outside = np.atleast_2d(np.asarray(outside, dtype=float)).reshape(-1, 2)
    for pts in (inside, outside):
        if len(pts) and np.any(np.abs(np.linalg.norm(pts - centre, axis=1) - s) <= tol):
            raise ValueError("points on the probing circle are not allowed")
    ri = decay_rate(inside, xi, s) if len(inside) else np.array([])
    ro = decay_rate(outside, xi, s) if len(outside) else np.array([])
    return DichotomyReport(len(inside), len(outside), int(np.sum(ri > 0)), int(np.sum(ro < 0)))
