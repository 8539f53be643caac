"""The initial-data ODE system for a(s), b(s).

Along the curve ``(u, v) = (a(s), b(s))`` the construction demands::

    1/2 a'(s)^-2     = Ghat / (Ghat + 1)                  (= R, with u_vh = 1)
    1/2 b'(s)^-2 + 1 = hhat_vh^-2 Ghat^2 / (Ghat + 1)     (= S)

with every quantity evaluated at ``(uh, vh) = (f(a, b), g(a, b))``. Taking the
positive roots gives the standard form

    a' = u_vh^-1 sqrt((Ghat + 1) / (2 Ghat))
    b' = (2 (S - 1))^(-1/2)

which is real exactly when the margin ``S - 1`` is positive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .characteristics import InitialData1D
from .errors import DomainExitError, InversionError, RangeError, RealityViolation

STEPS_PER_UNIT = 4096
AUTO_MARGIN = 0.5


@dataclass(frozen=True)
class HhatChoice:
    """Cauchy data ``hhat(uh, 0) = delta * uh`` for the Ghat-characteristic PDE."""

    delta: float

    def __post_init__(self):
        if self.delta == 0:
            raise ValueError("delta must be nonzero")

    @property
    def data(self):
        return InitialData1D.linear(self.delta, name=f"hhat={self.delta!r}*s")


def line_margin(Ghat, delta, uh):
    """``S - 1`` on ``vh = 0`` using ``hhat_vh(uh, 0) = -Ghat(uh, 0) * delta``."""
    g = np.asarray(Ghat(uh, np.zeros_like(np.asarray(uh, dtype=float))), dtype=float)
    hv = -g * delta
    return g * g / (g + 1.0) / (hv * hv) - 1.0


def choose_hhat(Ghat, domain=None, margin=AUTO_MARGIN, n=257, kmax=40):
    """Largest ``delta = 2^-k`` whose margin on the initial segment exceeds ``margin``."""
    domain = domain or Ghat.domain
    uh = np.linspace(domain.x0, domain.x1, n)
    for k in range(kmax + 1):
        delta = 2.0 ** -k
        if np.all(line_margin(Ghat, delta, uh) > margin):
            return HhatChoice(delta)
    raise ValueError(f"no admissible delta >= 2^-{kmax}; Ghat is degenerate on the initial segment")


def standard_form(G, u_vh, hhat_vh):
    """``(a', b', margin)`` from the ODE pair; ``b'`` is NaN when the margin is not positive."""
    a_prime = math.sqrt((G + 1.0) / (2.0 * G)) / abs(u_vh)
    margin = hhat_vh ** -2 * G * G / (G + 1.0) - 1.0
    b_prime = (2.0 * margin) ** -0.5 if margin > 0 else math.nan
    return a_prime, b_prime, margin


@dataclass
class LevelSystem:
    """Right side of the ODE system bound to the chart-change machinery.

    ``components`` is a :class:`~isoembed.components.ComponentPair`; its map
    supplies the inverse (f, g) and its solutions the partials.
    """

    components: object

    def point(self, a, b):
        """Geodesic-chart preimage and the quantities the right side needs."""
        cp = self.components
        w = float(cp.u_sol.data.inverse(a))
        s0 = float(cp.v_sol.data.inverse(b))
        uh, vh, K, G = cp.v_sol.preimage_scalar(s0, w)
        u_vh = float(cp.u_sol.data.slope(w))
        v_vh = -G * float(cp.v_sol.data.slope(s0)) * K
        return uh, vh, G, u_vh, v_vh

    def margin(self, a, b):
        _, _, G, u_vh, v_vh = self.point(a, b)
        return standard_form(G, u_vh, v_vh)[2]

    def __call__(self, s, a, b):
        _, _, G, u_vh, v_vh = self.point(a, b)
        ap, bp, m = standard_form(G, u_vh, v_vh)
        if not m > 0:
            raise RealityViolation(s, m)
        return ap, bp


def rhs(s, a, b, system):
    return system(s, a, b)


def reality_check(system, point):
    """Margin ``S - 1`` at the preimage of ``point = (a, b)``; positive means b' is real."""
    return system.margin(*point)


@dataclass
class ODETrajectory:
    s: np.ndarray
    a: np.ndarray
    b: np.ndarray
    da: np.ndarray
    db: np.ndarray
    truncated: bool = False
    reason: Optional[str] = None
    error_estimate: float = 0.0
    margin: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def s_end(self):
        return float(self.s[-1])

    def a_data(self):
        return InitialData1D.from_samples(self.s, self.a, self.da, name="a")

    def b_data(self):
        return InitialData1D.from_samples(self.s, self.b, self.db, name="b")

    def resubstitution(self, system, where="samples"):
        """Residuals of both ODE equations, at samples or at interval midpoints."""
        if where == "samples":
            s, a, b, da, db = self.s, self.a, self.b, self.da, self.db
        else:
            s = 0.5 * (self.s[1:] + self.s[:-1])
            ad, bd = self.a_data(), self.b_data()
            a, b, da, db = ad(s), bd(s), ad.slope(s), bd.slope(s)
        r1 = np.empty(len(s))
        r2 = np.empty(len(s))
        for k in range(len(s)):
            _, _, G, u_vh, v_vh = system.point(a[k], b[k])
            r1[k] = 0.5 * da[k] ** -2 - G / (G + 1.0) / u_vh ** 2
            r2[k] = 0.5 * db[k] ** -2 + 1.0 - v_vh ** -2 * G * G / (G + 1.0)
        return r1, r2


_STOP = (RealityViolation, DomainExitError, InversionError, RangeError)


def _rk4(system, n, h):
    s = np.zeros(n + 1)
    y = np.zeros((n + 1, 2))
    dy = np.full((n + 1, 2), np.nan)
    reason = None
    k = 0
    for k in range(n):
        sk = k * h
        a, b = y[k]
        try:
            k1 = system(sk, a, b)
            dy[k] = k1
            k2 = system(sk + 0.5 * h, a + 0.5 * h * k1[0], b + 0.5 * h * k1[1])
            k3 = system(sk + 0.5 * h, a + 0.5 * h * k2[0], b + 0.5 * h * k2[1])
            k4 = system(sk + h, a + h * k3[0], b + h * k3[1])
        except _STOP as exc:
            reason = f"{type(exc).__name__}: {exc}"
            keep = k + 1 if np.isfinite(dy[k, 0]) else k
            return s[:keep], y[:keep], dy[:keep], reason
        s[k + 1] = (k + 1) * h
        y[k + 1, 0] = a + h * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]) / 6.0
        y[k + 1, 1] = b + h * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]) / 6.0
    try:
        dy[n] = system(n * h, *y[n])
    except _STOP as exc:
        reason = f"{type(exc).__name__}: {exc}"
        return s[:n], y[:n], dy[:n], reason
    return s, y, dy, reason


def integrate(system, s_max, step=1.0 / STEPS_PER_UNIT, halving_check=True):
    """Fixed-step RK4 from ``a(0) = b(0) = 0`` up to ``s_max``.

    Stops early (``truncated=True``) on a reality violation or when the curve
    leaves the invertible region; an immediate violation at ``s = 0`` raises.
    The error estimate compares against a run at twice the step.
    """
    m0 = system.margin(0.0, 0.0)
    if not m0 > 0:
        raise RealityViolation(0.0, m0)
    n = int(round(s_max / step))
    s, y, dy, reason = _rk4(system, n, step)
    if len(s) < 2 and n > 0:
        raise RuntimeError(f"integration could not leave s=0: {reason}")
    err = 0.0
    if halving_check and len(s) >= 3:
        n2 = (len(s) - 1) // 2
        _, y2, _, _ = _rk4(system, n2, 2 * step)
        m = min(len(y2), n2 + 1)
        diff = np.abs(y[: 2 * m - 1 : 2] - y2[:m])
        span = max(s[2 * (m - 1)], step)
        err = float(diff.max() / 15.0 / span)
    margins = np.array([0.5 * d ** -2 for d in dy[:, 1]])
    return ODETrajectory(
        s=s,
        a=y[:, 0].copy(),
        b=y[:, 1].copy(),
        da=dy[:, 0].copy(),
        db=dy[:, 1].copy(),
        truncated=reason is not None,
        reason=reason,
        error_estimate=err,
        margin=margins,
    )
