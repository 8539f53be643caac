"""Linear first-order PDEs solved by the method of characteristics.

Four equations appear in the construction:

* ``u_x - u_y = 0`` and ``v_x + v_y = 0`` on the plane, with data on ``y = 0``;
  closed forms ``u = a(x + y)`` and ``v = b(x - y)``.
* ``u_uh - u_vh = 0`` on the geodesic chart, closed form ``u = h(uh + vh)``.
* ``Ghat(uh, vh) v_uh + v_vh = 0`` with data ``v(uh, 0) = hhat(uh)``. Its
  characteristics solve ``d uh / d vh = Ghat``; the solution at a point is the
  datum at the foot point where the characteristic through it meets
  ``vh = 0``. Foot points are traced with fixed-step RK4, and the foot-point
  sensitivity ``d uh0 / d uh`` is carried along through the variational
  equation ``dK/dvh = Ghat_uh K``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from types import FunctionType
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainExitError, RangeError
from .expr import parse
from .metric import ScalarField2

TRACE_STEPS = 2048


# ------------------------------------------------------------ Cauchy data

@dataclass(frozen=True)
class InitialData1D:
    """A monotone C^1 function of one variable with its slope.

    ``interval`` bounds where the data is used; the inverse is computed by a
    bracketed Newton iteration on it unless ``inverse_func`` is given.
    ``knots`` (sorted abscissae) tighten the initial brackets.
    """

    value: Callable
    slope: Callable
    interval: tuple = (-math.inf, math.inf)
    inverse_func: Optional[Callable] = None
    knots: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    name: str = ""

    def __post_init__(self):
        lo, hi = self.interval
        if math.isfinite(lo) and math.isfinite(hi):
            s = np.linspace(lo, hi, 257)
            sl = np.asarray(self.slope(s), dtype=float)
            if not (np.all(sl > 0) or np.all(sl < 0)):
                raise ValueError(f"initial data {self.name or ''} has a vanishing or sign-changing slope")

    def __call__(self, s):
        return self.value(s)

    @classmethod
    def identity(cls):
        return cls.linear(1.0, name="id")

    @classmethod
    def linear(cls, k, name=""):
        k = float(k)
        if k == 0.0:
            raise ValueError("slope must be nonzero")
        return cls(
            value=lambda s: k * np.asarray(s, dtype=float),
            slope=lambda s: np.full(np.shape(s), k) if np.ndim(s) else k,
            inverse_func=lambda y: np.asarray(y, dtype=float) / k,
            name=name or f"{k!r}*s",
        )

    @classmethod
    def polynomial(cls, coeffs, interval):
        """``sum c_k s^k`` with ``coeffs`` in increasing degree."""
        p = np.polynomial.Polynomial(coeffs)
        dp = p.deriv()
        return cls(value=p, slope=dp, interval=tuple(interval), name=f"poly{tuple(coeffs)}")

    @classmethod
    def scaled_tanh(cls, amp, rate, interval):
        return cls(
            value=lambda s: amp * np.tanh(rate * np.asarray(s, dtype=float)),
            slope=lambda s: amp * rate / np.cosh(rate * np.asarray(s, dtype=float)) ** 2,
            interval=tuple(interval),
            name=f"{amp!r}*tanh({rate!r}*s)",
        )

    @classmethod
    def from_samples(cls, s, values, slopes, name=""):
        """Cubic Hermite dense output through samples (used for ODE trajectories)."""
        spline = CubicHermiteSpline(s, values, slopes, extrapolate=True)
        dspline = spline.derivative()
        return cls(
            value=spline,
            slope=dspline,
            interval=(float(s[0]), float(s[-1])),
            knots=np.asarray(s, dtype=float),
            name=name,
        )

    def inverse(self, y, tol=1e-12):
        if self.inverse_func is not None:
            return self.inverse_func(y)
        return _bracketed_newton(self, y, tol)


def _bracketed_newton(data, y, tol, max_iter=100):
    lo, hi = data.interval
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise RangeError("inverse needs a finite interval or an explicit inverse")
    scalar = np.ndim(y) == 0
    shape = np.shape(y)
    y = np.atleast_1d(np.asarray(y, dtype=float)).ravel()
    if data.knots is not None:
        knots = data.knots
        kv = np.asarray(data.value(knots), dtype=float)
        increasing = kv[-1] > kv[0]
        order = kv if increasing else kv[::-1]
        idx = np.searchsorted(order, y)
        idx = np.clip(idx, 1, len(knots) - 1)
        if not increasing:
            idx = len(knots) - idx
        a, b = knots[idx - 1].copy(), knots[idx].copy()
        exact_hits = np.isin(y, kv)
    else:
        a = np.full(y.shape, lo)
        b = np.full(y.shape, hi)
        exact_hits = np.zeros(y.shape, dtype=bool)
    fa = np.asarray(data.value(a), dtype=float) - y
    fb = np.asarray(data.value(b), dtype=float) - y
    out_of_range = fa * fb > 0
    if np.any(out_of_range):
        bad = y[out_of_range][0]
        raise RangeError(f"value {bad!r} outside the monotone range of {data.name or 'initial data'}")
    denom = np.where(fa == fb, 1.0, fa - fb)
    x = np.where(fa == fb, 0.5 * (a + b), a + (b - a) * fa / denom)
    x = np.where(fa == 0, a, np.where(fb == 0, b, x))
    done = (fa == 0) | (fb == 0)
    for _ in range(max_iter):
        fx = np.asarray(data.value(x), dtype=float) - y
        same = np.sign(fx) == np.sign(fa)
        a, fa = np.where(same, x, a), np.where(same, fx, fa)
        b, fb = np.where(same, b, x), np.where(same, fb, fx)
        d = np.asarray(data.slope(x), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - fx / d
        inside = (xn > np.minimum(a, b)) & (xn < np.maximum(a, b))
        xn = np.where(inside, xn, 0.5 * (a + b))
        xn = np.where((fx == 0) | done, x, xn)
        step = np.abs(xn - x)
        done = done | (step <= tol * (1 + np.abs(x))) | (fx == 0)
        x = xn
        if np.all(done):
            break
    if data.knots is not None and np.any(exact_hits):
        kv = np.asarray(data.value(data.knots), dtype=float)
        lookup = dict(zip(kv.tolist(), data.knots.tolist()))
        x = np.where(exact_hits, [lookup.get(v, xv) for v, xv in zip(y.tolist(), x.tolist())], x)
    return float(x[0]) if scalar else x.reshape(shape)


# ---------------------------------------------------------------- kernels
# Plain-python sources; numba-compiled versions are used when the coefficient
# field comes from a parsed expression, the raw functions otherwise.

def _trace_back(G, Gu, uh, vh, h, x0, x1):
    n = int(math.ceil(abs(vh) / h))
    if n == 0:
        return uh, 1.0, 0.0, 0
    dt = -vh / n
    u = uh
    K = 1.0
    t = vh
    for i in range(n):
        tm = t + 0.5 * dt
        te = t + dt
        k1 = G(u, t)
        q1 = Gu(u, t) * K
        k2 = G(u + 0.5 * dt * k1, tm)
        q2 = Gu(u + 0.5 * dt * k1, tm) * (K + 0.5 * dt * q1)
        k3 = G(u + 0.5 * dt * k2, tm)
        q3 = Gu(u + 0.5 * dt * k2, tm) * (K + 0.5 * dt * q2)
        k4 = G(u + dt * k3, te)
        q4 = Gu(u + dt * k3, te) * (K + dt * q3)
        u = u + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        K = K + dt * (q1 + 2.0 * q2 + 2.0 * q3 + q4) / 6.0
        t = vh + (i + 1) * dt
        if u < x0 or u > x1 or u != u:
            return u, K, t, 1
    return u, K, 0.0, 0


def _trace_back_many(U, V, h, x0, x1, out):
    for i in range(U.shape[0]):
        u, K, t, status = _trace_back(G, Gu, U[i], V[i], h, x0, x1)
        out[i, 0] = u
        out[i, 1] = K
        out[i, 2] = t
        out[i, 3] = status


def _locate(G, s0, w, h, x0, x1, y0, y1):
    """March from (s0, 0) along the characteristic until uh + vh = w."""
    n = int(math.ceil(abs(w - s0) / h))
    if n == 0:
        return s0, 0.0, 0
    dw = (w - s0) / n
    u = s0
    t = 0.0
    # roundoff slack so points on the domain edge stay reachable
    sx = 1e-9 * (x1 - x0)
    sy = 1e-9 * (y1 - y0)
    for _ in range(n):
        g1 = G(u, t)
        a1 = g1 / (g1 + 1.0)
        b1 = 1.0 / (g1 + 1.0)
        g2 = G(u + 0.5 * dw * a1, t + 0.5 * dw * b1)
        a2 = g2 / (g2 + 1.0)
        b2 = 1.0 / (g2 + 1.0)
        g3 = G(u + 0.5 * dw * a2, t + 0.5 * dw * b2)
        a3 = g3 / (g3 + 1.0)
        b3 = 1.0 / (g3 + 1.0)
        g4 = G(u + dw * a3, t + dw * b3)
        a4 = g4 / (g4 + 1.0)
        b4 = 1.0 / (g4 + 1.0)
        u = u + dw * (a1 + 2.0 * a2 + 2.0 * a3 + a4) / 6.0
        t = t + dw * (b1 + 2.0 * b2 + 2.0 * b3 + b4) / 6.0
        if u < x0 - sx or u > x1 + sx or t < y0 - sy or t > y1 + sy or u != u:
            return u, t, 1
    return u, t, 0


def _locate_many(S0, W, h, x0, x1, y0, y1, out):
    for i in range(S0.shape[0]):
        u, t, status = _locate(G, S0[i], W[i], h, x0, x1, y0, y1)
        out[i, 0] = u
        out[i, 1] = t
        out[i, 2] = status


def _preimage(s0, w, h, x0, x1, y0, y1):
    uh, vh, status = _locate(G, s0, w, h, x0, x1, y0, y1)
    if status != 0:
        return uh, vh, math.nan, math.nan, 1
    _, K, t, status = _trace_back(G, Gu, uh, vh, h, x0, x1)
    if status != 0:
        return uh, t, math.nan, math.nan, 2
    return uh, vh, K, G(uh, vh), 0


# The three entry points above read G and Gu as globals; they are rebound per
# coefficient field so compiled callers only ever pass floats and arrays.
_ENTRY_POINTS = (_trace_back_many, _locate_many, _preimage)
_GENERIC = {}


def _bind(G, Gu, compiled):
    ns = dict(globals())
    ns["G"], ns["Gu"] = G, Gu
    if compiled:
        import numba

        jit = numba.njit(cache=False, error_model="numpy")
        if not _GENERIC:
            _GENERIC["tb"], _GENERIC["loc"] = jit(_trace_back), jit(_locate)
        ns["_trace_back"], ns["_locate"] = _GENERIC["tb"], _GENERIC["loc"]
    kernels = {}
    for fn in _ENTRY_POINTS:
        bound = FunctionType(fn.__code__, ns, fn.__name__)
        kernels[fn.__name__.lstrip("_")] = numba.njit(cache=False, error_model="numpy")(bound) if compiled else bound
    return kernels


@functools.lru_cache(maxsize=64)
def _compiled_kernels(text):
    e = parse(text)
    return _bind(e.jit(), e.derive("uhat").jit(), True)


# -------------------------------------------------------------- solutions

class CharacteristicSolution:
    """Solution of a linear first-order PDE ``alpha f_x + beta f_y = 0``.

    The value at a point is the Cauchy datum at its foot point on the initial
    line.
    """

    tag = ""

    def __init__(self, data):
        self.data = data

    def foot(self, x, y):
        raise NotImplementedError

    def foot_grad(self, x, y):
        raise NotImplementedError

    def coefficients(self, x, y):
        raise NotImplementedError

    def __call__(self, x, y):
        return self.data.value(self.foot(x, y))

    def partials(self, x, y):
        s0 = self.foot(x, y)
        sl = self.data.slope(s0)
        gx, gy = self.foot_grad(x, y)
        return sl * gx, sl * gy

    def residual(self, x, y):
        fx, fy = self.partials(x, y)
        alpha, beta = self.coefficients(x, y)
        return alpha * fx + beta * fy


class LinearCharacteristic(CharacteristicSolution):
    """Constant-coefficient case: the foot point is ``cx*x + cy*y``."""

    def __init__(self, tag, data, cx, cy, alpha, beta):
        super().__init__(data)
        self.tag = tag
        self.cx, self.cy = float(cx), float(cy)
        self.alpha, self.beta = float(alpha), float(beta)

    def foot(self, x, y):
        return self.cx * np.asarray(x, dtype=float) + self.cy * np.asarray(y, dtype=float)

    def foot_grad(self, x, y):
        shape = np.broadcast_shapes(np.shape(x), np.shape(y))
        return np.full(shape, self.cx), np.full(shape, self.cy)

    def coefficients(self, x, y):
        return self.alpha, self.beta

    def partials(self, x, y):
        sl = self.data.slope(self.foot(x, y))
        return sl * self.cx, sl * self.cy

    def inverse_foot(self, value):
        return self.data.inverse(value)


class GeodesicCharacteristic(CharacteristicSolution):
    """Solution of ``Ghat v_uh + v_vh = 0`` with ``v(uh, 0) = hhat(uh)``.

    ``step`` defaults to the vh-extent of the domain over 2048. ``method``
    selects how ``d uh0 / d uh`` is obtained: ``"variational"`` (RK4 on the
    variational equation) or ``"fd"`` (central differences of the foot map).
    """

    tag = "Ghat*v_uh+v_vh"

    def __init__(self, Ghat: ScalarField2, data, step=None, method="variational", compiled=None):
        super().__init__(data)
        self.Ghat = Ghat
        self.domain = Ghat.domain
        self.step = step if step is not None else self.domain.height / TRACE_STEPS
        self.method = method
        if compiled is None:
            compiled = Ghat.expr is not None
        self.compiled = compiled
        if compiled:
            self._G = Ghat.expr.jit()
            self._k = _compiled_kernels(str(Ghat.expr))
        else:
            self._G = lambda a, b: float(Ghat(a, b))
            self._k = _bind(self._G, lambda a, b: float(Ghat.partial(a, b, 0)), False)

    # -- tracing
    def _trace(self, x, y, step=None):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast_shapes(x.shape, y.shape)
        U = np.ascontiguousarray(np.broadcast_to(x, shape).ravel())
        V = np.ascontiguousarray(np.broadcast_to(y, shape).ravel())
        out = np.empty((U.size, 4))
        d = self.domain
        self._k["trace_back_many"](U, V, step or self.step, d.x0, d.x1, out)
        return out.reshape(shape + (4,))

    def _trace_checked(self, x, y, strict, step=None):
        out = self._trace(x, y, step)
        exited = out[..., 3] != 0
        if np.any(exited):
            if strict:
                k = np.argwhere(exited.reshape(-1))[0][0]
                flat = out.reshape(-1, 4)
                raise DomainExitError(
                    "characteristic left the domain before reaching vhat=0",
                    exit_point=(float(flat[k, 0]), float(flat[k, 2])),
                )
            out = out.copy()
            out[exited, 0] = np.nan
            out[exited, 1] = np.nan
        return out

    def foot(self, x, y, strict=True):
        out = self._trace_checked(x, y, strict)
        return out[..., 0] if out.ndim > 1 else float(out[0])

    def foot_and_sensitivity(self, x, y, strict=True):
        out = self._trace_checked(x, y, strict)
        if out.ndim == 1:
            return float(out[0]), float(out[1])
        return out[..., 0], out[..., 1]

    def foot_grad(self, x, y, strict=True):
        if self.method == "fd":
            eps = 1e-5
            K = (self.foot(np.add(x, eps), y, strict) - self.foot(np.subtract(x, eps), y, strict)) / (2 * eps)
        else:
            _, K = self.foot_and_sensitivity(x, y, strict)
        return K, -np.asarray(self.Ghat(x, y)) * K

    def coefficients(self, x, y):
        g = np.asarray(self.Ghat(x, y), dtype=float)
        return g, np.ones_like(g)

    def __call__(self, x, y, strict=True):
        return self.data.value(self.foot(x, y, strict))

    def partials(self, x, y, strict=True):
        """``(v_uh, v_vh)``; ``v_vh = -Ghat * v_uh`` exactly."""
        if self.method == "fd":
            s0 = self.foot(x, y, strict)
            K, _ = self.foot_grad(x, y, strict)
        else:
            s0, K = self.foot_and_sensitivity(x, y, strict)
        vu = self.data.slope(s0) * K
        return vu, -np.asarray(self.Ghat(x, y), dtype=float) * vu

    def richardson_error(self, x, y):
        """Foot-point difference between step and step/2 (one halving check)."""
        a = self._trace_checked(x, y, True)[..., 0]
        b = self._trace_checked(x, y, True, step=self.step / 2)[..., 0]
        return np.abs(a - b)

    def trace(self, p, n=32):
        """Points along the characteristic through ``p`` down to ``vh = 0``."""
        uh, vh = float(p[0]), float(p[1])
        ts = np.linspace(vh, 0.0, n)
        path = np.empty((n, 2))
        path[:, 1] = ts
        path[0, 0] = uh
        G = self.Ghat
        for k in range(1, n):
            # march the segment [ts[k-1], ts[k]] forward from the previous point
            u0, t0, t1 = path[k - 1, 0], ts[k - 1], ts[k]
            m = max(1, int(math.ceil(abs(t1 - t0) / self.step)))
            dt = (t1 - t0) / m
            u, t = u0, t0
            for _ in range(m):
                k1 = float(G(u, t))
                k2 = float(G(u + 0.5 * dt * k1, t + 0.5 * dt))
                k3 = float(G(u + 0.5 * dt * k2, t + 0.5 * dt))
                k4 = float(G(u + dt * k3, t + dt))
                u += dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6
                t += dt
            path[k, 0] = u
        return path

    def preimage_scalar(self, s0, w):
        """Fast scalar path: ``(uh, vh, d uh0/d uh, Ghat)`` at the point with foot ``s0`` on ``uh + vh = w``."""
        d = self.domain
        uh, vh, K, g, status = self._k["preimage"](s0, w, self.step, d.x0, d.x1, d.y0, d.y1)
        if status == 1:
            raise DomainExitError("characteristic left the domain while locating the preimage", exit_point=(uh, vh))
        if status == 2:
            raise DomainExitError("characteristic left the domain before reaching vhat=0", exit_point=(uh, vh))
        return uh, vh, K, g

    def locate(self, s0, w, strict=True):
        """Point on the characteristic from foot ``s0`` where ``uh + vh = w``."""
        s0 = np.asarray(s0, dtype=float)
        w = np.asarray(w, dtype=float)
        shape = np.broadcast_shapes(s0.shape, w.shape)
        S = np.ascontiguousarray(np.broadcast_to(s0, shape).ravel())
        W = np.ascontiguousarray(np.broadcast_to(w, shape).ravel())
        out = np.empty((S.size, 3))
        d = self.domain
        self._k["locate_many"](S, W, self.step, d.x0, d.x1, d.y0, d.y1, out)
        exited = out[:, 2] != 0
        if np.any(exited):
            if strict:
                k = int(np.argwhere(exited)[0][0])
                raise DomainExitError(
                    "characteristic left the domain while locating the preimage",
                    exit_point=(float(out[k, 0]), float(out[k, 1])),
                )
            out[exited, :2] = np.nan
        out = out.reshape(shape + (3,))
        if not shape:
            return float(out[0]), float(out[1])
        return out[..., 0], out[..., 1]


# ---------------------------------------------------------- constructors

def solve_plane_pair(a, b):
    """``u = a(x + y)`` solving ``u_x - u_y = 0`` and ``v = b(x - y)`` solving ``v_x + v_y = 0``."""
    u = LinearCharacteristic("u_x-u_y", a, 1.0, 1.0, 1.0, -1.0)
    v = LinearCharacteristic("v_x+v_y", b, 1.0, -1.0, 1.0, 1.0)
    return u, v


def solve_u_hat(h=None):
    """``u = h(uh + vh)``; identity data by default."""
    return LinearCharacteristic("u_uh-u_vh", h or InitialData1D.identity(), 1.0, 1.0, 1.0, -1.0)


def solve_v_hat(Ghat, hhat, step=None, method="variational"):
    return GeodesicCharacteristic(Ghat, hhat, step=step, method=method)


def partials_v_hat(sol, p):
    vu, vv = sol.partials(p[0], p[1])
    return float(vu), float(vv)
