"""Consistency of the component system and Cramer-rule recovery of R, S.

With ``(u, v)`` level parameters built on the geodesic chart, the components
``R, S`` of ``duh^2 + Ghat dvh^2`` in ``R du^2 + S dv^2`` satisfy::

    1    = R u_uh^2     + S v_uh^2
    0    = R u_uh u_vh  + S v_uh v_vh
    Ghat = R u_vh^2     + S v_vh^2

which is linear in ``(R, S)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InconsistencyError
from .metric import ScalarField2

CONSISTENCY_TOL = 1e-7
THIRD_EQUATION_TOL = 1e-8


def consistency_residual(Ghat, u_partials, v_partials, p=None):
    """``u_vh v_vh + Ghat u_uh v_uh``; zero exactly when the system is solvable.

    ``Ghat`` is a value (or a field evaluated at ``p``).
    """
    g = Ghat(*p) if callable(Ghat) else Ghat
    uu, uv = u_partials
    vu, vv = v_partials
    return uv * vv + g * uu * vu


def augmented_determinant(Ghat, u_partials, v_partials, p=None):
    """Determinant of the 3x3 augmented matrix, expanded along its last column."""
    g = Ghat(*p) if callable(Ghat) else Ghat
    uu, uv = u_partials
    vu, vv = v_partials
    a11, a12, a13 = uu * uu, vu * vu, 1.0
    a21, a22, a23 = uu * uv, vu * vv, 0.0
    a31, a32, a33 = uv * uv, vv * vv, g
    return (
        a13 * (a21 * a32 - a22 * a31)
        - a23 * (a11 * a32 - a12 * a31)
        + a33 * (a11 * a22 - a12 * a21)
    )


def cramer_solve(u_partials, v_partials):
    """Solve the first two equations for ``(R, S)`` by Cramer's rule."""
    uu, uv = u_partials
    vu, vv = v_partials
    a11, a12, b1 = uu * uu, vu * vu, 1.0
    a21, a22, b2 = uu * uv, vu * vv, 0.0
    D = a11 * a22 - a12 * a21
    return (b1 * a22 - a12 * b2) / D, (a11 * b2 - b1 * a21) / D


def closed_form_RS(Ghat_value, u_vh, v_vh):
    """``R = u_vh^-2 G/(G+1)``, ``S = v_vh^-2 G^2/(G+1)``, valid once both PDEs hold."""
    g = Ghat_value
    return g / (g + 1.0) / (u_vh * u_vh), g * g / (g + 1.0) / (v_vh * v_vh)


@dataclass
class ComponentPair:
    """``R, S`` as fields over the level parameters ``(u, v)``.

    Each evaluation inverts the chart change to ``(uh, vh) = (f(u, v), g(u, v))``
    and recomputes from the PDE solutions; ``R_hat``/``S_hat`` give the same
    quantities as functions of ``(uh, vh)``.
    """

    Ghat: ScalarField2
    u_sol: object
    v_sol: object
    pmap: object

    def hat_partials(self, uh, vh, strict=True):
        uu, uv = self.u_sol.partials(uh, vh)
        if strict:
            vu, vv = self.v_sol.partials(uh, vh)
        else:
            vu, vv = self.v_sol.partials(uh, vh, strict=False)
        return (np.asarray(uu, float), np.asarray(uv, float)), (np.asarray(vu, float), np.asarray(vv, float))

    def hat(self, uh, vh, check=True, strict=True):
        """``(R, S)`` at geodesic-chart points, gated by the consistency residual."""
        up, vp = self.hat_partials(uh, vh, strict)
        g = np.asarray(self.Ghat(uh, vh), dtype=float)
        if check:
            res = np.abs(consistency_residual(g, up, vp))
            if np.nanmax(res, initial=0.0) > CONSISTENCY_TOL:
                raise InconsistencyError(f"consistency residual {np.nanmax(res)!r} exceeds {CONSISTENCY_TOL}")
        R, S = cramer_solve(up, vp)
        if check:
            third = R * up[1] ** 2 + S * vp[1] ** 2 - g
            scale = 1.0 + np.abs(g)
            if np.nanmax(np.abs(third) / scale, initial=0.0) > THIRD_EQUATION_TOL:
                raise InconsistencyError("third component equation not satisfied by Cramer solution")
        return R, S

    def R_hat(self, uh, vh):
        return self.hat(uh, vh)[0]

    def S_hat(self, uh, vh):
        return self.hat(uh, vh)[1]

    def preimage(self, u, v, strict=True):
        q = np.stack(np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float)), -1)
        P = self.pmap.inverse(q, strict=strict)
        return P[..., 0], P[..., 1]

    def __call__(self, u, v, check=True, strict=True):
        uh, vh = self.preimage(u, v, strict)
        if strict:
            return self.hat(uh, vh, check=check)
        ok = np.isfinite(uh) & np.isfinite(vh)
        R = np.full(np.shape(uh), np.nan)
        S = np.full(np.shape(uh), np.nan)
        if np.any(ok):
            R[ok], S[ok] = self.hat(uh[ok], vh[ok], check=check, strict=False)
        return R, S

    def R(self, u, v):
        return self(u, v)[0]

    def S(self, u, v):
        return self(u, v)[1]

    def third_equation_residual(self, uh, vh):
        up, vp = self.hat_partials(uh, vh)
        g = np.asarray(self.Ghat(uh, vh), dtype=float)
        R, S = cramer_solve(up, vp)
        return R * up[1] ** 2 + S * vp[1] ** 2 - g


def cramer_RS(Ghat, u_sol, v_sol, pmap):
    return ComponentPair(Ghat, u_sol, v_sol, pmap)
