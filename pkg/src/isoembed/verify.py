"""Numerical checks of the construction: induced metrics, E=R / G=S, curvature."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .components import consistency_residual
from .embedding import fmt, surface_points
from .errors import RealityViolation
from .metric import FirstFundamentalForm, gaussian_curvature

INDUCED_TOL = 5e-6
ON_CURVE_TOL = 1e-5
CURVE_SAMPLES = 257


# ------------------------------------------------------ induced metric

def _require_interior(surface, node, ring):
    i, j = node
    nu, nv = surface.shape
    du, dv = surface.steps
    if du == 0.0 or dv == 0.0:
        raise ValueError("grid step is zero")
    if not (ring <= i < nu - ring and ring <= j < nv - ring):
        raise IndexError(f"node {node} lacks a {ring}-ring neighbourhood")
    window = surface.mask[i - ring:i + ring + 1, j - ring:j + ring + 1]
    if not window.all():
        raise ValueError(f"node {node} touches a hole in the surface")


def tangents(X, du, dv):
    """Central-difference ``X_u, X_v`` on the interior (shape shrinks by 2)."""
    Xu = (X[2:, 1:-1] - X[:-2, 1:-1]) / (2 * du)
    Xv = (X[1:-1, 2:] - X[1:-1, :-2]) / (2 * dv)
    return Xu, Xv


def induced_fff(surface, node):
    """``(E, F, G)`` at an interior node from central differences with the grid step."""
    _require_interior(surface, node, 1)
    i, j = node
    du, dv = surface.steps
    Xu, Xv = tangents(surface.X[i - 1:i + 2, j - 1:j + 2], du, dv)
    Xu, Xv = Xu[0, 0], Xv[0, 0]
    return FirstFundamentalForm(float(Xu @ Xu), float(Xu @ Xv), float(Xv @ Xv))


def induced_fff_grid(surface):
    """Induced ``E, F, G`` on the full grid, NaN on the boundary ring."""
    du, dv = surface.steps
    if du == 0.0 or dv == 0.0:
        raise ValueError("grid step is zero")
    out = np.full((3,) + surface.shape, np.nan)
    Xu, Xv = tangents(surface.X, du, dv)
    out[0, 1:-1, 1:-1] = np.einsum("...k,...k", Xu, Xu)
    out[1, 1:-1, 1:-1] = np.einsum("...k,...k", Xu, Xv)
    out[2, 1:-1, 1:-1] = np.einsum("...k,...k", Xv, Xv)
    return FirstFundamentalForm(out[0], out[1], out[2])


def induced_fff_at(a, b, u, v, h):
    """Induced form at ``(u, v)`` with tangents from freshly inverted points at step ``h``."""
    P = surface_points(a, b, np.array([u + h, u - h, u, u]), np.array([v, v, v + h, v - h]))
    Xu = (P[0] - P[1]) / (2 * h)
    Xv = (P[2] - P[3]) / (2 * h)
    return FirstFundamentalForm(float(Xu @ Xu), float(Xu @ Xv), float(Xv @ Xv))


def fd_convergence(a, b, exact, points, h):
    """Max induced-form error at steps ``h`` and ``h/2`` and their ratio.

    ``exact(u, v)`` returns the reference :class:`FirstFundamentalForm`.
    """
    errs = []
    for step in (h, h / 2):
        e = 0.0
        for u, v in points:
            got, ref = induced_fff_at(a, b, u, v, step), exact(u, v)
            e = max(e, abs(got.E - ref.E), abs(got.F - ref.F), abs(got.G - ref.G))
        errs.append(e)
    ratio = errs[0] / errs[1] if errs[1] > 0 else math.inf if errs[0] > 0 else math.nan
    return errs[0], errs[1], ratio


# ------------------------------------------------------------ curvature

def _second_differences(X, du, dv):
    Xuu = (X[2:, 1:-1] - 2 * X[1:-1, 1:-1] + X[:-2, 1:-1]) / du ** 2
    Xvv = (X[1:-1, 2:] - 2 * X[1:-1, 1:-1] + X[1:-1, :-2]) / dv ** 2
    Xuv = (X[2:, 2:] - X[2:, :-2] - X[:-2, 2:] + X[:-2, :-2]) / (4 * du * dv)
    return Xuu, Xuv, Xvv


def _shape_curvature(X, du, dv):
    Xu, Xv = tangents(X, du, dv)
    Xuu, Xuv, Xvv = _second_differences(X, du, dv)
    n = np.cross(Xu, Xv)
    n = n / np.linalg.norm(n, axis=-1, keepdims=True)
    dot = lambda p, q: np.einsum("...k,...k", p, q)
    E, F, G = dot(Xu, Xu), dot(Xu, Xv), dot(Xv, Xv)
    L, M, N = dot(Xuu, n), dot(Xuv, n), dot(Xvv, n)
    return (L * N - M * M) / (E * G - F * F)


def surface_curvature(surface, node):
    """Gaussian curvature ``(LN - M^2) / (EG - F^2)`` from finite differences."""
    _require_interior(surface, node, 2)
    i, j = node
    du, dv = surface.steps
    return float(_shape_curvature(surface.X[i - 1:i + 2, j - 1:j + 2], du, dv)[0, 0])


def surface_curvature_grid(surface):
    du, dv = surface.steps
    K = np.full(surface.shape, np.nan)
    K[1:-1, 1:-1] = _shape_curvature(surface.X, du, dv)
    K[:2], K[-2:], K[:, :2], K[:, -2:] = np.nan, np.nan, np.nan, np.nan
    return K


def brioschi(E, F, G, du, dv):
    """Intrinsic curvature of sampled ``E, F, G`` (NaN within two nodes of the edge)."""
    d_u = lambda f: (f[2:, 1:-1] - f[:-2, 1:-1]) / (2 * du)
    d_v = lambda f: (f[1:-1, 2:] - f[1:-1, :-2]) / (2 * dv)
    d_uu = lambda f: (f[2:, 1:-1] - 2 * f[1:-1, 1:-1] + f[:-2, 1:-1]) / du ** 2
    d_vv = lambda f: (f[1:-1, 2:] - 2 * f[1:-1, 1:-1] + f[1:-1, :-2]) / dv ** 2
    d_uv = lambda f: (f[2:, 2:] - f[2:, :-2] - f[:-2, 2:] + f[:-2, :-2]) / (4 * du * dv)
    c = lambda f: f[1:-1, 1:-1]
    Eu, Ev, Fu, Fv, Gu, Gv = d_u(E), d_v(E), d_u(F), d_v(F), d_u(G), d_v(G)
    e, f, g = c(E), c(F), c(G)
    m1 = np.array([
        [-0.5 * d_vv(E) + d_uv(F) - 0.5 * d_uu(G), 0.5 * Eu, Fu - 0.5 * Ev],
        [Fv - 0.5 * Gu, e, f],
        [0.5 * Gv, f, g],
    ])
    z = np.zeros_like(e)
    m2 = np.array([
        [z, 0.5 * Ev, 0.5 * Gu],
        [0.5 * Ev, e, f],
        [0.5 * Gu, f, g],
    ])
    det = lambda m: (
        m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
        + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
    )
    K = np.full(E.shape, np.nan)
    K[1:-1, 1:-1] = (det(m1) - det(m2)) / (e * g - f * f) ** 2
    return K


# -------------------------------------------------------------- report

def _summary(x):
    x = np.asarray(x, dtype=float)
    fin = x[np.isfinite(x)]
    if fin.size == 0:
        return {"max": None, "mean": None, "count": 0}
    return {"max": float(np.max(fin)), "mean": float(np.mean(fin)), "count": int(fin.size)}


@dataclass
class ResidualReport:
    """Isometry defects over the level-parameter grid and along the initial curve."""

    u: np.ndarray
    v: np.ndarray
    grids: dict
    curve: dict
    flags: dict
    scalars: dict = field(default_factory=dict)

    @property
    def summary(self):
        out = {}
        for name in ("E_minus_R", "G_minus_S", "Eind_minus_R", "F_ind", "Gind_minus_S"):
            out[f"{name}.off_curve"] = _summary(self.grids[name])
        for name in ("E_minus_R", "G_minus_S"):
            out[f"{name}.on_curve"] = _summary(self.curve[name])
        for name in ("K_intrinsic", "K_surface", "K_brioschi"):
            out[name] = _summary(np.abs(self.grids[name]))
        out["K_surface_minus_brioschi"] = _summary(np.abs(self.grids["K_surface"] - self.grids["K_brioschi"]))
        return out

    def on_curve_max(self):
        return max(_summary(self.curve[k])["max"] or 0.0 for k in ("E_minus_R", "G_minus_S"))

    def off_curve_max(self):
        vals = [_summary(self.grids[k])["max"] for k in ("E_minus_R", "G_minus_S")]
        return max((v for v in vals if v is not None), default=math.nan)

    def to_dict(self):
        def arr(x):
            x = np.asarray(x, dtype=float)
            return {"dims": list(x.shape), "data": [_num(t) for t in x.ravel(order="C")]}

        return {
            "axes": {"u": arr(self.u), "v": arr(self.v)},
            "fields": {k: arr(v) for k, v in sorted(self.grids.items())},
            "curve": {k: arr(v) for k, v in sorted(self.curve.items())},
            "flags": {k: _clean(v) for k, v in sorted(self.flags.items())},
            "scalars": {k: _clean(v) for k, v in sorted(self.scalars.items())},
            "summary": _clean(self.summary),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1, allow_nan=False) + "\n"

    def write_fields(self, directory):
        """One CSV per grid field with rows over ``u`` and columns over ``v``."""
        directory.mkdir(parents=True, exist_ok=True)
        for name, g in sorted(self.grids.items()):
            lines = ["u\\v," + ",".join(fmt(t) for t in self.v)]
            for i, ui in enumerate(self.u):
                lines.append(fmt(ui) + "," + ",".join(fmt(t) for t in g[i]))
            (directory / f"{name}.csv").write_text("\n".join(lines) + "\n")


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _clean(v):
    if isinstance(v, dict):
        return {k: _clean(t) for k, t in sorted(v.items())}
    if isinstance(v, (list, tuple)):
        return [_clean(t) for t in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return _num(v)
    return v


def reality_variants(G, v_vh):
    """Margins ``S - 1`` with ``Ghat + 1`` and with ``Ghat^2 + 1`` in the denominator."""
    G = np.asarray(G, dtype=float)
    base = G * G / v_vh ** 2
    return base / (G + 1.0) - 1.0, base / (G * G + 1.0) - 1.0


def check_claim_ER_GS(art, curve_samples=CURVE_SAMPLES):
    """Measure ``E - R`` and ``G - S`` on the initial curve and over the surface grid.

    ``art`` is a :class:`~isoembed.pipeline.PipelineArtifacts`. Off-curve
    deviations are recorded, never judged.
    """
    for name in ("components", "trajectory", "EG", "surface", "system", "metric"):
        if getattr(art, name, None) is None:
            raise ValueError(f"missing artifact: {name}")
    tr, EG, surf, cp = art.trajectory, art.EG, art.surface, art.components

    # on the curve
    idx = np.unique(np.linspace(0, len(tr.s) - 1, min(curve_samples, len(tr.s))).round().astype(int))
    s, ca, cb = tr.s[idx], tr.a[idx], tr.b[idx]
    Rc, Sc = cp(ca, cb, check=False, strict=False)
    Ec, Gc = EG.E(ca, cb), EG.G(ca, cb)
    Gh = np.empty(len(s))
    vvh = np.empty(len(s))
    for k in range(len(s)):
        _, _, Gh[k], _, vvh[k] = art.system.point(ca[k], cb[k])
    m_plus, m_square = reality_variants(Gh, vvh)
    curve = {
        "s": s,
        "a": ca,
        "b": cb,
        "E_minus_R": np.abs(Ec - Rc),
        "G_minus_S": np.abs(Gc - Sc),
        "margin": m_plus,
        "margin_square_variant": m_square,
    }

    # over the grid
    U, V = surf.mesh()
    R, S = cp(U, V, check=False, strict=False)
    E, G = EG.E(U, V), EG.G(U, V)
    ind = induced_fff_grid(surf)
    du, dv = surf.steps
    UH, VH = cp.preimage(U, V, strict=False)
    ok = np.isfinite(UH) & np.isfinite(VH)
    K_int = np.full(U.shape, np.nan)
    K_int[ok] = gaussian_curvature(art.metric)(UH[ok], VH[ok])
    up, vp = cp.hat_partials(UH[ok], VH[ok], strict=False)
    cons = np.full(U.shape, np.nan)
    cons[ok] = consistency_residual(np.asarray(art.metric.Ghat(UH[ok], VH[ok]), float), up, vp)
    grids = {
        "R": R,
        "S": S,
        "E": E,
        "G": G,
        "E_minus_R": np.abs(E - R),
        "G_minus_S": np.abs(G - S),
        "E_ind": ind.E,
        "F_ind": np.abs(ind.F),
        "G_ind": ind.G,
        "Eind_minus_R": np.abs(ind.E - R),
        "Gind_minus_S": np.abs(ind.G - S),
        "consistency": np.abs(cons),
        "K_intrinsic": K_int,
        "K_surface": surface_curvature_grid(surf),
        "K_brioschi": brioschi(ind.E, ind.F, ind.G, du, dv),
    }
    flags = {
        "truncated": bool(tr.truncated),
        "truncation_reason": tr.reason,
        "reality_violation": bool(tr.truncated and tr.reason is not None and tr.reason.startswith("RealityViolation")),
        "curve_unreachable_samples": int(np.sum(~(np.isfinite(Rc) & np.isfinite(Sc)))),
        "S_le_1_nodes": int(np.sum(np.isfinite(S) & (S <= 1.0))),
        "domain_exit_nodes": int(np.sum(~ok)),
        "surface_hole_nodes": int(np.sum(~surf.mask)),
        "reality_variants_disagree": bool(np.any(np.sign(m_plus) != np.sign(m_square))),
    }
    scalars = {
        "s_end": tr.s_end,
        "ode_error_estimate": tr.error_estimate,
        "delta": art.delta,
        "ghat": art.ghat_text,
    }
    return ResidualReport(surf.u, surf.v, grids, curve, flags, scalars)


# ---------------------------------------------------- worked example

@dataclass
class Check:
    name: str
    value: float
    expected: float
    tol: float

    @property
    def error(self):
        return abs(self.value - self.expected)

    @property
    def passed(self):
        return bool(self.error <= self.tol)


@dataclass
class WorkedExampleReport:
    epsilon: float
    completed: bool
    checks: list
    failure: Optional[str] = None
    artifacts: object = None

    @property
    def passed(self):
        return self.completed and all(c.passed for c in self.checks)

    def assert_ok(self):
        if not self.completed:
            raise AssertionError(f"pipeline did not complete for epsilon={self.epsilon}: {self.failure}")
        for c in self.checks:
            if not c.passed:
                raise AssertionError(f"{c.name}: got {c.value!r}, expected {c.expected!r} (error {c.error:.3e} > {c.tol:g})")


def worked_example(epsilon, grid=(41, 41), s_max=1.0, domain=None):
    """Flat metric ``Ghat = 1`` with ``hhat = epsilon * uhat``; compare with the closed forms."""
    from .pipeline import PipelineConfig, run_pipeline

    cfg = PipelineConfig(ghat="1", delta=epsilon, grid=grid, s_max=s_max)
    if domain is not None:
        cfg.domain = domain
    try:
        art = run_pipeline(cfg, write=False)
    except RealityViolation as exc:
        return WorkedExampleReport(epsilon, False, [], failure=f"RealityViolation: {exc}")
    except Exception as exc:  # noqa: BLE001 - reported, not swallowed
        cause = getattr(exc, "cause", exc)
        if isinstance(cause, RealityViolation):
            return WorkedExampleReport(epsilon, False, [], failure=f"RealityViolation: {cause}")
        raise
    if art.trajectory.truncated and "RealityViolation" in (art.trajectory.reason or ""):
        return WorkedExampleReport(epsilon, False, [], failure=art.trajectory.reason, artifacts=art)
    # leaving the domain early only shortens the curve; the checks run on what was reached
    tr = art.trajectory
    slope_b = (epsilon ** -2 - 2.0) ** -0.5
    pts = np.array([[0.0, 0.0], [0.3, -0.2], [-0.5, 0.4], [0.7, 0.1]])
    dets = art.pmap.jacobian(pts)[1]
    checks = [
        Check("jacobian", float(dets[np.argmax(np.abs(dets + 2 * epsilon))]), -2.0 * epsilon, 1e-12),
        Check("a(s_end)", float(tr.a[-1]), tr.s_end, 1e-10),
        Check("b(s_end)", float(tr.b[-1]), slope_b * tr.s_end, 1e-10),
        Check("max|a(s) - s|", float(np.max(np.abs(tr.a - tr.s))), 0.0, 1e-10),
        Check("max|b(s) - b's|", float(np.max(np.abs(tr.b - slope_b * tr.s))), 0.0, 1e-10),
    ]
    surf = art.surface
    U, V = surf.mesh()
    E, G = art.EG.E(U, V), art.EG.G(U, V)
    G_exact = 1.0 + 0.5 * (epsilon ** -2 - 2.0)
    worst = lambda x, ref: float(x.ravel()[np.nanargmax(np.abs(x - ref))])
    checks += [Check("E", worst(E, 0.5), 0.5, 1e-9), Check("G", worst(G, G_exact), G_exact, 1e-9)]
    ind = induced_fff_grid(surf)
    inner = (slice(1, -1), slice(1, -1))
    for name, field_, ref in (("E_ind", ind.E, 0.5), ("F_ind", ind.F, 0.0), ("G_ind", ind.G, 0.5 * epsilon ** -2)):
        checks.append(Check(name, worst(field_[inner], ref), ref, INDUCED_TOL))
    return WorkedExampleReport(epsilon, True, checks, artifacts=art)


def reality_margin_at_origin(epsilon):
    """``S - 1`` at ``s = 0`` for the worked example with slope ``epsilon``."""
    from .pipeline import PipelineConfig, build_system

    cfg = PipelineConfig(ghat="1", delta=epsilon)
    return build_system(cfg).system.margin(0.0, 0.0)


def reality_boundary(lo=0.5, hi=1.0, tol=1e-4):
    """Bisect the slope at which the example's initial margin changes sign."""
    if not (reality_margin_at_origin(lo) > 0 >= reality_margin_at_origin(hi)):
        raise ValueError("bracket does not straddle the reality boundary")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if reality_margin_at_origin(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
