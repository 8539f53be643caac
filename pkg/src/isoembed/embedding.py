"""Surface assembly from the initial data a, b.

With ``u = a(x + y)`` and ``v = b(x - y)`` the plane map inverts to
``x = (A(u) + B(v)) / 2``, ``y = (A(u) - B(v)) / 2`` where ``A = a^-1`` and
``B = b^-1``, and the surface ``X(u, v) = (x, y, v)`` carries the metric

    E = 1/2 a'(A(u))^-2,    F = 0,    G = 1 + 1/2 b'(B(v))^-2.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .characteristics import solve_plane_pair
from .errors import RangeError
from .metric import OrthogonalMetric, Rect, ScalarField2

DEFAULT_GRID = (41, 41)


def _data_range(data):
    lo, hi = data.interval
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return None
    y0, y1 = float(data(lo)), float(data(hi))
    return min(y0, y1), max(y0, y1)


def curve_box(a, b):
    """Bounding box of ``s -> (a(s), b(s))`` over the common interval."""
    ra, rb = _data_range(a), _data_range(b)
    if ra is None or rb is None:
        raise RangeError("initial data needs a finite interval to define the surface domain")
    return Rect(ra[0], ra[1], rb[0], rb[1])


def safe_inverse(data, y):
    """``data^-1`` elementwise with NaN where ``y`` is outside the range."""
    y = np.asarray(y, dtype=float)
    try:
        return np.asarray(data.inverse(y), dtype=float)
    except RangeError:
        pass
    out = np.empty(y.shape)
    for k, yk in np.ndenumerate(y):
        try:
            out[k] = float(data.inverse(yk))
        except RangeError:
            out[k] = np.nan
    return out


def EG_from_ab(a, b, domain=None):
    """``E(u, v)`` and ``G(u, v)`` as an orthogonal metric over the level parameters."""
    domain = domain or curve_box(a, b)

    def E(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return 0.5 / np.asarray(a.slope(a.inverse(u)), dtype=float) ** 2 + 0.0 * v

    def G(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return 1.0 + 0.5 / np.asarray(b.slope(b.inverse(v)), dtype=float) ** 2 + 0.0 * u

    return OrthogonalMetric(
        ScalarField2(E, domain, name="E"),
        ScalarField2(G, domain, name="G"),
    )


@dataclass
class EmbeddedSurface:
    """Nodes ``X[i, j] = X(u[i], v[j])``; ``mask`` is False where inversion failed."""

    u: np.ndarray
    v: np.ndarray
    X: np.ndarray
    mask: np.ndarray

    @property
    def shape(self):
        return self.X.shape[:2]

    @property
    def steps(self):
        du = float(self.u[1] - self.u[0]) if len(self.u) > 1 else 0.0
        dv = float(self.v[1] - self.v[0]) if len(self.v) > 1 else 0.0
        return du, dv

    def mesh(self):
        return np.meshgrid(self.u, self.v, indexing="ij")


def surface_points(a, b, U, V):
    A = safe_inverse(a, U)
    B = safe_inverse(b, V)
    A, B, V = np.broadcast_arrays(A, B, np.asarray(V, dtype=float))
    return np.stack([0.5 * (A + B), 0.5 * (A - B), V], -1)


def build_surface(a, b, grid=DEFAULT_GRID, rect=None):
    """Sample ``X(u, v) = (H, H*, v)`` on a uniform grid.

    ``grid`` is ``(nu, nv)`` over ``rect`` (default: the bounding box of the
    initial curve) or a pair of explicit node arrays ``(us, vs)``.
    """
    if np.ndim(grid[0]) == 0:
        nu, nv = int(grid[0]), int(grid[1])
        rect = rect or curve_box(a, b)
        us, vs = np.linspace(rect.x0, rect.x1, nu), np.linspace(rect.y0, rect.y1, nv)
    else:
        us, vs = (np.atleast_1d(np.asarray(g, dtype=float)) for g in grid)
    U, V = np.meshgrid(us, vs, indexing="ij")
    X = surface_points(a, b, U, V)
    mask = np.all(np.isfinite(X), axis=-1)
    return EmbeddedSurface(us, vs, X, mask)


def fmt(x):
    """Shortest round-trip decimal; integral values print without a fraction."""
    x = float(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def export_mesh(surface, path, format="obj"):
    """Write the surface as an OBJ triangle mesh or a ``u,v,x,y,z`` CSV."""
    path = Path(path)
    nu, nv = surface.shape
    if nu * nv == 0:
        raise ValueError("empty surface")
    if format == "csv":
        U, V = surface.mesh()
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["u", "v", "x", "y", "z"])
            for i in range(nu):
                for j in range(nv):
                    w.writerow([fmt(U[i, j]), fmt(V[i, j])] + [fmt(c) for c in surface.X[i, j]])
        return
    if format != "obj":
        raise ValueError(f"unknown mesh format {format!r}")
    index = np.zeros((nu, nv), dtype=int)
    lines = []
    k = 0
    for i in range(nu):
        for j in range(nv):
            if surface.mask[i, j]:
                k += 1
                index[i, j] = k
                lines.append("v " + " ".join(fmt(c) for c in surface.X[i, j]))
    for i in range(nu - 1):
        for j in range(nv - 1):
            q = index[i, j], index[i + 1, j], index[i + 1, j + 1], index[i, j + 1]
            if min(q) == 0:
                continue
            lines.append(f"f {q[0]} {q[1]} {q[2]}")
            lines.append(f"f {q[0]} {q[2]} {q[3]}")
    path.write_text("\n".join(lines) + "\n")


def load_surface_csv(path):
    """Read back a CSV written by :func:`export_mesh`."""
    rows = np.genfromtxt(path, delimiter=",", names=True, dtype=float)
    us = np.unique(rows["u"])
    vs = np.unique(rows["v"])
    X = np.stack([rows["x"], rows["y"], rows["z"]], -1).reshape(len(us), len(vs), 3)
    return EmbeddedSurface(us, vs, X, np.all(np.isfinite(X), axis=-1))


def substitution_residuals(a, b, x, y, metric=None):
    """Residuals of the three plane equations for ``u = a(x+y)``, ``v = b(x-y)``::

        1 = E u_x^2 + (G - 1) v_x^2
        0 = E u_x u_y + (G - 1) v_x v_y
        1 = E u_y^2 + (G - 1) v_y^2

    with ``E, G`` evaluated at ``(u, v)`` through the inverse plane map.
    """
    metric = metric or EG_from_ab(a, b)
    u, v = solve_plane_pair(a, b)
    U, V = u(x, y), v(x, y)
    ux, uy = u.partials(x, y)
    vx, vy = v.partials(x, y)
    E = metric.E(U, V)
    Gm1 = metric.G(U, V) - 1.0
    return (
        E * ux * ux + Gm1 * vx * vx - 1.0,
        E * ux * uy + Gm1 * vx * vy,
        E * uy * uy + Gm1 * vy * vy - 1.0,
    )
