"""Scalar fields on rectangles, metric containers, pullback and curvature."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import PositivityError, SingularJacobianError
from .expr import Expression, parse

SAMPLING_GRID = 64


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle ``[x0, x1] x [y0, y1]``."""

    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError(f"degenerate rectangle {self}")

    @property
    def width(self):
        return self.x1 - self.x0

    @property
    def height(self):
        return self.y1 - self.y0

    def contains(self, x, y, slack=0.0):
        return (
            (x >= self.x0 - slack) & (x <= self.x1 + slack)
            & (y >= self.y0 - slack) & (y <= self.y1 + slack)
        )

    def grid(self, nx, ny=None):
        """Meshgrid with ``[i, j] <-> (x_i, y_j)``."""
        ny = nx if ny is None else ny
        xs = np.linspace(self.x0, self.x1, nx)
        ys = np.linspace(self.y0, self.y1, ny)
        return np.meshgrid(xs, ys, indexing="ij")

    def as_tuple(self):
        return (self.x0, self.x1, self.y0, self.y1)


@dataclass(frozen=True)
class ScalarField2:
    """Real function of two coordinates with partial-derivative access.

    ``func`` must accept broadcastable arrays. Partials come from ``dx``/``dy``
    when supplied (or from the symbolic derivative when ``expr`` is set) and
    fall back to central differences otherwise.
    """

    func: Callable
    domain: Rect
    dx: Optional[Callable] = None
    dy: Optional[Callable] = None
    expr: Optional[Expression] = None
    name: str = ""

    @classmethod
    def from_expression(cls, e, domain, name=""):
        if isinstance(e, str):
            e = parse(e)
        return cls(
            func=e.compile(),
            domain=domain,
            dx=e.derive("uhat").compile(),
            dy=e.derive("vhat").compile(),
            expr=e,
            name=name or str(e),
        )

    @classmethod
    def constant(cls, c, domain, name=""):
        c = float(c)
        zero = lambda x, y: np.zeros(np.broadcast_shapes(np.shape(x), np.shape(y)))
        return cls(
            func=lambda x, y: zero(x, y) + c, domain=domain, dx=zero, dy=zero, name=name or repr(c)
        )

    def __call__(self, x, y):
        return self.func(x, y)

    @property
    def fd_step(self):
        return 1e-6 * max(self.domain.width, self.domain.height)

    def partial(self, x, y, axis):
        fn = self.dx if axis == 0 else self.dy
        if fn is not None:
            return fn(x, y)
        h = self.fd_step
        if axis == 0:
            return (self.func(np.add(x, h), y) - self.func(np.subtract(x, h), y)) / (2 * h)
        return (self.func(x, np.add(y, h)) - self.func(x, np.subtract(y, h))) / (2 * h)

    def second(self, x, y, axes):
        """Second partial; symbolic when available, else nested central differences."""
        if self.expr is not None:
            names = ("uhat", "vhat")
            d = self.expr.derive(names[axes[0]]).derive(names[axes[1]])
            return d.compile()(x, y)
        h = 1e-4 * (self.domain.width if axes[1] == 0 else self.domain.height)
        shift = [(h, 0.0), (0.0, h)][axes[1]]
        return (
            self.partial(np.add(x, shift[0]), np.add(y, shift[1]), axes[0])
            - self.partial(np.subtract(x, shift[0]), np.subtract(y, shift[1]), axes[0])
        ) / (2 * h)

    def sample(self, n=SAMPLING_GRID):
        X, Y = self.domain.grid(n)
        return X, Y, np.asarray(self.func(X, Y), dtype=float)


def _require_positive(f, label, threshold=0.0):
    X, Y, vals = f.sample()
    bad = ~(vals > threshold)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise PositivityError(
            f"{label} must exceed {threshold} on its domain; got {vals[i, j]!r} at ({X[i, j]!r}, {Y[i, j]!r})",
            point=(float(X[i, j]), float(Y[i, j])),
            value=float(vals[i, j]),
        )


@dataclass(frozen=True)
class GeodesicMetric:
    """``d uhat^2 + Ghat(uhat, vhat) d vhat^2`` on a rectangle."""

    Ghat: ScalarField2

    def __post_init__(self):
        _require_positive(self.Ghat, "Ghat")

    @classmethod
    def from_formula(cls, text, domain):
        return cls(ScalarField2.from_expression(text, domain, name="Ghat"))

    @property
    def domain(self):
        return self.Ghat.domain

    def form(self, uh, vh):
        g = np.asarray(self.Ghat(uh, vh), dtype=float)
        return FirstFundamentalForm(np.ones_like(g), np.zeros_like(g), g)


@dataclass(frozen=True)
class OrthogonalMetric:
    """``E du^2 + G dv^2`` with vanishing mixed term."""

    E: ScalarField2
    G: ScalarField2

    def __post_init__(self):
        _require_positive(self.E, "E")
        _require_positive(self.G, "G")

    @property
    def embeddable(self):
        """True when G > 1 on the sampling grid (needed by the plane-map construction)."""
        return bool(np.all(self.G.sample()[2] > 1.0))

    def form(self, u, v):
        E = np.asarray(self.E(u, v), dtype=float)
        return FirstFundamentalForm(E, np.zeros_like(E), np.asarray(self.G(u, v), dtype=float))


@dataclass(frozen=True)
class FirstFundamentalForm:
    E: object
    F: object
    G: object

    @property
    def det(self):
        return self.E * self.G - self.F * self.F

    @property
    def is_regular(self):
        return bool(np.all((self.E > 0) & (self.G > 0) & (self.det > 0)))

    def matrix(self):
        E, F, G = np.broadcast_arrays(self.E, self.F, self.G)
        return np.stack([np.stack([E, F], -1), np.stack([F, G], -1)], -2)

    @classmethod
    def from_matrix(cls, M):
        M = np.asarray(M)
        return cls(M[..., 0, 0], 0.5 * (M[..., 0, 1] + M[..., 1, 0]), M[..., 1, 1])

    def allclose(self, other, atol):
        return all(
            np.all(np.abs(np.asarray(a) - np.asarray(b)) <= atol)
            for a, b in ((self.E, other.E), (self.F, other.F), (self.G, other.G))
        )


def pullback_form(form, J, singular_tol=1e-14):
    """Contract a target form with the Jacobian: ``J^T M J``."""
    J = np.asarray(J, dtype=float)
    det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    if np.any(np.abs(det) <= singular_tol):
        raise SingularJacobianError("singular Jacobian in pullback")
    M = form.matrix()
    return FirstFundamentalForm.from_matrix(np.swapaxes(J, -1, -2) @ M @ J)


def pullback(target_form, pmap):
    """Pull a form field on the target of ``pmap`` back to its source.

    ``target_form(q)`` returns a :class:`FirstFundamentalForm` at target point
    ``q``; ``pmap`` needs ``forward`` and ``jacobian`` methods. Returns a
    function of source points.
    """

    def pulled(p):
        q = pmap.forward(p)
        J, _ = pmap.jacobian(p)
        return pullback_form(target_form(q), J)

    return pulled


def gaussian_curvature(m):
    """K = -(sqrt Ghat)_{uhat uhat} / sqrt Ghat as a scalar field over (uhat, vhat)."""
    G = m.Ghat

    def K(uh, vh):
        g = np.asarray(G(uh, vh), dtype=float)
        if np.any(g <= 0):
            raise PositivityError("Ghat <= 0 at curvature evaluation point")
        gu = G.partial(uh, vh, 0)
        guu = G.second(uh, vh, (0, 0))
        return -(guu / (2 * g) - gu * gu / (4 * g * g))

    return ScalarField2(func=K, domain=G.domain, name=f"K[{G.name}]")
