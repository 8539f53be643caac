"""Parameter maps built from PDE solutions, their Jacobians and inverses."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .characteristics import solve_plane_pair
from .errors import DomainExitError, InversionError, RangeError, SingularJacobianError
from .metric import Rect

NEWTON_TOL = 1e-11
NEWTON_MAX_ITER = 25
NEWTON_MAX_HALVINGS = 6


@dataclass(frozen=True)
class ParamMap2:
    """Differentiable map between planar parameter rectangles.

    ``forward_fn(x, y) -> (X, Y)`` and ``jacobian_fn(x, y) -> J[..., 2, 2]``
    take broadcastable arrays. ``inverse_fn``, when given, is an exact
    structural inverse; ``invert`` is always the generic Newton iteration.
    """

    forward_fn: Callable
    jacobian_fn: Callable
    domain: Rect
    inverse_fn: Optional[Callable] = None
    name: str = ""

    def forward(self, p):
        p = np.asarray(p, dtype=float)
        X, Y = self.forward_fn(p[..., 0], p[..., 1])
        return np.stack(np.broadcast_arrays(np.asarray(X, dtype=float), np.asarray(Y, dtype=float)), -1)

    def jacobian(self, p):
        p = np.asarray(p, dtype=float)
        J = np.asarray(self.jacobian_fn(p[..., 0], p[..., 1]), dtype=float)
        det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
        return J, det

    def invert(self, q, seed, tol=NEWTON_TOL, max_iter=NEWTON_MAX_ITER):
        """Damped Newton solve of ``forward(p) = q`` from ``seed``."""
        q = np.asarray(q, dtype=float)
        p = np.asarray(seed, dtype=float).copy()
        scale = max(1.0, float(np.max(np.abs(q))))
        r = self.forward(p) - q
        res = float(np.max(np.abs(r)))
        for _ in range(max_iter):
            if res <= tol * scale:
                return p
            J, det = self.jacobian(p)
            if not np.isfinite(det) or abs(det) <= 1e-14 * max(1.0, float(np.max(np.abs(J))) ** 2):
                raise SingularJacobianError("singular Jacobian during Newton inversion", point=p, residual=res)
            dp = np.linalg.solve(J, -r)
            lam = 1.0
            for _ in range(NEWTON_MAX_HALVINGS + 1):
                pn = p + lam * dp
                try:
                    rn = self.forward(pn) - q
                    resn = float(np.max(np.abs(rn)))
                except DomainExitError:
                    resn = np.inf
                if resn < res:
                    break
                lam *= 0.5
            if not np.isfinite(resn):
                raise InversionError("Newton step left the domain", point=p, residual=res)
            p, r, res = pn, rn, resn
        if res <= tol * scale:
            return p
        raise InversionError(f"Newton did not converge in {max_iter} iterations", point=p, residual=res)

    def inverse(self, q, seed=None, strict=True):
        """Preimage of ``q`` (any leading shape); structural inverse if available.

        With ``strict=False`` points the structural inverse cannot reach come
        back as NaN instead of raising.
        """
        q = np.asarray(q, dtype=float)
        if self.inverse_fn is not None:
            x, y = self.inverse_fn(q[..., 0], q[..., 1], strict=strict)
            return np.stack(np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float)), -1)
        if q.ndim == 1:
            d = self.domain
            seed = np.array([(d.x0 + d.x1) / 2, (d.y0 + d.y1) / 2]) if seed is None else seed
            return self.invert(q, seed)
        return invert_grid(self, q, seed)


def invert_grid(pmap, Q, seed=None):
    """Invert over a grid ``Q[i, j, 2]`` seeding each node from an already solved neighbour."""
    Q = np.asarray(Q, dtype=float)
    if Q.ndim == 2:
        Q = Q[:, None, :]
        squeeze = True
    else:
        squeeze = False
    n, m = Q.shape[:2]
    out = np.full(Q.shape, np.nan)
    d = pmap.domain
    first = np.array([(d.x0 + d.x1) / 2, (d.y0 + d.y1) / 2]) if seed is None else np.asarray(seed, float)
    for i in range(n):
        for j in range(m):
            if j > 0 and np.all(np.isfinite(out[i, j - 1])):
                s = out[i, j - 1]
            elif i > 0 and np.all(np.isfinite(out[i - 1, j])):
                s = out[i - 1, j]
            else:
                s = first
            try:
                out[i, j] = pmap.invert(Q[i, j], s)
            except (InversionError, SingularJacobianError):
                continue
    return out[:, 0, :] if squeeze else out


def assemble(u_field, v_field, domain, inverse=None, name=""):
    """Map ``p -> (u_field(p), v_field(p))`` with the Jacobian from the fields' partials."""

    def forward_fn(x, y):
        return u_field(x, y), v_field(x, y)

    def jacobian_fn(x, y):
        ux, uy = u_field.partials(x, y)
        vx, vy = v_field.partials(x, y)
        ux, uy, vx, vy = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (ux, uy, vx, vy)))
        return np.stack([np.stack([ux, uy], -1), np.stack([vx, vy], -1)], -2)

    return ParamMap2(forward_fn, jacobian_fn, domain, inverse_fn=inverse, name=name)


def geodesic_map(u_sol, v_sol):
    """The chart change ``(uh, vh) -> (u, v)`` with its exact characteristic inverse (f, g)."""

    def inverse_fn(u, v, strict=True):
        w = u_sol.data.inverse(u)
        s0 = v_sol.data.inverse(v)
        return v_sol.locate(s0, w, strict=strict)

    return assemble(u_sol, v_sol, v_sol.domain, inverse=inverse_fn, name="geodesic->level")


def plane_map(a, b, domain):
    """``(x, y) -> (a(x + y), b(x - y))`` with inverse (H, H*)."""
    u, v = solve_plane_pair(a, b)

    def inverse_fn(uu, vv, strict=True):
        xy = invert_plane(a, b, (uu, vv))
        return xy[0], xy[1]

    return assemble(u, v, domain, inverse=inverse_fn, name="plane->level")


def affine_map(A, c=(0.0, 0.0), domain=None):
    A = np.asarray(A, dtype=float)
    c = np.asarray(c, dtype=float)
    domain = domain or Rect(-1e6, 1e6, -1e6, 1e6)

    def forward_fn(x, y):
        return A[0, 0] * x + A[0, 1] * y + c[0], A[1, 0] * x + A[1, 1] * y + c[1]

    def jacobian_fn(x, y):
        shape = np.broadcast_shapes(np.shape(x), np.shape(y))
        return np.broadcast_to(A, shape + (2, 2)).copy()

    def inverse_fn(X, Y, strict=True):
        Ai = np.linalg.inv(A)
        dx, dy = np.asarray(X) - c[0], np.asarray(Y) - c[1]
        return Ai[0, 0] * dx + Ai[0, 1] * dy, Ai[1, 0] * dx + Ai[1, 1] * dy

    return ParamMap2(forward_fn, jacobian_fn, domain, inverse_fn=inverse_fn, name="affine")


def jacobian(pmap, p):
    return pmap.jacobian(p)


def invert(pmap, q, seed):
    return pmap.invert(q, seed)


def invert_plane(a, b, q):
    """``x = (a^-1(u) + b^-1(v)) / 2``, ``y = (a^-1(u) - b^-1(v)) / 2``."""
    u, v = q
    A = np.asarray(a.inverse(u), dtype=float)
    B = np.asarray(b.inverse(v), dtype=float)
    return np.stack(np.broadcast_arrays(0.5 * (A + B), 0.5 * (A - B)))


def working_subdomain(pmap, n=33, ratio=0.1):
    """Largest grid-aligned rectangle around ``y = 0`` with ``|det J| >= ratio * |det J(x, 0)|``.

    Sampled on an ``n x n`` grid of the map's domain (plus the line itself).
    Nodes where the Jacobian cannot be evaluated (characteristic exits) fail.
    """
    d = pmap.domain
    if not (d.y0 <= 0.0 <= d.y1):
        raise ValueError("domain does not contain the initial line")
    xs = np.linspace(d.x0, d.x1, n)
    ys_up = np.linspace(0.0, d.y1, n)[1:]
    ys_dn = np.linspace(0.0, d.y0, n)[1:]

    def dets(y):
        out = np.empty(len(xs))
        for k, x in enumerate(xs):
            try:
                out[k] = abs(float(pmap.jacobian(np.array([x, y]))[1]))
            except (DomainExitError, RangeError):
                out[k] = np.nan
        return out

    base = dets(0.0)
    if not np.all(np.isfinite(base)) or np.any(base == 0):
        raise SingularJacobianError("Jacobian vanishes or is undefined on the initial line")

    def reach(ys):
        # number of consecutive passing rows per column, counted from the line
        count = np.zeros(n, dtype=int)
        alive = np.ones(n, dtype=bool)
        for y in ys:
            dv = dets(y)
            ok = np.isfinite(dv) & (dv >= ratio * base)
            alive &= ok
            count += alive
            if not alive.any():
                break
        return count

    up, dn = reach(ys_up), reach(ys_dn)
    best, best_area = None, 0.0
    for i0 in range(n):
        for i1 in range(i0 + 1, n):
            ku, kd = up[i0:i1 + 1].min(), dn[i0:i1 + 1].min()
            top = ys_up[ku - 1] if ku else 0.0
            bottom = ys_dn[kd - 1] if kd else 0.0
            area = (xs[i1] - xs[i0]) * (top - bottom)
            if area > best_area:
                best, best_area = (xs[i0], xs[i1], bottom, top), area
    if best is None:
        raise SingularJacobianError("no invertible neighbourhood of the initial line")
    return Rect(*best)
