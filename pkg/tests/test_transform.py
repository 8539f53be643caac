import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isoembed.characteristics import InitialData1D, solve_plane_pair, solve_u_hat, solve_v_hat
from isoembed.errors import InversionError, RangeError
from isoembed.metric import Rect, ScalarField2
from isoembed.transform import (
    ParamMap2,
    affine_map,
    assemble,
    geodesic_map,
    invert,
    invert_grid,
    invert_plane,
    jacobian,
    plane_map,
    working_subdomain,
)

BOX = Rect(-1.5, 1.5, -1.5, 1.5)


def geo(text, delta):
    G = ScalarField2.from_expression(text, BOX)
    return G, solve_u_hat(), solve_v_hat(G, InitialData1D.linear(delta))


def test_worked_example_map():
    eps = 0.5
    _, u, v = geo("1", eps)
    m = geodesic_map(u, v)
    pts = np.random.default_rng(0).uniform(-0.5, 0.5, (20, 2))
    J, det = jacobian(m, pts)
    assert np.allclose(det, -2 * eps, atol=1e-12)
    q = m.forward(np.array([1.0, 0.0]))
    assert np.allclose(q, [1.0, 0.5])
    # exact inverse is ((u + v/eps)/2, (u - v/eps)/2)
    assert np.allclose(m.inverse(np.array([1.0, 0.5])), [1.0, 0.0], atol=1e-12)
    assert np.allclose(invert(m, np.array([1.0, 0.5]), seed=[0.3, 0.3]), [1.0, 0.0], atol=1e-11)


def test_identity_and_diagonal():
    I = affine_map(np.eye(2))
    assert jacobian(I, np.array([0.2, 0.3]))[1] == 1.0
    assert np.allclose(invert(I, np.array([0.4, -0.1]), seed=[0, 0]), [0.4, -0.1])
    D = affine_map(np.diag([2.0, 3.0]))
    assert jacobian(D, np.array([0.0, 0.0]))[1] == 6.0
    assert np.allclose(invert(D, np.array([4.0, 6.0]), seed=[0, 0]), [2.0, 2.0], atol=1e-12)


def test_assemble_diagonal_fields():
    box = Rect(-1, 1, -1, 1)
    u = ScalarField2.from_expression("2*uhat", box)
    v = ScalarField2.from_expression("3*vhat", box)

    class F:
        def __init__(self, f):
            self.f = f

        def __call__(self, x, y):
            return self.f(x, y)

        def partials(self, x, y):
            return self.f.partial(x, y, 0), self.f.partial(x, y, 1)

    m = assemble(F(u), F(v), box)
    assert jacobian(m, np.array([0.1, 0.2]))[1] == 6.0


def test_plane_jacobian_on_line():
    a = InitialData1D.polynomial([0.0, 1.0, 0.2, 0.1], (-3, 3))
    b = InitialData1D.scaled_tanh(1.0, 0.5, (-3, 3))
    m = plane_map(a, b, Rect(-1, 1, -1, 1))
    x = np.linspace(-0.9, 0.9, 11)
    _, det = jacobian(m, np.stack([x, 0 * x], -1))
    assert np.allclose(det, -2 * a.slope(x) * b.slope(x), rtol=1e-14)


def test_invert_plane_examples():
    ident = InitialData1D.identity()
    assert np.allclose(invert_plane(ident, ident, (3.0, 1.0)), [2.0, 1.0])
    assert np.allclose(invert_plane(InitialData1D.linear(2.0), ident, (4.0, 1.0)), [1.5, 0.5])
    eps = 0.5
    b = InitialData1D.linear((eps ** -2 - 2) ** -0.5)
    u, v = 0.4, 0.3
    assert np.allclose(invert_plane(ident, b, (u, v)), [(u + np.sqrt(2) * v) / 2, (u - np.sqrt(2) * v) / 2], atol=1e-15)


def test_invert_plane_range_error():
    a = InitialData1D.scaled_tanh(1.0, 1.0, (-2, 2))
    with pytest.raises(RangeError):
        invert_plane(a, InitialData1D.identity(), (1.5, 0.0))


def test_invert_plane_agrees_with_newton():
    a = InitialData1D.polynomial([0.0, 1.0, 0.2, 0.1], (-3, 3))
    b = InitialData1D.scaled_tanh(1.0, 0.5, (-3, 3))
    m = plane_map(a, b, Rect(-1, 1, -1, 1))
    for p in np.random.default_rng(4).uniform(-0.8, 0.8, (30, 2)):
        q = m.forward(p)
        assert np.allclose(m.invert(q, seed=p + 0.05), invert_plane(a, b, q), atol=1e-9)


@pytest.mark.parametrize("text,delta", [("exp(2*uhat)", 0.125), ("cos(uhat)^2", 0.5)])
@given(st.tuples(st.floats(-0.5, 0.5), st.floats(-0.3, 0.3)), st.tuples(st.floats(-0.02, 0.02), st.floats(-0.02, 0.02)))
def test_newton_roundtrip(text, delta, p, jitter):
    _, u, v = geo(text, delta)
    m = geodesic_map(u, v)
    p = np.array(p)
    q = m.forward(p)
    assert np.allclose(m.invert(q, seed=p + np.array(jitter)), p, atol=1e-9)
    assert np.allclose(m.inverse(q), p, atol=1e-9)


@pytest.mark.parametrize("text,delta", [("exp(2*uhat)", 0.125), ("1 + 0.1*uhat", 0.5), ("cos(uhat)^2", 0.5)])
def test_jacobian_on_initial_line(text, delta):
    G, u, v = geo(text, delta)
    m = geodesic_map(u, v)
    x = np.linspace(-1.2, 1.2, 9)
    _, det = jacobian(m, np.stack([x, 0 * x], -1))
    vu = delta
    expected = 1.0 * (-vu) * (G(x, 0 * x) + 1)
    assert np.allclose(det, expected, rtol=1e-6, atol=1e-6)


def test_invert_grid_continuation():
    _, u, v = geo("exp(2*uhat)", 0.125)
    m = geodesic_map(u, v)
    generic = ParamMap2(m.forward_fn, m.jacobian_fn, m.domain)
    P = np.stack(np.meshgrid(np.linspace(-0.4, 0.4, 5), np.linspace(-0.1, 0.3, 4), indexing="ij"), -1)
    Q = m.forward(P)
    assert np.allclose(invert_grid(generic, Q), P, atol=1e-9)
    assert np.allclose(generic.inverse(Q), P, atol=1e-9)


def test_newton_failure_reports_iterate():
    m = affine_map(np.array([[1.0, 0.0], [0.0, 0.0]]) + 1e-20)

    with pytest.raises(Exception) as exc:
        m.invert(np.array([1.0, 1.0]), seed=[0, 0])
    assert getattr(exc.value, "point", None) is not None

    bump = ParamMap2(
        lambda x, y: (x ** 2 + 1.0, y),
        lambda x, y: np.stack([np.stack([2 * np.asarray(x), 0 * np.asarray(x)], -1), np.stack([0 * np.asarray(x), 1 + 0 * np.asarray(x)], -1)], -2),
        Rect(-2, 2, -2, 2),
    )
    with pytest.raises(InversionError) as exc:
        bump.invert(np.array([0.0, 0.0]), seed=[0.5, 0.0])
    assert exc.value.residual is not None


def test_working_subdomain_contains_line_and_is_invertible():
    _, u, v = geo("exp(2*uhat)", 0.125)
    m = geodesic_map(u, v)
    W = working_subdomain(m, n=17)
    assert W.y0 < 0 < W.y1
    X, Y = W.grid(7)
    P = np.stack([X, Y], -1)
    assert np.allclose(m.inverse(m.forward(P)), P, atol=1e-9)
