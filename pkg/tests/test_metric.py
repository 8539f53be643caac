import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isoembed.errors import PositivityError, SingularJacobianError
from isoembed.metric import (
    FirstFundamentalForm,
    GeodesicMetric,
    OrthogonalMetric,
    Rect,
    ScalarField2,
    gaussian_curvature,
    pullback,
    pullback_form,
)
from isoembed.transform import affine_map

from oracles import K_COS2, K_EXP2

BOX = Rect(-1.0, 1.0, -1.0, 1.0)


def flat_form(q):
    q = np.asarray(q, dtype=float)
    one = np.ones(q.shape[:-1])
    return FirstFundamentalForm(one, 0 * one, one)


def test_rect_rejects_degenerate():
    with pytest.raises(ValueError):
        Rect(0, 0, 0, 1)


def test_geodesic_metric_positivity():
    GeodesicMetric.from_formula("exp(2*uhat)", BOX)
    with pytest.raises(PositivityError):
        GeodesicMetric.from_formula("-1", BOX)
    with pytest.raises(PositivityError):
        GeodesicMetric.from_formula("uhat", BOX)


def test_orthogonal_metric_embeddable_flag():
    one = ScalarField2.constant(1.0, BOX)
    assert not OrthogonalMetric(one, one).embeddable
    assert OrthogonalMetric(one, ScalarField2.constant(1.5, BOX)).embeddable


def test_field_partials_agree_with_differences():
    f = ScalarField2.from_expression("exp(uhat)*sin(vhat) + uhat^3", BOX)
    g = ScalarField2(func=f.func, domain=BOX)
    x, y = np.random.default_rng(1).uniform(-0.9, 0.9, (2, 50))
    for axis in (0, 1):
        a, b = f.partial(x, y, axis), g.partial(x, y, axis)
        assert np.all(np.abs(a - b) <= 1e-6 * (1 + np.abs(a)))


def test_pullback_identity():
    ident = affine_map(np.eye(2))
    form = pullback(lambda q: FirstFundamentalForm(2.0, 0.3, 5.0), ident)(np.array([0.2, 0.1]))
    assert (form.E, form.F, form.G) == (2.0, 0.3, 5.0)


def test_pullback_worked_example_inverse():
    # uh = (u + v/eps)/2, vh = (u - v/eps)/2 with eps = 1/2
    eps = 0.5
    m = affine_map([[0.5, 0.5 / eps], [0.5, -0.5 / eps]])
    f = pullback(flat_form, m)(np.array([0.3, 0.7]))
    assert f.E == pytest.approx(0.5, abs=1e-15)
    assert f.F == pytest.approx(0.0, abs=1e-15)
    assert f.G == pytest.approx(2.0, abs=1e-15)


def test_pullback_shear():
    m = affine_map([[0.5, 0.5], [0.5, -0.5]])
    f = pullback(flat_form, m)(np.array([0.0, 0.0]))
    assert (f.E, f.F, f.G) == (0.5, 0.0, 0.5)


def test_pullback_singular():
    with pytest.raises(SingularJacobianError):
        pullback_form(FirstFundamentalForm(1.0, 0.0, 1.0), np.array([[1.0, 1.0], [1.0, 1.0]]))


matrices = st.lists(st.floats(-2, 2), min_size=4, max_size=4).map(lambda v: np.array(v).reshape(2, 2)).filter(
    lambda A: abs(np.linalg.det(A)) > 0.1
)


@given(matrices, matrices, st.tuples(st.floats(-1, 1), st.floats(-1, 1)))
def test_pullback_functorial(A, B, p):
    target = lambda q: FirstFundamentalForm(1.0 + np.asarray(q)[..., 0] ** 2, 0.2 + 0 * np.asarray(q)[..., 0], 2.0 + np.asarray(q)[..., 1] ** 2)
    mA, mB = affine_map(A), affine_map(B)
    mBA = affine_map(B @ A)
    p = np.array(p)
    # pull back through B, then through A, equals pulling back through B o A
    stepwise = pullback(pullback(target, mB), mA)(p)
    direct = pullback(target, mBA)(p)
    assert stepwise.allclose(direct, atol=1e-8 * (1 + abs(direct.E) + abs(direct.G)))


def test_pullback_through_map_and_inverse():
    A = np.array([[1.2, 0.3], [-0.4, 0.9]])
    m = affine_map(A, c=(0.1, -0.2))
    inv = affine_map(np.linalg.inv(A), c=-np.linalg.inv(A) @ np.array([0.1, -0.2]))
    target = lambda q: FirstFundamentalForm(1.0 + 0 * q[..., 0], 0.1 + 0 * q[..., 0], 3.0 + 0 * q[..., 0])
    p = np.array([0.3, 0.4])
    q = m.forward(p)
    back = pullback(pullback(target, inv), m)(p)
    assert back.allclose(target(q), atol=1e-6)
    assert np.allclose(m.invert(q, seed=[0, 0]), p, atol=1e-12)


@pytest.mark.parametrize("text,K", [("1", 0.0), ("cos(uhat)^2", K_COS2), ("exp(2*uhat)", K_EXP2)])
def test_gaussian_curvature(text, K):
    m = GeodesicMetric.from_formula(text, BOX)
    x, y = np.random.default_rng(2).uniform(-0.9, 0.9, (2, 40))
    assert np.allclose(gaussian_curvature(m)(x, y), K, atol=1e-12)


def test_gaussian_curvature_without_symbolic_partials():
    # nested central differences path
    G = ScalarField2(func=lambda u, v: np.exp(2 * np.asarray(u)) + 0 * np.asarray(v), domain=BOX)
    K = gaussian_curvature(GeodesicMetric(G))(np.array([0.1, -0.3]), np.array([0.0, 0.5]))
    assert np.allclose(K, -1.0, atol=1e-4)


def test_fff_regular():
    assert FirstFundamentalForm(1.0, 0.0, 2.0).is_regular
    assert not FirstFundamentalForm(1.0, 1.0, 1.0).is_regular
