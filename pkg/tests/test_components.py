import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isoembed.characteristics import InitialData1D, solve_u_hat, solve_v_hat
from isoembed.components import (
    augmented_determinant,
    closed_form_RS,
    consistency_residual,
    cramer_RS,
    cramer_solve,
)
from isoembed.errors import InconsistencyError
from isoembed.metric import Rect, ScalarField2
from isoembed.transform import geodesic_map

BOX = Rect(-1.5, 1.5, -1.5, 1.5)


def pair(text, delta):
    G = ScalarField2.from_expression(text, BOX)
    u, v = solve_u_hat(), solve_v_hat(G, InitialData1D.linear(delta))
    return cramer_RS(G, u, v, geodesic_map(u, v))


def test_consistency_examples():
    eps = 0.5
    assert consistency_residual(1.0, (1.0, 1.0), (eps, -eps)) == 0.0
    # identity transformation: u = uh, v = vh
    assert consistency_residual(3.7, (1.0, 0.0), (0.0, 1.0)) == 0.0


def test_consistency_nonzero_for_random_fields():
    rng = np.random.default_rng(11)
    up = rng.normal(size=(2, 50))
    vp = rng.normal(size=(2, 50))
    g = rng.uniform(0.5, 2.0, 50)
    assert np.max(np.abs(consistency_residual(g, up, vp))) > 1e-3


def test_augmented_determinant_examples():
    eps = 0.5
    assert augmented_determinant(1.0, (1.0, 1.0), (eps, -eps)) == 0.0
    # u = vh, v = vh: zero Jacobian
    assert augmented_determinant(2.0, (0.0, 1.0), (0.0, 1.0)) == 0.0


finite = st.floats(-3, 3, allow_nan=False)


@given(st.floats(0.1, 5), finite, finite, finite, finite)
def test_determinant_factorization(g, uu, uv, vu, vv):
    det = augmented_determinant(g, (uu, uv), (vu, vv))
    factored = consistency_residual(g, (uu, uv), (vu, vv)) * (uu * vv - vu * uv)
    assert abs(det - factored) <= 1e-9 * (1 + abs(det))


def test_cramer_worked_example():
    eps = 0.5
    R, S = cramer_solve((1.0, 1.0), (eps, -eps))
    assert R == pytest.approx(0.5, abs=1e-15)
    assert S == pytest.approx(0.5 * eps ** -2, abs=1e-15)
    assert R * 1.0 ** 2 + S * eps ** 2 == pytest.approx(1.0, abs=1e-15)
    R1, S1 = cramer_solve((1.0, 1.0), (1.0, -1.0))
    assert (R1, S1) == (0.5, 0.5)


def test_closed_form_agrees_with_cramer():
    cp = pair("exp(2*uhat)", 0.125)
    rng = np.random.default_rng(5)
    x, y = rng.uniform(-0.4, 0.4, 100), rng.uniform(-0.05, 0.4, 100)
    up, vp = cp.hat_partials(x, y)
    R, S = cramer_solve(up, vp)
    Rc, Sc = closed_form_RS(cp.Ghat(x, y), up[1], vp[1])
    assert np.allclose(R, Rc, rtol=1e-12) and np.allclose(S, Sc, rtol=1e-12)


@pytest.mark.parametrize("text,delta", [("1", 0.5), ("cos(uhat)^2", 0.5), ("exp(2*uhat)", 0.125), ("1 + 0.1*uhat", 0.5)])
def test_pde_solutions_satisfy_all_three_equations(text, delta):
    cp = pair(text, delta)
    x, y = np.random.default_rng(6).uniform(-0.4, 0.4, (2, 500))
    y = 0.5 * y
    up, vp = cp.hat_partials(x, y)
    g = cp.Ghat(x, y)
    assert np.max(np.abs(consistency_residual(g, up, vp))) <= 1e-7
    R, S = cp.hat(x, y)
    assert np.all(R > 0) and np.all(S > 0)
    assert np.max(np.abs(cp.third_equation_residual(x, y))) <= 1e-8


def test_worked_example_components_in_level_parameters():
    eps = 0.5
    cp = pair("1", eps)
    u, v = np.meshgrid(np.linspace(-0.5, 0.5, 5), np.linspace(-0.2, 0.2, 5))
    R, S = cp(u, v)
    assert np.allclose(R, 0.5, atol=1e-14) and np.allclose(S, 2.0, atol=1e-12)


def test_inconsistent_partials_rejected():
    G = ScalarField2.from_expression("1", BOX)
    u = solve_u_hat()
    # a v-solution for the wrong coefficient violates the consistency condition
    wrong = solve_v_hat(ScalarField2.from_expression("2", BOX), InitialData1D.linear(0.5))
    cp = cramer_RS(G, u, wrong, geodesic_map(u, wrong))
    with pytest.raises(InconsistencyError):
        cp.hat(np.array([0.1]), np.array([0.1]))


@pytest.mark.parametrize("text,delta", [("1", 0.5), ("1 + 0.1*uhat", 0.5), ("exp(2*uhat)", 0.125)])
def test_pullback_recovers_geodesic_form(text, delta):
    """Pullback of R du^2 + S dv^2 through (uh, vh) -> (u, v) is duh^2 + Ghat dvh^2."""
    from isoembed.transform import working_subdomain

    cp = pair(text, delta)
    W = working_subdomain(cp.pmap, n=17)
    X, Y = W.grid(9)
    P = np.stack([X, Y], -1)
    Q = cp.pmap.forward(P)
    R, S = cp(Q[..., 0], Q[..., 1])
    J, _ = cp.pmap.jacobian(P)
    E = R * J[..., 0, 0] ** 2 + S * J[..., 1, 0] ** 2
    F = R * J[..., 0, 0] * J[..., 0, 1] + S * J[..., 1, 0] * J[..., 1, 1]
    G = R * J[..., 0, 1] ** 2 + S * J[..., 1, 1] ** 2
    assert np.max(np.abs(E - 1)) <= 1e-6
    assert np.max(np.abs(F)) <= 1e-6
    assert np.max(np.abs(G - cp.Ghat(X, Y))) <= 1e-6
