import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isoembed.characteristics import InitialData1D
from isoembed.embedding import (
    EG_from_ab,
    build_surface,
    export_mesh,
    fmt,
    load_surface_csv,
    substitution_residuals,
)
from isoembed.metric import Rect
from isoembed.verify import induced_fff_grid

from oracles import B_SLOPE_EPS_HALF

BOX = Rect(-1.0, 1.0, -1.0, 1.0)
ID = InitialData1D.identity()


def test_EG_examples():
    pts = (np.array([0.1, -0.5]), np.array([0.3, 0.7]))
    m = EG_from_ab(ID, InitialData1D.linear(B_SLOPE_EPS_HALF), BOX)
    assert np.allclose(m.E(*pts), 0.5) and np.allclose(m.G(*pts), 2.0)
    m = EG_from_ab(ID, ID, BOX)
    assert np.allclose(m.E(*pts), 0.5) and np.allclose(m.G(*pts), 1.5)
    m = EG_from_ab(InitialData1D.linear(2.0), ID, BOX)
    assert np.allclose(m.E(*pts), 0.125)
    assert m.embeddable


def test_surface_linear_data():
    s = build_surface(ID, ID, (5, 4), Rect(0, 1, 0, 1))
    U, V = s.mesh()
    assert np.allclose(s.X, np.stack([(U + V) / 2, (U - V) / 2, V], -1), atol=1e-15)
    assert np.array_equal(s.X[..., 2], V)


def test_surface_worked_example():
    b = InitialData1D.linear(B_SLOPE_EPS_HALF)
    s = build_surface(ID, b, (7, 7), Rect(0, 1, 0, 0.7))
    U, V = s.mesh()
    r2 = np.sqrt(2)
    assert np.allclose(s.X, np.stack([(U + r2 * V) / 2, (U - r2 * V) / 2, V], -1), atol=1e-14)


def test_single_node():
    s = build_surface(ID, ID, (np.array([0.0]), np.array([0.0])))
    assert s.X.tolist() == [[[0.0, 0.0, 0.0]]]


def test_holes_are_masked():
    a = InitialData1D.scaled_tanh(1.0, 1.0, (-2, 2))
    s = build_surface(a, ID, (np.array([0.0, 0.5, 0.95]), np.array([0.0, 0.1])))
    assert s.mask.all()
    s = build_surface(a, ID, (np.array([0.0, 0.5, 1.5]), np.array([0.0, 0.1])))
    assert s.mask[:2].all() and not s.mask[2].any()


def test_obj_two_by_two(tmp_path):
    s = build_surface(ID, ID, (2, 2), Rect(0, 1, 0, 1))
    export_mesh(s, tmp_path / "m.obj")
    lines = (tmp_path / "m.obj").read_text().splitlines()
    assert sum(l.startswith("v ") for l in lines) == 4
    assert [l for l in lines if l.startswith("f ")] == ["f 1 3 4", "f 1 4 2"]


def test_obj_skips_holes(tmp_path):
    a = InitialData1D.scaled_tanh(1.0, 1.0, (-2, 2))
    s = build_surface(a, ID, (np.array([0.0, 0.5, 1.5]), np.array([0.0, 0.1])))
    export_mesh(s, tmp_path / "h.obj")
    lines = (tmp_path / "h.obj").read_text().splitlines()
    assert sum(l.startswith("v ") for l in lines) == 4
    assert sum(l.startswith("f ") for l in lines) == 2


def test_csv_roundtrip(tmp_path):
    s = build_surface(ID, InitialData1D.linear(0.3), (6, 5), Rect(-0.3, 0.4, 0.1, 0.2))
    export_mesh(s, tmp_path / "m.csv", "csv")
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "u,v,x,y,z" and len(lines) == 31
    back = load_surface_csv(tmp_path / "m.csv")
    assert np.array_equal(back.X, s.X) and np.array_equal(back.u, s.u)


def test_worked_example_obj_first_vertex(tmp_path, worked):
    art = worked.artifacts
    s = build_surface(art.a, art.b, (11, 11))
    export_mesh(s, tmp_path / "s.obj")
    assert (tmp_path / "s.obj").read_text().splitlines()[0] == "v 0 0 0"


def test_fmt_shortest_roundtrip():
    for x in (0.1, 1 / 3, -2.5e-17, 1e300, 2.0 ** -0.5):
        assert float(fmt(x)) == x
    assert fmt(-0.0) == "0" and fmt(3.0) == "3"


def test_induced_metric_matches_EG_curved_data():
    a = InitialData1D.polynomial([0.0, 1.0, 0.2, 0.05], (-2, 2))
    b = InitialData1D.scaled_tanh(0.8, 0.6, (-2, 2))
    m = EG_from_ab(a, b)
    s = build_surface(a, b, (321, 321), Rect(-0.3, 0.3, -0.15, 0.15))
    ind = induced_fff_grid(s)
    U, V = s.mesh()
    inner = (slice(1, -1), slice(1, -1))
    assert np.max(np.abs(ind.E - m.E(U, V))[inner]) <= 5e-6
    assert np.max(np.abs(ind.F)[inner]) <= 5e-6
    assert np.max(np.abs(ind.G - m.G(U, V))[inner]) <= 5e-6


cubic = st.tuples(st.floats(0.2, 2.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0)).map(
    lambda c: InitialData1D.polynomial([0.0, c[0], 0.0, c[1] + c[2]], (-3, 3))
)
tanh = st.tuples(st.floats(0.5, 2.0), st.floats(0.2, 1.0)).map(lambda c: InitialData1D.scaled_tanh(c[0], c[1], (-3, 3)))
monotone = st.one_of(cubic, tanh)


@given(monotone, monotone, st.integers(0, 2 ** 31))
def test_substitution_identities(a, b, seed):
    x, y = np.random.default_rng(seed).uniform(-0.6, 0.6, (2, 100))
    for r in substitution_residuals(a, b, x, y):
        assert np.max(np.abs(r)) <= 1e-9
