import numpy as np
import pytest

from isoembed.characteristics import solve_u_hat, solve_v_hat
from isoembed.components import cramer_RS
from isoembed.errors import RealityViolation
from isoembed.metric import GeodesicMetric, Rect
from isoembed.ode_system import (
    HhatChoice,
    LevelSystem,
    choose_hhat,
    integrate,
    line_margin,
    reality_check,
    standard_form,
)
from isoembed.transform import geodesic_map

from oracles import A_PRIME_G3, B_PRIME_G3, B_SLOPE_EPS_0_7, B_SLOPE_EPS_HALF, MARGIN_EPS_0_8

BOX = Rect(-1.5, 1.5, -1.5, 1.5)


def system(text, delta=None):
    m = GeodesicMetric.from_formula(text, BOX)
    ch = choose_hhat(m.Ghat) if delta is None else HhatChoice(delta)
    u, v = solve_u_hat(), solve_v_hat(m.Ghat, ch.data)
    return LevelSystem(cramer_RS(m.Ghat, u, v, geodesic_map(u, v)))


def test_choose_hhat_examples():
    one = GeodesicMetric.from_formula("1", BOX).Ghat
    assert choose_hhat(one, margin=1.0).delta == 0.25
    assert line_margin(one, 0.5, np.array([0.0]))[0] == 1.0
    big = GeodesicMetric.from_formula("100", BOX).Ghat
    assert choose_hhat(big, margin=0.0).delta == 2.0 ** -4
    assert choose_hhat(big, margin=0.5).delta == 2.0 ** -4


def test_choose_hhat_degenerate():
    # the margin is delta^-2 / (Ghat + 1) - 1, so a huge Ghat needs delta below 2^-40
    huge = GeodesicMetric.from_formula("1e30", BOX).Ghat
    with pytest.raises(ValueError):
        choose_hhat(huge)


def test_standard_form_examples():
    ap, bp, m = standard_form(1.0, 1.0, -0.5)
    assert ap == 1.0 and bp == pytest.approx(B_SLOPE_EPS_HALF, rel=1e-15)
    ap, bp, m = standard_form(3.0, 1.0, -0.1)
    assert ap == pytest.approx(A_PRIME_G3, rel=1e-15)
    assert bp == pytest.approx(B_PRIME_G3, rel=1e-14)
    _, bp, m = standard_form(1.0, 1.0, -0.7)
    assert bp == pytest.approx(B_SLOPE_EPS_0_7, rel=1e-12)
    _, bp, m = standard_form(1.0, 1.0, -0.8)
    assert np.isnan(bp) and m == pytest.approx(MARGIN_EPS_0_8, rel=1e-14)


def test_reality_check_values():
    assert reality_check(system("1", 0.5), (0.0, 0.0)) == pytest.approx(1.0, abs=1e-14)
    assert reality_check(system("1", 0.8), (0.0, 0.0)) == pytest.approx(MARGIN_EPS_0_8, abs=1e-14)


def test_integrate_refuses_unreal_start():
    with pytest.raises(RealityViolation) as exc:
        integrate(system("1", 0.8), 1.0)
    assert exc.value.s == 0.0 and exc.value.margin < 0


def test_flat_closed_form():
    tr = integrate(system("1", 0.5), 1.0)
    assert not tr.truncated
    assert tr.a[0] == 0.0 and tr.b[0] == 0.0
    assert abs(tr.a[-1] - 1.0) <= 1e-10
    assert abs(tr.b[-1] - 2 ** -0.5) <= 1e-10
    assert tr.error_estimate <= 1e-9


def test_zero_length():
    tr = integrate(system("1", 0.5), 0.0)
    assert len(tr.s) == 1 and tr.a[0] == 0.0 and tr.b[0] == 0.0


@pytest.mark.parametrize("text", ["cos(uhat)^2", "exp(2*uhat)"])
def test_resubstitution_and_monotone(text):
    sys_ = system(text)
    tr = integrate(sys_, 0.5, halving_check=False)
    assert np.all(np.diff(tr.a) > 0) and np.all(np.diff(tr.b) > 0)
    assert np.all(tr.da > 0) and np.all(tr.db > 0)
    r1, r2 = tr.resubstitution(sys_)
    assert np.max(np.abs(r1)) <= 1e-8 and np.max(np.abs(r2)) <= 1e-8


def test_error_estimate_curved():
    tr = integrate(system("cos(uhat)^2"), 1.0)
    assert not tr.truncated
    assert tr.error_estimate <= 1e-9


def test_reality_truncation_flagged():
    tr = integrate(system("exp(2*uhat)"), 1.0, halving_check=False)
    assert tr.truncated and tr.reason.startswith("RealityViolation")
    assert 0.5 < tr.s_end < 1.0
    assert np.all(np.isfinite(tr.db))


def test_rk4_order_four_on_curved_metric():
    sys_ = system("cos(uhat)^2")
    ref = integrate(sys_, 0.5, step=1 / 1024, halving_check=False)
    errs = []
    for n in (32, 64):
        tr = integrate(sys_, 0.5, step=1 / n, halving_check=False)
        errs.append(abs(tr.b[-1] - ref.b[-1]) + abs(tr.a[-1] - ref.a[-1]))
    assert 12.0 <= errs[0] / errs[1] <= 20.0
