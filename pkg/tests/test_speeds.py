import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from curvflow.curvature import GeometricMean, RootMeanSquare, condition_report_f
from curvflow.speeds import (Expm1, Grid, Log1p, PowerSum, SumOf, classify_case, condition_report_phi,
                             eval_phi, make_phi, pinch_threshold)

CUBIC = {"kind": "power_sum", "terms": [[1, 1], [1, 3]]}


def test_eval_examples():
    assert eval_phi(Log1p(), 1.0) == pytest.approx((math.log(2), 0.5, -0.25), rel=1e-15)
    assert eval_phi(make_phi(CUBIC), 2.0) == (10.0, 13.0, 12.0)
    assert eval_phi(Expm1(), 0.0) == (0.0, 1.0, 1.0)


def test_eval_rejects_negative():
    with pytest.raises(ValueError):
        eval_phi(Log1p(), -1e-3)


def test_linear_power_sum_at_zero():
    assert eval_phi(PowerSum([(2.0, 1.0)]), 0.0) == (0.0, 2.0, 0.0)


@pytest.mark.parametrize("phi", [make_phi(CUBIC), Log1p(), Expm1(), SumOf([Log1p(), PowerSum([(1, 2)])])],
                         ids=lambda p: p.kind)
def test_scalar_matches_vector(phi):
    for s in (1e-8, 0.3, 2.0, 50.0):
        assert phi.scalar(s) == pytest.approx(eval_phi(phi, s)[0], rel=1e-14)


def test_scalar_overflow_is_inf():
    assert Expm1().scalar(1e4) == math.inf
    assert PowerSum([(1, 400)]).scalar(1e10) == math.inf


def test_make_phi_errors():
    with pytest.raises(ValueError):
        make_phi({"kind": "tanh"})
    with pytest.raises(ValueError):
        PowerSum([(1, -1)])
    with pytest.raises(ValueError):
        SumOf([])


def test_to_dict_roundtrip():
    spec = {"kind": "sum_of", "parts": [{"kind": "log1p"}, {"kind": "power_sum", "terms": [[1.0, 2.0]]}]}
    assert make_phi(spec).to_dict() == spec


# ------------------------------------------------------------ reports

def test_log1p_report():
    r = condition_report_phi(Log1p())
    assert r.d_iii and r.e and r.f and r.i and r.h
    assert r.empirical_c_for_h <= 1.0


def test_expm1_report():
    r = condition_report_phi(Expm1())
    assert r.d_i and r.g and not r.h and not r.i
    assert r.empirical_c_for_h == "unbounded" and r.h_tail_growing


def test_cubic_empirical_c():
    # sup of 6 s^2 / (1 + 3 s^2) over the grid approaches 2 from below
    r = condition_report_phi(make_phi(CUBIC))
    assert r.d_i and r.g and r.h
    assert r.empirical_c_for_h == pytest.approx(2.0, abs=1e-9)
    assert r.empirical_c_for_h < 2.0
    assert r.c_within_weighted and r.c_within_plain


def test_c_bounds_flag_the_tight_one():
    # weights make the two candidate constants differ
    r = condition_report_phi(PowerSum([(0.25, 3.0)]))
    assert r.c_bound_weighted == 0.5 and r.c_bound_plain == 2.0
    assert r.empirical_c_for_h == pytest.approx(2.0, rel=1e-12)
    assert not r.c_within_weighted and r.c_within_plain


def test_d_ii_epsilon_for_s2_s3():
    r = condition_report_phi(PowerSum([(1, 2), (1, 3)]))
    assert r.d_ii and r.d_ii_eps == pytest.approx(0.5, rel=1e-5)


@pytest.mark.parametrize("phi", [Expm1(), make_phi(CUBIC)], ids=["expm1", "cubic"])
def test_d_ii_rejects_epsilon_vanishing_at_grid_end(phi):
    assert not condition_report_phi(phi).d_ii


powers = st.lists(st.tuples(st.floats(0.1, 5.0), st.floats(0.2, 4.0)), min_size=1, max_size=3)


@given(powers)
def test_report_logical_closure(terms):
    r = condition_report_phi(PowerSum(terms), Grid(points=301))
    if r.d_ii:
        assert r.d_i
    if r.a and r.g:
        assert r.d_i
    if r.d_i and r.d_iii:
        assert all(abs(k - 1) < 1e-12 for _, k in terms)


@given(st.lists(st.tuples(st.floats(0.1, 5.0), st.floats(1.0, 4.0)), min_size=1, max_size=3))
def test_superlinear_power_sums_are_d_i(terms):
    phi = PowerSum(terms)
    s = Grid().values()
    v, d1, _ = phi.eval(s)
    assert np.all(d1 * s - v >= -1e-12 * d1 * s)
    assert condition_report_phi(phi, Grid(points=301)).d_i


@given(st.floats(0.05, 0.6), st.lists(st.tuples(st.floats(0.1, 5.0), st.floats(0.0, 2.0)), min_size=1, max_size=3))
def test_d_ii_epsilon_from_exponents(eps, terms):
    terms = [(c, 1.0 / (1.0 - eps) + extra) for c, extra in terms]
    r = condition_report_phi(PowerSum(terms), Grid(points=301))
    assert r.d_ii and r.d_ii_eps >= eps * (1 - 1e-9)


@pytest.mark.parametrize("phi", [Log1p(), make_phi(CUBIC), PowerSum([(1, 0.5), (2, 1.5)])], ids=str)
def test_empirical_c_monotone_under_refinement(phi):
    coarse = condition_report_phi(phi, Grid(points=601)).empirical_c_for_h
    fine = condition_report_phi(phi, Grid(points=1201)).empirical_c_for_h
    finer = condition_report_phi(phi, Grid(points=2401)).empirical_c_for_h
    assert coarse <= fine <= finer


def test_report_records_grid():
    r = condition_report_phi(Log1p())
    assert r.grid["s_min"] == 1e-6 and r.grid["s_max"] == 1e6 and r.grid["points"] >= 1000


# ------------------------------------------------------------ classification

def _classify(f, phi, n, axial=False):
    return classify_case(condition_report_f(f, n), condition_report_phi(phi), n, axial)


def test_classify_gm_cubic():
    c = _classify(GeometricMean(), make_phi(CUBIC), 3)
    assert "e_iii_a" in c.applicable_cases


def test_classify_gm_log1p():
    c = _classify(GeometricMean(), Log1p(), 3)
    assert "e_iv_a" in c.applicable_cases


def test_classify_rms_expm1():
    assert _classify(RootMeanSquare(), Expm1(), 3).empty
    assert _classify(RootMeanSquare(), Expm1(), 3, axial=True).applicable_cases == ["e_v_a"]
    assert _classify(RootMeanSquare(), Expm1(), 2).applicable_cases == ["e_i"]


def test_classify_lists_unverifiable_cases():
    c = _classify(GeometricMean(), make_phi(CUBIC), 3)
    assert set(c.uncertified) == {"e_iii_b", "e_iv_b"}
    assert "e_iii_b" not in c.applicable_cases
    for case, detail in c.details.items():
        assert set(detail["phi_satisfied"]) | set(detail["phi_violated"]) <= {
            "a", "b", "c", "d_i", "d_ii", "d_iii", "e", "f", "g", "h", "i"}


# ------------------------------------------------------------ pinch threshold

def test_pinch_threshold_examples():
    assert pinch_threshold(Expm1(), 1.0) == pytest.approx(3.0, rel=1e-15)
    assert pinch_threshold(Log1p(), 0.7) == math.inf
    assert pinch_threshold(PowerSum([(1, 2)]), 2.0) == 3.0


def test_pinch_threshold_linear_is_infinite():
    assert pinch_threshold(PowerSum([(1, 1)]), 3.0) == math.inf
