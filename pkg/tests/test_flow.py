import math

import numpy as np
import pytest

from curvflow.curvature import ArithmeticMean, GeometricMean, RootMeanSquare, dual_speed
from curvflow.flow import (ClassificationError, FlowKernel, RunConfig, check_classification,
                           estimate_extinction, make_state, rhs, run_flow, sphere_tracking, stable_dt, step)
from curvflow.geometry import ConvexityError, make_profile, radii
from curvflow.monitors import assert_monotone, sphere_time
from curvflow.speeds import Log1p, PowerSum, make_phi

LINEAR = PowerSum([(1, 1)])
CUBIC = make_phi({"kind": "power_sum", "terms": [[1, 1], [1, 3]]})


def cfg(**kw):
    base = dict(n=2, f={"kind": "geometric_mean"}, phi={"kind": "power_sum", "terms": [[1, 1], [1, 3]]},
                shape={"kind": "sphere", "R": 1.0}, modes=16, monitor_stride=20)
    base.update(kw)
    return RunConfig(**base)


# ------------------------------------------------------------ rhs

@pytest.mark.parametrize("R", [0.5, 2.0])
@pytest.mark.parametrize("phi", [LINEAR, CUBIC, Log1p()], ids=["s", "cubic", "log1p"])
def test_rhs_sphere_is_constant(R, phi):
    p = make_profile({"kind": "sphere", "R": R}, 3, 8)
    v = rhs(p, RootMeanSquare(), phi)
    assert np.allclose(v, -phi.scalar(1 / R), rtol=1e-14)


def test_rhs_perturbed_pole():
    eps = 0.1
    p = make_profile({"kind": "perturbed_sphere", "R": 1.0, "eps": eps, "m": 2}, 2, 8)
    v = rhs(p, GeometricMean(), LINEAR)
    assert v[0] == pytest.approx(-1 / (1 - 3 * eps), rel=1e-14)
    assert v[-1] == pytest.approx(-1 / (1 - 3 * eps), rel=1e-14)


@pytest.mark.parametrize("f", [GeometricMean(), RootMeanSquare(), ArithmeticMean()], ids=lambda f: f.kind)
def test_rhs_matches_dual_speed_path(f):
    p = make_profile({"kind": "spheroid", "a": 1.0, "b": 1.3}, 3, 24)
    field = radii(p)
    r = np.empty((field.r1.size, 3))
    r[:, 0] = field.r1
    r[:, 1:] = field.r2[:, None]
    expected = -CUBIC.eval(1.0 / dual_speed(f, r))[0]
    assert np.abs(rhs(p, f, CUBIC) - expected).max() <= 1e-14 * np.abs(expected).max()


def test_rhs_is_negative():
    p = make_profile({"kind": "spheroid", "a": 1.0, "b": 0.7}, 2, 24)
    assert np.all(rhs(p, GeometricMean(), CUBIC) < 0)


# ------------------------------------------------------------ dt and steps

@pytest.mark.parametrize("n", [2, 3, 4])
def test_stable_dt_sphere_formula(n):
    state = make_state(make_profile({"kind": "sphere", "R": 1.0}, n, 64))
    dt = stable_dt(state, ArithmeticMean(), LINEAR, c_safe=0.2)
    assert dt == pytest.approx(0.2 * (math.pi / 128) ** 2 * n, rel=1e-14)


def test_stable_dt_scales_with_nodes():
    a = stable_dt(make_state(make_profile({"kind": "sphere"}, 2, 32)), GeometricMean(), CUBIC)
    b = stable_dt(make_state(make_profile({"kind": "sphere"}, 2, 64)), GeometricMean(), CUBIC)
    assert a / b == pytest.approx(4.0, rel=1e-12)


def test_zero_step_is_identity():
    state = make_state(make_profile({"kind": "spheroid", "a": 1.0, "b": 1.2}, 2, 16))
    new = step(state, 0.0, GeometricMean(), CUBIC)
    assert new.t == state.t and np.array_equal(new.profile.coeffs, state.profile.coeffs)


def test_rk4_local_error_order():
    """Sphere under du/dt = -1/u: one-step error against sqrt(1 - 2 dt) scales like dt^5."""
    state = make_state(make_profile({"kind": "sphere", "R": 1.0}, 2, 4))
    errs = []
    for dt in (0.02, 0.01):
        u = step(state, dt, ArithmeticMean(), LINEAR).profile.coeffs[0]
        errs.append(abs(u - math.sqrt(1 - 2 * dt)))
    assert 20 < errs[0] / errs[1] < 45


def test_step_keeps_modes_cosine_only():
    state = make_state(make_profile({"kind": "spheroid", "a": 1.0, "b": 1.2}, 3, 16))
    new = step(state, 1e-4, GeometricMean(), CUBIC)
    assert new.profile.coeffs.shape == state.profile.coeffs.shape
    assert np.all(np.isfinite(new.profile.coeffs))


def test_convexity_breakdown_raises():
    state = make_state(make_profile({"kind": "perturbed_sphere", "R": 1.0, "eps": 0.3, "m": 2}, 2, 16))
    with pytest.raises(ConvexityError, match="convexity breakdown at t="):
        step(state, 1e9, GeometricMean(), CUBIC)


# ------------------------------------------------------------ runs

def test_sphere_run_tracks_oracle():
    res = run_flow(cfg(r_stop=0.3))
    track = sphere_tracking(res)
    assert track.max_rel_dev < 1e-8
    assert res.T_est == pytest.approx(track.T_oracle, rel=1e-9)
    assert res.termination_reason == "r_stop"


def test_run_records_times_increase():
    res = run_flow(cfg(shape={"kind": "spheroid", "a": 1.0, "b": 1.2}, r_stop=0.4))
    ts = [r.t for r in res.records]
    assert all(b > a for a, b in zip(ts, ts[1:]))
    assert res.T_est > ts[-1]
    assert len(res.coeffs) == len(res.records) == len(res.t_comps)


def test_support_decreases_at_every_node():
    res = run_flow(cfg(shape={"kind": "spheroid", "a": 1.0, "b": 1.2}, r_stop=0.4, n=3))
    C = np.cos(np.outer(np.arange(33) * np.pi / 32, np.arange(17)))
    u = np.array([C @ a for a in res.coeffs])
    assert np.all(np.diff(u, axis=0) < 0)


def test_spheroid_pinch_ratio_nonincreasing():
    res = run_flow(cfg(n=3, modes=32, shape={"kind": "spheroid", "a": 1.0, "b": 1.2}, r_stop=0.2))
    rep = assert_monotone(res.records, "pinch_ratio", "nonincreasing", 1e-8)
    assert rep.passed, rep


def test_perturbed_sphere_extinction_bracket():
    res = run_flow(cfg(shape={"kind": "perturbed_sphere", "R": 1.0, "eps": 0.05, "m": 2}, modes=24, r_stop=0.1))
    lo, hi = sphere_time(CUBIC, 0.95), sphere_time(CUBIC, 1.05)
    assert lo <= res.T_est <= hi


def test_estimate_extinction_closed_forms():
    for phi, expect in ((LINEAR, lambda r: r * r / 2), (PowerSum([(1, 3)]), lambda r: r**4 / 4)):
        state = make_state(make_profile({"kind": "sphere", "R": 0.3}, 2, 8), t=1.25)
        T, z, low, remaining = estimate_extinction(state, phi)
        assert remaining == pytest.approx(expect(0.3), rel=1e-12)
        assert T == pytest.approx(1.25 + expect(0.3), rel=1e-14)
        assert z == 0.0 and not low


def test_low_confidence_flag():
    state = make_state(make_profile({"kind": "spheroid", "a": 1.0, "b": 1.5}, 2, 16))
    assert estimate_extinction(state, CUBIC)[2]


def test_run_is_deterministic():
    c = cfg(shape={"kind": "spheroid", "a": 1.0, "b": 1.2}, r_stop=0.5)
    a, b = run_flow(c), run_flow(c)
    assert [r.as_dict() for r in a.records] == [r.as_dict() for r in b.records] or all(
        np.array_equal(np.array(list(x.as_dict().values()), dtype=float),
                       np.array(list(y.as_dict().values()), dtype=float), equal_nan=True)
        for x, y in zip(a.records, b.records))
    assert a.T_est == b.T_est


def test_classification_empty_is_refused():
    c = cfg(n=3, f={"kind": "arithmetic_mean"}, phi={"kind": "power_sum", "terms": [[1, 0.5], [1, 2]]})
    assert check_classification(c)[2].empty
    with pytest.raises(ClassificationError):
        run_flow(c)
    c.override_classification = True
    c.r_stop = 0.5
    assert run_flow(c).termination_reason == "r_stop"


def test_r_stop_must_be_below_support():
    with pytest.raises(ValueError):
        run_flow(cfg(r_stop=2.0))


def test_nonconvex_initial_shape_is_config_error():
    with pytest.raises(ValueError, match="initial shape"):
        run_flow(cfg(shape={"kind": "perturbed_sphere", "eps": 0.5, "m": 2}))


def test_max_steps_termination():
    res = run_flow(cfg(max_steps=7, monitor_stride=3))
    assert res.termination_reason == "max_steps" and res.extra["steps"] == 7
    assert [r.t > 0 for r in res.records] == [False, True, True, True]


def test_kernel_min_support_matches_recentering():
    from curvflow.geometry import steiner_recenter
    p = make_profile({"kind": "coeffs", "coeffs": [1.0, 0.2, 0.05]}, 3, 16)
    k = FlowKernel(3, 16, GeometricMean(), CUBIC)
    assert k.min_recentered_support(p.coeffs) == pytest.approx(steiner_recenter(p)[0].values().min(), rel=1e-14)
