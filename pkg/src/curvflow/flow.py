"""Explicit integration of the support-function flow ``du/dt = -Phi(f(kappa))``."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .curvature import SpeedFunction, condition_report_f, make_speed
from .geometry import (ConvexityError, SupportProfile, basis, make_profile,
                       mean_support, radii, sphere_quadrature, steiner_recenter)
from .monitors import (MonitorRecord, MonitorSettings, ThetaEvaluator, default_settings,
                       monitor_sample, rescale_state, sphere_time)
from .speeds import PhiProfile, classify_case, condition_report_phi, make_phi

log = logging.getLogger(__name__)

MAX_RETRIES = 20


class ClassificationError(RuntimeError):
    pass


@dataclass
class RunConfig:
    n: int
    f: dict
    phi: dict
    shape: dict
    modes: int = 64
    c_safe: float = 0.2
    r_stop: float | None = None
    sigma: float | None = None
    delta: float | None = None
    lam: float | None = None
    monitor_stride: int = 50
    snapshot_stride: int = 0
    max_steps: int = 2_000_000
    seed: int = 0
    override_classification: bool = False

    def speed(self) -> SpeedFunction:
        return make_speed(self.f["kind"], self.f.get("p"))

    def profile_phi(self) -> PhiProfile:
        return make_phi(self.phi)

    def initial_profile(self) -> SupportProfile:
        return make_profile(self.shape, self.n, self.modes)


@dataclass
class FlowState:
    t: float
    profile: SupportProfile
    r1: np.ndarray
    r2: np.ndarray
    step_count: int = 0
    t_comp: float = 0.0  # Kahan compensation for t


@dataclass
class RunResult:
    config: RunConfig
    records: list
    coeffs: list
    snapshots: list
    T_est: float
    p_est: float
    termination_reason: str
    settings: MonitorSettings
    classification: object = None
    low_confidence: bool = False
    final_state: FlowState | None = None
    extra: dict = field(default_factory=dict)
    t_comps: list = field(default_factory=list)  # Kahan compensation at each record
    remaining: float | None = None  # sphere time left after the final state


class FlowKernel:
    """Precomputed transforms and the nodal speed for one (n, M, f, Phi)."""

    def __init__(self, n: int, M: int, f: SpeedFunction, phi: PhiProfile, N: int | None = None):
        self.n, self.M = n, M
        self.N = N or 2 * M
        self.f, self.phi = f, phi
        theta, C, R1, R2, _, P = basis(M, self.N)
        _, steiner_row = sphere_quadrature(n, M)
        self.R = np.vstack([R1, R2])
        # recentered support: u - (steiner offset) cos(theta)
        self.U = C - np.outer(np.cos(theta), steiner_row)
        self.P = P
        self.nodes = self.N + 1

    def radii(self, a):
        r = self.R @ a
        return r[: self.nodes], r[self.nodes:]

    def min_recentered_support(self, a) -> float:
        return float((self.U @ a).min())

    def nodal_speed(self, r1, r2):
        F, _ = self.f.axisym(1.0 / r1, 1.0 / r2, self.n)
        return self.phi._eval(F)[0]

    def rhs(self, a):
        """Coefficient time derivative, plus the radii it was computed from."""
        r1, r2 = self.radii(a)
        if min(r1.min(), r2.min()) <= 0:
            return None, r1, r2
        return -(self.P @ self.nodal_speed(r1, r2)), r1, r2

    def nodal_rhs(self, profile: SupportProfile):
        r1, r2 = self.radii(profile.coeffs)
        return -self.nodal_speed(r1, r2)

    def stable_dt(self, r1, r2, c_safe: float) -> float:
        k1, k2 = 1.0 / r1, 1.0 / r2
        F, gmax = self.f.axisym(k1, k2, self.n)
        d1 = self.phi._eval(F)[1]
        D = d1 * gmax * np.maximum(k1, k2) ** 2
        return c_safe * (math.pi / self.N) ** 2 / float(D.max())


def make_state(profile: SupportProfile, t: float = 0.0) -> FlowState:
    field_ = radii(profile)
    return FlowState(t=t, profile=profile, r1=field_.r1, r2=field_.r2)


def rhs(profile: SupportProfile, f: SpeedFunction, phi: PhiProfile):
    """Nodal ``du/dt`` for a convex profile."""
    radii(profile)
    return FlowKernel(profile.n, profile.M, f, phi, profile.N).nodal_rhs(profile)


def stable_dt(state: FlowState, f: SpeedFunction, phi: PhiProfile, c_safe: float = 0.2) -> float:
    k = FlowKernel(state.profile.n, state.profile.M, f, phi, state.profile.N)
    return k.stable_dt(state.r1, state.r2, c_safe)


def _rk4(kernel: FlowKernel, a, dt):
    k1, _, _ = kernel.rhs(a)
    if k1 is None:
        return None
    k2, _, _ = kernel.rhs(a + 0.5 * dt * k1)
    if k2 is None:
        return None
    k3, _, _ = kernel.rhs(a + 0.5 * dt * k2)
    if k3 is None:
        return None
    k4, _, _ = kernel.rhs(a + dt * k3)
    if k4 is None:
        return None
    return a + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _advance_time(state: FlowState, dt: float):
    y = dt - state.t_comp
    t = state.t + y
    comp = (t - state.t) - y
    return t, comp


def _step(kernel: FlowKernel, state: FlowState, dt: float):
    if dt == 0.0:
        return replace(state), 0.0
    a = state.profile.coeffs
    for _ in range(MAX_RETRIES + 1):
        new = _rk4(kernel, a, dt)
        if new is not None:
            r1, r2 = kernel.radii(new)
            if min(r1.min(), r2.min()) > 0:
                t, comp = _advance_time(state, dt)
                prof = state.profile.with_coeffs(new)
                return FlowState(t=t, profile=prof, r1=r1, r2=r2,
                                 step_count=state.step_count + 1, t_comp=comp), dt
        dt *= 0.5
    raise ConvexityError(f"convexity breakdown at t={state.t:.17g}")


def step(state: FlowState, dt: float, f: SpeedFunction, phi: PhiProfile) -> FlowState:
    kernel = FlowKernel(state.profile.n, state.profile.M, f, phi, state.profile.N)
    return _step(kernel, state, dt)[0]


def estimate_extinction(state: FlowState, phi: PhiProfile, f: SpeedFunction | None = None):
    """``(T_est, p_est, low_confidence, remaining)`` from a near-round final state."""
    rc, z = steiner_recenter(state.profile)
    theta_bar = mean_support(rc)
    remaining = sphere_time(phi, theta_bar)
    k1, k2 = 1.0 / state.r1, 1.0 / state.r2
    pinch = float(np.max(np.maximum(k1, k2) / np.minimum(k1, k2)))
    return state.t + remaining, z, pinch > 1.05, remaining


def check_classification(config: RunConfig):
    f, phi = config.speed(), config.profile_phi()
    fr = condition_report_f(f, config.n, seed=config.seed)
    pr = condition_report_phi(phi)
    cls = classify_case(fr, pr, config.n, axially_symmetric=True)
    return fr, pr, cls


def _march(kernel, state, config, r_stop, sample, snapshots):
    while state.step_count < config.max_steps:
        dt = kernel.stable_dt(state.r1, state.r2, config.c_safe)
        state, _ = _step(kernel, state, dt)
        done = kernel.min_recentered_support(state.profile.coeffs) <= r_stop
        if done or state.step_count % config.monitor_stride == 0:
            sample(state)
        if config.snapshot_stride and state.step_count % config.snapshot_stride == 0:
            snapshots.append((state.t, state.profile))
        if done:
            return state, "r_stop"
    return state, "max_steps"


def run_flow(config: RunConfig, classification=None) -> RunResult:
    if classification is None:
        classification = check_classification(config)[2]
    if classification.empty and not config.override_classification:
        raise ClassificationError("no convergence case applies to this (f, Phi); set override_classification to run anyway")

    f, phi = config.speed(), config.profile_phi()
    try:
        prof0 = config.initial_profile()
    except ConvexityError as exc:
        raise ValueError(f"initial shape rejected: {exc}") from None
    kernel = FlowKernel(config.n, config.modes, f, phi, prof0.N)
    settings = default_settings(prof0, f, phi, config.sigma, config.delta, config.lam)
    r_stop = config.r_stop
    if r_stop is None:
        r_stop = 1e-2 * mean_support(steiner_recenter(prof0)[0])
    if r_stop >= kernel.min_recentered_support(prof0.coeffs):
        raise ValueError("r_stop must be below the initial minimum support")

    state = make_state(prof0)
    records, coeffs, t_comps, snapshots = [], [], [], [(0.0, prof0)]

    def sample(s):
        records.append(monitor_sample(s.profile, s.t, f, phi, settings))
        coeffs.append(s.profile.coeffs.copy())
        t_comps.append(s.t_comp)

    sample(state)
    with np.errstate(over="ignore"):
        state, reason = _march(kernel, state, config, r_stop, sample, snapshots)
    if snapshots[-1][1] is not state.profile:
        snapshots.append((state.t, state.profile))
    if records[-1].t != state.t:
        sample(state)

    T_est, p_est, low, remaining = estimate_extinction(state, phi)
    log.info("run finished after %d steps: T_est=%.12g p_est=%.3g (%s)", state.step_count, T_est, p_est, reason)
    result = RunResult(config=config, records=records, coeffs=coeffs, snapshots=snapshots,
                       T_est=T_est, p_est=p_est, termination_reason=reason, settings=settings,
                       classification=classification, low_confidence=low, final_state=state,
                       extra={"r_stop": float(r_stop), "steps": state.step_count},
                       t_comps=t_comps, remaining=remaining)
    attach_rescaling(result)
    return result


def attach_rescaling(result: RunResult):
    """Fill ``theta``, ``tau`` and ``sup_dev_unit`` using the extinction estimate."""
    cfg = result.config
    phi = cfg.profile_phi()
    theta_fn = ThetaEvaluator(phi, result.T_est)
    proto = result.final_state.profile if result.final_state else cfg.initial_profile()
    recs = result.records
    comps = result.t_comps or [0.0] * len(recs)
    t_end, c_end = recs[-1].t, comps[-1]
    rem_end = result.remaining if result.remaining is not None else result.T_est - t_end
    # walk backwards so each root solve starts from a nearby radius
    for rec, comp, a in reversed(list(zip(recs, comps, result.coeffs))):
        # T - t without cancellation: the compensated sums carry the low bits
        remaining = rem_end + ((t_end - rec.t) - (c_end - comp))
        theta = theta_fn.radius_for_remaining(remaining) if remaining > 0 else 0.0
        rec.theta = theta
        if theta > 0:
            rec.tau = -math.log(theta)
            _, rec.sup_dev_unit = rescale_state(proto.with_coeffs(a), theta, result.p_est)
    return result


@dataclass
class SphereTracking:
    T_oracle: float
    max_rel_dev: float
    rows: list  # (t, u_min, u_max, theta, rel_dev)


def sphere_tracking(result: RunResult) -> SphereTracking:
    """Compare a sphere run's support extremes with the exact shrinking radius."""
    cfg = result.config
    if cfg.shape.get("kind") != "sphere":
        raise ValueError("sphere tracking needs a sphere initial shape")
    phi = cfg.profile_phi()
    R0 = float(cfg.shape.get("R", 1.0))
    T = sphere_time(phi, R0)
    theta_fn = ThetaEvaluator(phi, T, R0)
    C = basis(cfg.modes, 2 * cfg.modes)[1]
    rows, worst = [], 0.0
    for rec, a in zip(result.records, result.coeffs):
        u = C @ a
        th = R0 if rec.t == 0.0 else theta_fn(rec.t)
        dev = max(abs(u.min() - th), abs(u.max() - th)) / th
        worst = max(worst, dev)
        rows.append((rec.t, float(u.min()), float(u.max()), th, dev))
    return SphereTracking(T_oracle=T, max_rel_dev=worst, rows=rows)
