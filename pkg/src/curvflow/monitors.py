"""Pointwise monitored quantities, monotonicity checks and sphere rescaling."""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy import integrate, optimize

from .curvature import SpeedFunction
from .geometry import SupportProfile, kappa_matrix, nodal_radii, steiner_offset
from .speeds import PhiProfile

NAN = float("nan")


@dataclass
class MonitorRecord:
    t: float
    tau: float
    theta: float
    kappa_min: float
    kappa_max: float
    pinch_ratio: float
    G_max: float
    HoverF_max: float
    KoverFn_min: float
    Zsigma_max: float
    rPhi_max: float
    Ztso_max: float
    Ztso_valid: bool
    speed_min: float
    speed_max: float
    sup_dev_unit: float
    Zlambda_max: float = NAN

    def as_dict(self):
        return asdict(self)


CSV_FIELDS = [f.name for f in fields(MonitorRecord) if f.name != "Zlambda_max"]


@dataclass(frozen=True)
class MonitorSettings:
    sigma: float
    delta: float
    lam: float | None = None
    hbar: float | None = None


def node_quantities(profile: SupportProfile, f: SpeedFunction, phi: PhiProfile):
    """Per-node curvature data for ``profile``; returns a dict of arrays."""
    n = profile.n
    r1, r2 = nodal_radii(profile.coeffs, profile.M, profile.N)
    if np.any(r1 <= 0) or np.any(r2 <= 0):
        raise ValueError("monitor sample on a non-convex profile")
    k1, k2 = 1.0 / r1, 1.0 / r2
    kap = kappa_matrix(r1, r2, n)
    F = f.value(kap)
    Phi = phi.eval(F)[0]
    H = k1 + (n - 1) * k2
    # difference form avoids cancellation in |A|^2 - H^2/n
    A0sq = (n - 1) / n * (k1 - k2) ** 2
    return {"r1": r1, "r2": r2, "k1": k1, "k2": k2, "F": F, "Phi": Phi, "H": H, "A0sq": A0sq}


def monitor_sample(profile: SupportProfile, t: float, f: SpeedFunction, phi: PhiProfile,
                   settings: MonitorSettings, theta_fn=None, p_axial: float = 0.0) -> MonitorRecord:
    n = profile.n
    q = node_quantities(profile, f, phi)
    k1, k2, F, Phi, H, A0sq = q["k1"], q["k2"], q["F"], q["Phi"], q["H"], q["A0sq"]
    kmax = np.maximum(k1, k2)
    kmin = np.minimum(k1, k2)

    z = steiner_offset(profile)
    u_rc = profile.values() - z * np.cos(profile.theta)
    delta = settings.delta
    valid = bool(u_rc.min() - delta >= 0.5 * delta)
    ztso = float(np.max(Phi / (u_rc - delta))) if valid else NAN

    zlam = NAN
    if settings.lam is not None and settings.hbar is not None:
        zlam = float(np.max(A0sq - settings.sigma * settings.hbar**settings.lam * H ** (2 - settings.lam)))

    tau = theta = dev = NAN
    if theta_fn is not None:
        theta = float(theta_fn(t))
        if theta > 0:
            tau = -math.log(theta)
            _, dev = rescale_state(profile, theta, p_axial)

    return MonitorRecord(
        t=float(t), tau=tau, theta=theta,
        kappa_min=float(kmin.min()), kappa_max=float(kmax.max()),
        pinch_ratio=float(np.max(kmax / kmin)),
        G_max=float(np.max(n * A0sq / H**2)),
        HoverF_max=float(np.max(H / F)),
        KoverFn_min=float(np.min(k1 * k2 ** (n - 1) / F**n)),
        Zsigma_max=float(np.max(A0sq - settings.sigma * H**2)),
        rPhi_max=float(np.max(np.maximum(q["r1"], q["r2"]) * Phi)),
        Ztso_max=ztso, Ztso_valid=valid,
        speed_min=float(Phi.min()), speed_max=float(Phi.max()),
        sup_dev_unit=dev, Zlambda_max=zlam,
    )


def default_settings(profile: SupportProfile, f: SpeedFunction, phi: PhiProfile,
                     sigma: float | None = None, delta: float | None = None,
                     lam: float | None = None) -> MonitorSettings:
    n = profile.n
    q = node_quantities(profile, f, phi)
    if sigma is None:
        ratio = float(np.max(q["A0sq"] / q["H"] ** 2))
        cap = 0.5 / (n * (n - 1))
        sigma = min(ratio / 0.9, cap) if ratio > 0 else cap
    if delta is None:
        z = steiner_offset(profile)
        u_rc = profile.values() - z * np.cos(profile.theta)
        delta = 0.5 * float(u_rc.min())
    hbar = float(q["H"].max()) if lam is not None else None
    return MonitorSettings(sigma=float(sigma), delta=float(delta), lam=lam, hbar=hbar)


@dataclass
class MonotonicityReport:
    quantity: str
    direction: str
    worst_violation: float
    first_violation_time: float | None
    tolerance: float
    passed: bool
    samples: int


def assert_monotone(series, quantity: str, direction: str, rel_tolerance: float) -> MonotonicityReport:
    """Check a monitored series.

    ``direction`` is ``nonincreasing``, ``nondecreasing``, ``bounded`` (never
    above the first valid sample) or ``nonpositive``. NaN samples are skipped.
    """
    t = np.array([r.t for r in series], dtype=float)
    x = np.array([getattr(r, quantity) for r in series], dtype=float)
    keep = np.isfinite(x)
    t, x = t[keep], x[keep]
    if x.size < 2:
        raise ValueError(f"need at least two finite samples of {quantity}")
    tiny = np.finfo(float).tiny
    if direction == "nonincreasing":
        viol = (x[1:] - x[:-1]) / np.maximum(np.abs(x[:-1]), tiny)
        times = t[1:]
    elif direction == "nondecreasing":
        viol = (x[:-1] - x[1:]) / np.maximum(np.abs(x[:-1]), tiny)
        times = t[1:]
    elif direction == "bounded":
        viol = (x[1:] - x[0]) / max(abs(x[0]), tiny)
        times = t[1:]
    elif direction == "nonpositive":
        viol = x / max(np.abs(x).max(), tiny)
        times = t
    else:
        raise ValueError(f"unknown direction {direction!r}")
    worst = float(viol.max())
    bad = np.flatnonzero(viol > rel_tolerance)
    return MonotonicityReport(
        quantity=quantity, direction=direction, worst_violation=worst,
        first_violation_time=float(times[bad[0]]) if bad.size else None,
        tolerance=rel_tolerance, passed=bool(worst <= rel_tolerance), samples=int(x.size),
    )


def sphere_time(phi: PhiProfile, radius: float) -> float:
    """Time for a sphere of the given radius to shrink to a point."""
    if radius <= 0:
        return 0.0

    # rho = radius * exp(-x) removes the endpoint behaviour at rho = 0
    def integrand(x):
        rho = radius * math.exp(-x)
        if rho == 0.0:
            return 0.0
        val = phi.scalar(1.0 / rho)
        if not math.isfinite(val):
            return 0.0
        return rho / val

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(integrand, 0.0, math.inf, epsabs=0.0, epsrel=1e-13, limit=400)
    if not math.isfinite(val) or err > 1e-9 * abs(val):
        raise ArithmeticError(f"extinction-time quadrature did not converge (err={err:.3g})")
    return val


class ThetaEvaluator:
    """``Theta(t)`` for the sphere that vanishes exactly at ``T``."""

    def __init__(self, phi: PhiProfile, T: float, theta0: float | None = None):
        self.phi = phi
        self.T = float(T)
        self._last = theta0

    def __call__(self, t: float) -> float:
        remaining = self.T - t
        if remaining <= 0:
            return 0.0
        return self.radius_for_remaining(remaining)

    def radius_for_remaining(self, remaining: float) -> float:
        phi = self.phi

        def g(r):
            return sphere_time(phi, r) - remaining

        def gp(r):
            return 1.0 / phi.scalar(1.0 / r)

        # bracket: sphere_time is increasing in the radius
        lo, hi = 0.0, self._last if self._last else 1.0
        while g(hi) < 0:
            lo, hi = hi, 2 * hi
        r = hi
        for _ in range(60):
            val = g(r)
            if val > 0:
                hi = r
            else:
                lo = r
            step = val / gp(r)
            r_new = r - step
            if not (lo < r_new < hi):
                r_new = 0.5 * (lo + hi)
            if abs(r_new - r) <= 1e-14 * r_new:
                r = r_new
                break
            r = r_new
        else:
            r = optimize.brentq(g, lo if lo > 0 else 1e-300, hi, rtol=1e-14, xtol=1e-300)
        self._last = r
        return r


def sphere_theta(phi: PhiProfile, theta0: float):
    if theta0 <= 0:
        raise ValueError("theta0 must be positive")
    T = sphere_time(phi, theta0)
    return T, ThetaEvaluator(phi, T, theta0)


def rescale_state(profile: SupportProfile, theta: float, p_axial: float):
    if theta <= 0:
        raise ValueError("theta must be positive")
    c = profile.coeffs.copy()
    if c.size > 1:
        c[1] -= p_axial
    tilde = profile.with_coeffs(c / theta)
    dev = float(np.max(np.abs(tilde.values() - 1.0)))
    return tilde, dev


def fit_decay_rate(taus, devs):
    """Exponential rate of ``devs ~ exp(-rate * tau)`` over the trailing half."""
    taus = np.asarray(taus, dtype=float)
    devs = np.asarray(devs, dtype=float)
    if taus.size < 8:
        raise ValueError("need at least 8 samples")
    keep = devs > 0
    if not keep.any():
        return math.inf, 0.0
    taus, devs = taus[keep], devs[keep]
    half = taus.size // 2
    tt, yy = taus[half:], np.log(devs[half:])
    if tt.size < 2:
        raise ValueError("not enough positive samples in the trailing half")
    slope, icpt = np.polyfit(tt, yy, 1)
    resid = float(np.sqrt(np.mean((yy - (slope * tt + icpt)) ** 2)))
    return float(-slope), resid


# quantity, direction, relative tolerance, cases that guarantee it (None: every case)
MONITOR_CHECKS = (
    ("G_max", "nonincreasing", 1e-6, ("e_i",)),
    ("KoverFn_min", "nondecreasing", 1e-6, ("e_ii",)),
    ("HoverF_max", "nonincreasing", 1e-6, ("e_iii_a", "e_iii_b")),
    ("rPhi_max", "nonincreasing", 1e-6, ("e_iv_a", "e_iv_b")),
    ("Zsigma_max", "nonpositive", 1e-6, ("e_v_b",)),
    ("Ztso_max", "bounded", 0.05, None),
)


def monotonicity_reports(records, applicable_cases=()) -> list[dict]:
    """Run every standard check; ``expected`` marks those an applicable case guarantees."""
    out = []
    for quantity, direction, tol, cases in MONITOR_CHECKS:
        expected = cases is None or any(c in applicable_cases for c in cases)
        try:
            rep = asdict(assert_monotone(records, quantity, direction, tol))
        except ValueError as exc:
            rep = {"quantity": quantity, "direction": direction, "skipped": str(exc)}
        rep["expected"] = bool(expected)
        out.append(rep)
    return out
