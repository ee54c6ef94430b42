"""Scalar speed profiles ``Phi`` and their structure conditions.

Conditions are checked numerically on a log-spaced grid through the two
scale-free ratios ``p(s) = s Phi'/Phi`` and ``q(s) = s Phi''/Phi'``; every
condition in the list can be rewritten in terms of these, which keeps the
checks finite for profiles such as ``exp(s) - 1`` whose raw values overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curvature import FConditionReport


class PhiProfile:
    kind = "custom"
    analytic: dict = {}

    def __call__(self, s):
        return self.eval(s)[0]

    def eval(self, s):
        """Return ``(Phi, Phi', Phi'')`` at ``s``."""
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise ValueError("Phi is only defined for s >= 0")
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            return self._eval(s)

    def ratios(self, s):
        """Return ``(s Phi'/Phi, s Phi''/Phi')`` for ``s > 0``."""
        s = np.asarray(s, dtype=float)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            return self._ratios(s)

    def _ratios(self, s):
        v, d1, d2 = self._eval(s)
        return s * d1 / v, s * d2 / d1

    def scalar(self, s: float) -> float:
        """Plain-float ``Phi(s)``; ``inf`` on overflow."""
        with np.errstate(over="ignore"):
            return float(self._eval(np.array([s]))[0][0])

    def to_dict(self) -> dict:
        raise NotImplementedError


class PowerSum(PhiProfile):
    """``sum_i c_i s**k_i`` with ``c_i, k_i > 0``."""

    kind = "power_sum"

    def __init__(self, terms):
        self.terms = [(float(c), float(k)) for c, k in terms]
        if not self.terms or any(c <= 0 or k <= 0 for c, k in self.terms):
            raise ValueError("power_sum needs at least one term with c > 0, k > 0")
        ks = [k for _, k in self.terms]
        self.analytic = {
            "a": True, "b": True, "c": True, "e": True, "f": True,
            "d_i": min(ks) >= 1, "d_iii": max(ks) <= 1,
            "g": min(ks) >= 1, "h": True,
        }

    def to_dict(self):
        return {"kind": self.kind, "terms": [[c, k] for c, k in self.terms]}

    def _eval(self, s):
        v = d1 = d2 = 0.0
        for c, k in self.terms:
            v = v + c * s**k
            d1 = d1 + c * k * s ** (k - 1)
            if k != 1.0:
                d2 = d2 + c * k * (k - 1) * s ** (k - 2)
        if np.isscalar(d2):
            d2 = np.zeros_like(v)
        return v, d1, d2

    def scalar(self, s):
        s = float(s)
        try:
            return sum(c * s**k for c, k in self.terms)
        except OverflowError:
            return math.inf

    def _ratios(self, s):
        # scale by the dominant power so nothing overflows
        logs = np.log(s)
        ks = np.array([k for _, k in self.terms])
        cs = np.array([c for c, _ in self.terms])
        expo = np.log(cs)[:, None] + ks[:, None] * logs[None, :]
        w = np.exp(expo - expo.max(axis=0))
        p = (w * ks[:, None]).sum(axis=0) / w.sum(axis=0)
        wk = w * ks[:, None]
        q = (wk * (ks[:, None] - 1)).sum(axis=0) / wk.sum(axis=0)
        return p, q

    def c_bounds(self):
        weighted = max(c * abs(k - 1) for c, k in self.terms)
        plain = max(abs(k - 1) for _, k in self.terms)
        return weighted, plain


class Log1p(PhiProfile):
    kind = "log1p"
    analytic = {"a": True, "b": True, "c": True, "d_i": False, "d_iii": True, "e": True,
                "f": True, "g": False, "h": True, "i": True}

    def to_dict(self):
        return {"kind": self.kind}

    def _eval(self, s):
        return np.log1p(s), 1.0 / (1.0 + s), -1.0 / (1.0 + s) ** 2

    def scalar(self, s):
        return math.log1p(s)

    def _ratios(self, s):
        return s / ((1.0 + s) * np.log1p(s)), -s / (1.0 + s)


class Expm1(PhiProfile):
    kind = "expm1"
    analytic = {"a": True, "b": True, "c": True, "d_i": True, "d_iii": False, "e": True,
                "f": True, "g": True, "h": False, "i": False}

    def to_dict(self):
        return {"kind": self.kind}

    def _eval(self, s):
        e = np.exp(s)
        return np.expm1(s), e, e

    def scalar(self, s):
        try:
            return math.expm1(s)
        except OverflowError:
            return math.inf

    def _ratios(self, s):
        return -s / np.expm1(-s), s.copy()


class SumOf(PhiProfile):
    kind = "sum_of"

    def __init__(self, parts):
        self.parts = list(parts)
        if not self.parts:
            raise ValueError("sum_of needs at least one part")
        self.analytic = {}

    def to_dict(self):
        return {"kind": self.kind, "parts": [p.to_dict() for p in self.parts]}

    def _eval(self, s):
        v = d1 = d2 = 0.0
        for part in self.parts:
            a, b, c = part._eval(s)
            v, d1, d2 = v + a, d1 + b, d2 + c
        return v, d1, d2

    def scalar(self, s):
        return sum(p.scalar(s) for p in self.parts)


def make_phi(spec: dict) -> PhiProfile:
    kind = spec.get("kind")
    if kind == "power_sum":
        return PowerSum(spec["terms"])
    if kind == "log1p":
        return Log1p()
    if kind == "expm1":
        return Expm1()
    if kind == "sum_of":
        return SumOf([make_phi(p) for p in spec["parts"]])
    raise ValueError(f"unknown phi kind {kind!r}")


def eval_phi(phi: PhiProfile, s: float):
    if s < 0:
        raise ValueError("Phi is only defined for s >= 0")
    v, d1, d2 = phi.eval(np.array([float(s)]))
    return float(v[0]), float(d1[0]), float(d2[0])


@dataclass(frozen=True)
class Grid:
    s_min: float = 1e-6
    s_max: float = 1e6
    points: int = 1201

    def values(self) -> np.ndarray:
        return np.logspace(math.log10(self.s_min), math.log10(self.s_max), self.points)


@dataclass
class PhiConditionReport:
    kind: str
    a: bool
    b: bool
    c: bool
    d_i: bool
    d_ii: bool
    d_ii_eps: float
    d_iii: bool
    e: bool
    f: bool
    g: bool
    h: bool
    i: bool
    empirical_c_for_h: float | str
    h_tail_growing: bool
    grid: dict
    c_bound_weighted: float | None = None
    c_bound_plain: float | None = None
    c_within_weighted: bool | None = None
    c_within_plain: bool | None = None
    analytic: dict = field(default_factory=dict)


# relative slack on sign tests that are exact identities for linear Phi
SIGN_TOL = 1e-9


def _limit_small(phi):
    s = np.array([1e-2, 1e-4, 1e-6])
    p, _ = phi.ratios(s)
    v = s * p  # Phi' s^2 / Phi
    return bool(np.all(np.isfinite(v)) and v[0] > v[1] > v[2] >= 0 and v[2] <= 1e-2 * v[0])


def _limit_large(phi):
    s = np.array([1e2, 1e4, 1e6])
    p, _ = phi.ratios(s)
    v = s * p
    return bool(np.all(np.isfinite(v)) and v[0] < v[1] < v[2] and v[2] >= 1e2 * v[0])


def _unbounded(phi):
    s = np.array([1e2, 1e3, 1e4, 1e5, 1e6])
    v, _, _ = phi.eval(s)
    if np.any(np.isinf(v)):
        return True
    inc = np.diff(v)
    return bool(np.all(inc > 0) and inc[-1] >= 0.5 * inc[-2])


def condition_report_phi(phi: PhiProfile, grid: Grid | None = None) -> PhiConditionReport:
    grid = grid or Grid()
    s = grid.values()
    p, q = phi.ratios(s)
    ok = np.isfinite(p) & np.isfinite(q)
    p, q, s_ok = p[ok], q[ok], s[ok]
    _, d1, _ = phi.eval(s)

    a = float(phi.eval(np.array([0.0]))[0][0]) == 0.0
    c = bool(np.all(d1 > 0))
    # Phi' s - Phi = Phi (p - 1)
    d_i = bool(np.all(p - 1 >= -SIGN_TOL * p))
    d_iii = bool(np.all(p - 1 <= SIGN_TOL * p))
    # (Phi' s - Phi) / (Phi' s) = 1 - 1/p
    eps = max(0.0, float(np.min(1.0 - 1.0 / p)))
    # a positive grid infimum only counts if it survives widening the grid by
    # three decades each way; otherwise it is an artefact of the grid ends
    p_wide, _ = phi.ratios(np.array([grid.s_min * 1e-3, grid.s_max * 1e3]))
    eps_wide = float(np.min(1.0 - 1.0 / p_wide[np.isfinite(p_wide)], initial=eps))
    d_ii = eps > SIGN_TOL and eps_wide >= 0.5 * eps
    g = bool(np.all(q >= -SIGN_TOL))
    absq = np.abs(q)
    tail = absq[s_ok >= s_ok[-1] / 1e3]
    growing = bool(np.all(np.diff(tail) > 0) and tail[-1] > 1e3)
    h = not growing
    emp_c = float(absq.max()) if h else "unbounded"
    cond_i = bool(np.all(q + 2.0 * (1.0 - p * p) > 0))

    rep = PhiConditionReport(
        kind=phi.kind, a=a, b=_unbounded(phi), c=c,
        d_i=d_i, d_ii=d_ii, d_ii_eps=eps, d_iii=d_iii,
        e=_limit_small(phi), f=_limit_large(phi), g=g, h=h, i=cond_i,
        empirical_c_for_h=emp_c, h_tail_growing=growing,
        grid={"s_min": grid.s_min, "s_max": grid.s_max, "points": grid.points,
              "spacing": "log", "finite_points": int(ok.sum())},
        analytic=dict(phi.analytic),
    )
    if isinstance(phi, PowerSum) and h:
        w, pl = phi.c_bounds()
        rep.c_bound_weighted, rep.c_bound_plain = w, pl
        rep.c_within_weighted = emp_c <= w * (1 + 1e-9)
        rep.c_within_plain = emp_c <= pl * (1 + 1e-9)
    return rep


CASES = ("e_i", "e_ii", "e_iii_a", "e_iii_b", "e_iv_a", "e_iv_b", "e_v_a", "e_v_b")

# Phi-side requirements for each bullet; a, b, c, e, f are needed by every case
_PHI_NEEDS = {
    "e_i": ("g",), "e_v_a": ("g",),
    "e_ii": ("d_i", "h"), "e_iii_a": ("d_i", "h"), "e_iii_b": ("d_i", "h"),
    "e_iv_a": ("d_iii", "i"), "e_iv_b": ("d_iii", "i"),
    "e_v_b": ("d_ii", "h"),
}
_BASE = ("a", "b", "c", "e", "f")


@dataclass
class CaseClassification:
    applicable_cases: list
    details: dict
    uncertified: list
    empty: bool


def classify_case(fr: FConditionReport, pr: PhiConditionReport, n: int,
                  axially_symmetric: bool) -> CaseClassification:
    f_side = {
        "e_i": (n == 2, "n == 2"),
        "e_ii": (fr.concavity_class == "convex", "f convex"),
        "e_iii_a": (fr.concavity_class == "concave" and fr.vanishes_on_boundary_ok,
                    "f concave and vanishes on the cone boundary"),
        "e_iii_b": (False, "boundary liminf comparison is not certified"),
        "e_iv_a": (fr.inverse_concave_ok and fr.dual_vanishes_on_boundary_ok,
                   "f inverse concave and f_* vanishes on the cone boundary"),
        "e_iv_b": (False, "boundary liminf comparison is not certified"),
        "e_v_a": (axially_symmetric, "axially symmetric initial data"),
        "e_v_b": (True, "pinching |A0|^2 <= sigma H^2 on the initial data"),
    }
    details, applicable = {}, []
    for case in CASES:
        needs = _BASE + _PHI_NEEDS[case]
        sat = [c for c in needs if getattr(pr, c)]
        vio = [c for c in needs if not getattr(pr, c)]
        f_ok, f_why = f_side[case]
        details[case] = {"phi_satisfied": sat, "phi_violated": vio, "f_side": f_why, "f_ok": f_ok}
        if f_ok and not vio:
            applicable.append(case)
    return CaseClassification(applicable_cases=applicable, details=details,
                              uncertified=["e_iii_b", "e_iv_b"], empty=not applicable)


def pinch_threshold(phi: PhiProfile, f_value: float) -> float:
    _, d1, d2 = eval_phi(phi, f_value)
    if d2 <= 0:
        return math.inf
    return 1.0 + 2.0 * d1 / (d2 * f_value)
