"""Symmetric degree-one curvature functions and their pointwise algebra.

All speeds are normalized so that ``f(1, ..., 1) = 1``. Every evaluation
routine accepts arrays whose last axis holds the ``n`` principal curvatures,
so a whole collocation grid can be processed in one call.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

TIE_TOL = 1e-7
CLASS_TOL = 1e-10


class DomainError(ValueError):
    """Raised when curvatures leave the positive cone."""


def _check_cone(kappa):
    k = np.asarray(kappa, dtype=float)
    if k.shape[-1] < 2:
        raise DomainError(f"need n >= 2 curvatures, got {k.shape[-1]}")
    if not np.all(k > 0):
        raise DomainError("principal curvatures must be strictly positive")
    return k


@dataclass(frozen=True)
class PrincipalCurvatures:
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        _check_cone(np.array(vals))
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return len(self.values)

    def __array__(self, dtype=None, copy=None):
        return np.array(self.values, dtype=dtype)


@dataclass(frozen=True)
class ShapeInvariants:
    H: float
    normA2: float
    normA02: float
    C: float
    K: float
    pinch_ratio: float


class SpeedFunction:
    """Base class for a symmetric, degree-one homogeneous speed ``f``.

    Subclasses implement ``_value``, ``_grad`` and ``_hess`` on validated
    arrays of shape ``(..., n)``. This is the extension point for
    user-supplied closed forms.
    """

    kind = "custom"

    def __call__(self, kappa):
        return self.value(kappa)

    def value(self, kappa):
        return self._value(_check_cone(kappa))

    def grad(self, kappa):
        return self._grad(_check_cone(kappa))

    def hess(self, kappa):
        return self._hess(_check_cone(kappa))

    def to_dict(self) -> dict:
        return {"kind": self.kind}

    def _value(self, k):
        raise NotImplementedError

    def _grad(self, k):
        raise NotImplementedError

    def _hess(self, k):
        raise NotImplementedError

    def axisym(self, k1, k2, n):
        """Value and gradient maximum at curvatures ``(k1, k2, ..., k2)``.

        Builtins override this with closed forms; the default stacks the
        full curvature vectors.
        """
        kap = np.empty((np.size(k1), n))
        kap[:, 0] = k1
        kap[:, 1:] = np.asarray(k2)[:, None]
        return self._value(kap), self._grad(kap).max(axis=1)


class ArithmeticMean(SpeedFunction):
    kind = "arithmetic_mean"

    def _value(self, k):
        return k.mean(axis=-1)

    def _grad(self, k):
        return np.full_like(k, 1.0 / k.shape[-1])

    def _hess(self, k):
        n = k.shape[-1]
        return np.zeros(k.shape + (n,))

    def axisym(self, k1, k2, n):
        return (k1 + (n - 1) * k2) / n, np.full_like(k1, 1.0 / n)


class GeometricMean(SpeedFunction):
    kind = "geometric_mean"

    def _value(self, k):
        return np.exp(np.log(k).mean(axis=-1))

    def _grad(self, k):
        n = k.shape[-1]
        f = self._value(k)[..., None]
        return f / (n * k)

    def _hess(self, k):
        n = k.shape[-1]
        f = self._value(k)[..., None, None]
        inv = 1.0 / k
        outer = inv[..., :, None] * inv[..., None, :]
        return f * (outer / n**2 - _diag(inv**2) / n)

    def axisym(self, k1, k2, n):
        f = np.exp((np.log(k1) + (n - 1) * np.log(k2)) / n)
        return f, f / (n * np.minimum(k1, k2))


class RootMeanSquare(SpeedFunction):
    kind = "rms"

    def _value(self, k):
        return np.sqrt((k * k).mean(axis=-1))

    def _grad(self, k):
        n = k.shape[-1]
        f = self._value(k)[..., None]
        return k / (n * f)

    def _hess(self, k):
        n = k.shape[-1]
        f = self._value(k)[..., None, None]
        outer = k[..., :, None] * k[..., None, :]
        eye = np.broadcast_to(np.eye(n), outer.shape)
        return eye / (n * f) - outer / (n**2 * f**3)

    def axisym(self, k1, k2, n):
        f = np.sqrt((k1 * k1 + (n - 1) * k2 * k2) / n)
        return f, np.maximum(k1, k2) / (n * f)


class HarmonicMean(SpeedFunction):
    kind = "harmonic_mean"

    def _value(self, k):
        return 1.0 / (1.0 / k).mean(axis=-1)

    def _grad(self, k):
        n = k.shape[-1]
        f = self._value(k)[..., None]
        return f**2 / (n * k**2)

    def _hess(self, k):
        n = k.shape[-1]
        f = self._value(k)[..., None, None]
        inv2 = 1.0 / k**2
        outer = inv2[..., :, None] * inv2[..., None, :]
        return 2 * f**3 * outer / n**2 - 2 * f**2 * _diag(1.0 / k**3) / n

    def axisym(self, k1, k2, n):
        f = n / (1.0 / k1 + (n - 1) / k2)
        return f, f**2 / (n * np.minimum(k1, k2) ** 2)


class PowerMean(SpeedFunction):
    """``(mean(kappa**p))**(1/p)``; ``p = 0`` is the geometric mean."""

    kind = "power_mean"

    def __init__(self, p: float):
        self.p = float(p)
        if self.p == 0.0:
            self._gm = GeometricMean()

    def to_dict(self):
        return {"kind": self.kind, "p": self.p}

    def _value(self, k):
        if self.p == 0.0:
            return self._gm._value(k)
        return (k**self.p).mean(axis=-1) ** (1.0 / self.p)

    def _grad(self, k):
        if self.p == 0.0:
            return self._gm._grad(k)
        p, n = self.p, k.shape[-1]
        f = self._value(k)[..., None]
        return f ** (1 - p) * k ** (p - 1) / n

    def _hess(self, k):
        if self.p == 0.0:
            return self._gm._hess(k)
        p, n = self.p, k.shape[-1]
        f = self._value(k)[..., None, None]
        a = k ** (p - 1)
        outer = a[..., :, None] * a[..., None, :]
        return (1 - p) * f ** (1 - 2 * p) * outer / n**2 + (p - 1) * f ** (1 - p) * _diag(k ** (p - 2)) / n

    def axisym(self, k1, k2, n):
        if self.p == 0.0:
            return self._gm.axisym(k1, k2, n)
        p = self.p
        f = ((k1**p + (n - 1) * k2**p) / n) ** (1.0 / p)
        g = f ** (1 - p) * np.maximum(k1 ** (p - 1), k2 ** (p - 1)) / n
        return f, g


class DualSpeed(SpeedFunction):
    """The dual ``f_*(r) = 1 / f(1/r)`` acting on principal radii."""

    def __init__(self, base: SpeedFunction):
        self.base = base
        self.kind = f"dual({base.kind})"

    def _value(self, r):
        return 1.0 / self.base._value(1.0 / r)

    def _grad(self, r):
        kap = 1.0 / r
        f = self.base._value(kap)[..., None]
        return self.base._grad(kap) * kap**2 / f**2

    def _hess(self, r):
        # g(r) = f(1/r); f_* = 1/g
        kap = 1.0 / r
        g = self.base._value(kap)[..., None, None]
        fd = self.base._grad(kap)
        gi = -fd * kap**2
        gij = self.base._hess(kap) * (kap**2)[..., :, None] * (kap**2)[..., None, :]
        gij = gij + _diag(2 * fd * kap**3)
        outer = gi[..., :, None] * gi[..., None, :]
        return -gij / g**2 + 2 * outer / g**3


def _diag(v):
    n = v.shape[-1]
    out = np.zeros(v.shape + (n,))
    idx = np.arange(n)
    out[..., idx, idx] = v
    return out


_BUILTINS = {
    "arithmetic_mean": ArithmeticMean,
    "geometric_mean": GeometricMean,
    "rms": RootMeanSquare,
    "harmonic_mean": HarmonicMean,
}


def make_speed(kind: str, p: float | None = None) -> SpeedFunction:
    if kind == "power_mean":
        if p is None:
            raise ValueError("power_mean needs an exponent p")
        return PowerMean(p)
    try:
        return _BUILTINS[kind]()
    except KeyError:
        raise ValueError(f"unknown speed kind {kind!r}") from None


def builtin_speeds() -> list[SpeedFunction]:
    return [ArithmeticMean(), GeometricMean(), RootMeanSquare(), HarmonicMean(), PowerMean(3.0)]


def eval_speed_f(f: SpeedFunction, kappa):
    return f.value(kappa)


def grad_speed_f(f: SpeedFunction, kappa):
    return f.grad(kappa)


def hess_speed_f(f: SpeedFunction, kappa):
    return f.hess(kappa)


def dual_speed(f: SpeedFunction, r):
    return DualSpeed(f).value(r)


def second_derivative_form(f: SpeedFunction, kappa, B) -> float:
    """Second derivative of ``F(diag(kappa) + sB)`` at ``s = 0``.

    Near-equal curvature pairs use the analytic limit of the difference
    quotient, ``fdd[k, k] - fdd[k, l]``.
    """
    k = _check_cone(np.asarray(kappa, dtype=float))
    B = np.asarray(B, dtype=float)
    n = k.size
    if B.shape != (n, n) or not np.allclose(B, B.T, atol=1e-14 * max(1.0, np.abs(B).max())):
        raise ValueError("B must be a symmetric n x n matrix")
    fd = f.grad(k)
    fdd = f.hess(k)
    d = np.diag(B)
    total = d @ fdd @ d
    kmax = k.max()
    tied = False
    for a in range(n):
        for b in range(a + 1, n):
            gap = k[a] - k[b]
            if abs(gap) < TIE_TOL * kmax:
                tied = True
                q = fdd[a, a] - fdd[a, b]
            else:
                q = (fd[a] - fd[b]) / gap
            total += 2.0 * q * B[a, b] ** 2
    if tied:
        warnings.warn("near-tied curvatures: using analytic limit of difference quotient", stacklevel=2)
    return float(total)


def shape_invariants(kappa) -> ShapeInvariants:
    k = _check_cone(np.asarray(kappa, dtype=float))
    n = k.size
    H = k.sum()
    A2 = (k * k).sum()
    diffs = k[:, None] - k[None, :]
    A02 = 0.5 * (diffs**2).sum() / n
    return ShapeInvariants(
        H=float(H),
        normA2=float(A2),
        normA02=float(A02),
        C=float((k**3).sum()),
        K=float(np.prod(k)),
        pinch_ratio=float(k.max() / k.min()),
    )


@dataclass
class FConditionReport:
    kind: str
    n: int
    normalization_ok: bool
    homogeneity_residual: float
    monotone_ok: bool
    concavity_class: str
    inverse_concave_ok: bool
    vanishes_on_boundary_ok: bool
    dual_vanishes_on_boundary_ok: bool
    sample_count: int
    cone_ratio_bound: float
    seed: int
    boundary_profile: list = field(default_factory=list)
    dual_boundary_profile: list = field(default_factory=list)


def sample_cone(n: int, count: int, ratio_bound: float, rng) -> np.ndarray:
    """Log-uniform curvature samples with ``max/min <= ratio_bound``, mean 1."""
    logs = rng.uniform(0.0, np.log(ratio_bound), size=(count, n))
    k = np.exp(logs)
    return k / k.mean(axis=1, keepdims=True)


def _random_sym(n, rng):
    B = rng.standard_normal((n, n))
    B = 0.5 * (B + B.T)
    return B / np.linalg.norm(B)


def classify_forms(values, scale) -> str:
    tol = CLASS_TOL * scale
    pos = np.any(values > tol)
    neg = np.any(values < -tol)
    if pos and neg:
        return "neither"
    if pos:
        return "convex"
    if neg:
        return "concave"
    return "linear"


def _boundary_slope(func, n):
    eps = [1e-4, 1e-8, 1e-12]
    vals = []
    for e in eps:
        k = np.ones(n)
        k[0] = e
        vals.append(float(func(k)))
    slope = np.log(vals[2] / vals[1]) / np.log(eps[2] / eps[1])
    return vals, slope


def condition_report_f(f: SpeedFunction, n: int, samples: int = 200, ratio_bound: float = 4.0,
                       seed: int = 0) -> FConditionReport:
    rng = np.random.default_rng(seed)
    kap = sample_cone(n, samples, ratio_bound, rng)
    vals = f.value(kap)
    grads = f.grad(kap)
    normalization_ok = abs(float(f.value(np.ones(n))) - 1.0) < 1e-12
    resid = np.abs((grads * kap).sum(axis=1) - vals) / vals
    monotone_ok = bool(np.all(grads > 0))

    dual = DualSpeed(f)
    forms, dual_forms = [], []
    for i in range(samples):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            B = _random_sym(n, rng)
            forms.append(second_derivative_form(f, kap[i], B))
            r = 1.0 / kap[i]
            r = r / r.mean()
            dual_forms.append(second_derivative_form(dual, r, B))
    forms = np.array(forms)
    dual_forms = np.array(dual_forms)
    cls = classify_forms(forms, float(vals.max()))
    dual_cls = classify_forms(dual_forms, 1.0)

    bvals, bslope = _boundary_slope(f.value, n)
    dvals, dslope = _boundary_slope(dual.value, n)
    return FConditionReport(
        kind=f.kind,
        n=n,
        normalization_ok=normalization_ok,
        homogeneity_residual=float(resid.max()),
        monotone_ok=monotone_ok,
        concavity_class=cls,
        inverse_concave_ok=dual_cls in ("concave", "linear"),
        vanishes_on_boundary_ok=bool(bslope > 0.05),
        dual_vanishes_on_boundary_ok=bool(dslope > 0.05),
        sample_count=samples,
        cone_ratio_bound=ratio_bound,
        seed=seed,
        boundary_profile=bvals,
        dual_boundary_profile=dvals,
    )
