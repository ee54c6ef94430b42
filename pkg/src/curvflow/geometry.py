"""Axially symmetric convex hypersurfaces through their support function.

The support function is stored as an even cosine series on ``[0, pi]``,
``u(theta) = sum_m a_m cos(m theta)``, where ``theta`` is the angle between
the outer normal and the symmetry axis. Every such series is a polynomial in
``cos(theta)`` and therefore smooth at both poles of ``S^n``.

Principal radii: meridional ``r1 = u'' + u``; rotational (multiplicity
``n - 1``) ``r2 = u + u' cot(theta)``, which equals ``r1`` at the poles.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_gegenbauer


class ConvexityError(ValueError):
    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


@lru_cache(maxsize=32)
def basis(M: int, N: int):
    """Dense transforms for ``M + 1`` modes on ``N + 1`` nodes ``j pi / N``.

    Returns ``theta, C, R1, R2, Dp, P`` where ``C @ a`` gives ``u`` at the
    nodes, ``R1 @ a`` and ``R2 @ a`` the two radii, ``Dp @ a`` the first
    derivative, and ``P @ values`` the truncated cosine interpolant
    coefficients of nodal values.
    """
    if N < 2 * M:
        raise ValueError(f"need N >= 2M nodes (got M={M}, N={N})")
    theta = np.arange(N + 1) * np.pi / N
    m = np.arange(M + 1)
    C = np.cos(np.outer(theta, m))
    S = np.sin(np.outer(theta, m))
    R1 = C * (1 - m**2)
    Dp = -S * m
    R2 = C.copy()
    inner = slice(1, N)
    cot = np.cos(theta[inner]) / np.sin(theta[inner])
    R2[inner] += Dp[inner] * cot[:, None]
    R2[0] = R1[0]
    R2[N] = R1[N]

    # DCT-I interpolation, truncated to the first M + 1 modes
    mm = np.arange(N + 1)
    full = np.cos(np.outer(mm, theta)) * (2.0 / N)
    full[:, 0] *= 0.5
    full[:, N] *= 0.5
    full[0] *= 0.5
    full[N] *= 0.5
    P = full[: M + 1].copy()
    for arr in (theta, C, R1, R2, Dp, P):
        arr.setflags(write=False)
    return theta, C, R1, R2, Dp, P


@lru_cache(maxsize=32)
def sphere_quadrature(n: int, M: int):
    """Nodes in ``theta`` and weights for averages over ``S^n`` of axisymmetric functions.

    Gauss-Gegenbauer in ``x = cos(theta)`` with weight ``(1 - x^2)^((n-2)/2)``,
    which is exact for cosine series of degree up to the node count.
    """
    npts = 2 * M + 2
    x, w = roots_gegenbauer(npts, (n - 1) / 2.0)
    th = np.arccos(x)
    w = w / w.sum()
    Cq = np.cos(np.outer(th, np.arange(M + 1)))
    mean_row = w @ Cq
    # normalized so that the Steiner offset of cos(theta) is exactly 1
    steiner_row = ((w * x) @ Cq) / (w * x * x).sum()
    # even modes are even in x and carry no axial moment
    steiner_row[0::2] = 0.0
    for arr in (mean_row, steiner_row):
        arr.setflags(write=False)
    return mean_row, steiner_row


@dataclass(frozen=True)
class SupportProfile:
    n: int
    coeffs: np.ndarray
    N: int

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if self.n < 2:
            raise ValueError("n must be >= 2")

    @property
    def M(self) -> int:
        return self.coeffs.size - 1

    @property
    def theta(self):
        return basis(self.M, self.N)[0]

    def values(self):
        return basis(self.M, self.N)[1] @ self.coeffs

    def derivative(self):
        return basis(self.M, self.N)[4] @ self.coeffs

    def evaluate(self, theta):
        theta = np.asarray(theta, dtype=float)
        m = np.arange(self.M + 1)
        return np.cos(np.multiply.outer(theta, m)) @ self.coeffs

    def with_coeffs(self, coeffs) -> "SupportProfile":
        return SupportProfile(self.n, coeffs, self.N)

    def scaled(self, lam: float) -> "SupportProfile":
        return self.with_coeffs(lam * self.coeffs)


@dataclass(frozen=True)
class CurvatureField:
    r1: np.ndarray
    r2: np.ndarray
    n: int

    @property
    def k_ax(self):
        return 1.0 / self.r1

    @property
    def k_rot(self):
        return 1.0 / self.r2

    def kappa(self) -> np.ndarray:
        """Per-node curvature vectors, shape ``(nodes, n)``."""
        return kappa_matrix(self.r1, self.r2, self.n)


def kappa_matrix(r1, r2, n):
    k = np.empty((r1.size, n))
    k[:, 0] = 1.0 / r1
    k[:, 1:] = (1.0 / r2)[:, None]
    return k


def nodal_radii(coeffs, M, N):
    _, _, R1, R2, _, _ = basis(M, N)
    return R1 @ coeffs, R2 @ coeffs


def radii(profile: SupportProfile, check: bool = True) -> CurvatureField:
    r1, r2 = nodal_radii(profile.coeffs, profile.M, profile.N)
    if check:
        _check_convex(r1, r2)
    return CurvatureField(r1=r1, r2=r2, n=profile.n)


def _check_convex(r1, r2):
    bad = np.flatnonzero((r1 <= 0) | (r2 <= 0))
    if bad.size:
        j = int(bad[0])
        raise ConvexityError(f"profile not strictly convex at node {j} (r1={r1[j]:.3g}, r2={r2[j]:.3g})",
                             node=j)


def fit_coefficients(func, M: int, N: int) -> np.ndarray:
    theta = basis(M, N)[0]
    return basis(M, N)[5] @ func(theta)


def make_profile(spec: dict, n: int, M: int, N: int | None = None) -> SupportProfile:
    """Build a profile from ``{"kind": ...}``: sphere, spheroid, perturbed_sphere, coeffs."""
    N = N or 2 * M
    kind = spec.get("kind")
    a = np.zeros(M + 1)
    if kind == "sphere":
        a[0] = float(spec.get("R", 1.0))
    elif kind == "spheroid":
        ax, eq = float(spec["a"]), float(spec["b"])
        a = fit_coefficients(lambda t: np.sqrt(ax**2 * np.cos(t) ** 2 + eq**2 * np.sin(t) ** 2), M, N)
    elif kind == "perturbed_sphere":
        R, eps, m = float(spec.get("R", 1.0)), float(spec["eps"]), int(spec.get("m", 2))
        if m % 2 or m > M:
            raise ValueError("perturbation mode must be even and at most M")
        a[0] = R
        a[m] = R * eps
    elif kind == "coeffs":
        c = np.asarray(spec["coeffs"], dtype=float)
        if c.size > M + 1:
            raise ValueError("more coefficients than modes")
        a[: c.size] = c
    else:
        raise ValueError(f"unknown shape kind {kind!r}")
    prof = SupportProfile(n, a, N)
    u = prof.values()
    if np.any(u <= 0):
        # the origin must be inside; callers may recenter first
        j = int(np.flatnonzero(u <= 0)[0])
        raise ConvexityError(f"support function not positive at node {j}", node=j)
    radii(prof)
    return prof


def steiner_offset(profile: SupportProfile) -> float:
    _, row = sphere_quadrature(profile.n, profile.M)
    return float(row @ profile.coeffs)


def mean_support(profile: SupportProfile) -> float:
    row, _ = sphere_quadrature(profile.n, profile.M)
    return float(row @ profile.coeffs)


def steiner_recenter(profile: SupportProfile):
    z = steiner_offset(profile)
    c = profile.coeffs.copy()
    if c.size > 1:
        c[1] -= z
    return profile.with_coeffs(c), z


def radius_bounds(profile: SupportProfile):
    """Support min/max over nodes: inradius/circumradius proxies about the origin."""
    u = profile.values()
    return float(u.min()), float(u.max())


def embed_profile(profile: SupportProfile, theta=None):
    """Generating curve ``(z, rho)`` at the given normal angles (default: nodes)."""
    if theta is None:
        theta = profile.theta
        u = profile.values()
        du = profile.derivative()
    else:
        theta = np.asarray(theta, dtype=float)
        m = np.arange(profile.M + 1)
        u = np.cos(np.multiply.outer(theta, m)) @ profile.coeffs
        du = -(np.sin(np.multiply.outer(theta, m)) * m) @ profile.coeffs
    z = u * np.cos(theta) - du * np.sin(theta)
    rho = u * np.sin(theta) + du * np.cos(theta)
    return np.stack([z, rho], axis=-1)
