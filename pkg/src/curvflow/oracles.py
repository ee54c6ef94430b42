"""Independent oracles and property suites for the curvature algebra.

Nothing here reuses the analytic derivative code it checks: gradients and
Hessians are compared with finite-difference stencils on ``f.value`` only,
the matrix second derivative with eigenvalue perturbation, and the spectral
radius operator with a scipy DCT.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import fft

from .curvature import SpeedFunction, builtin_speeds, second_derivative_form
from .geometry import SupportProfile
from .speeds import PhiProfile

REL_EXACT = 1e-12


# ---------------------------------------------------------------- tensors

@dataclass(frozen=True)
class SymmetricTensor3:
    """Totally symmetric ``T_ijk``; stands in for a Codazzi-symmetric gradient."""

    entries: np.ndarray

    def __post_init__(self):
        T = np.asarray(self.entries, dtype=float)
        if T.ndim != 3 or len(set(T.shape)) != 1:
            raise ValueError("need an n x n x n array")
        for perm in ((1, 0, 2), (0, 2, 1), (2, 1, 0)):
            if not np.allclose(T, T.transpose(perm), rtol=0, atol=1e-14 * max(1.0, np.abs(T).max())):
                raise ValueError("tensor is not totally symmetric")
        object.__setattr__(self, "entries", T)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> np.ndarray:
        return np.einsum("ikk->i", self.entries)

    def norm2(self) -> float:
        return float((self.entries**2).sum())

    @classmethod
    def random(cls, n: int, rng) -> "SymmetricTensor3":
        return cls(symmetrize3(rng.standard_normal((n, n, n))))


def symmetrize3(T):
    """Average over the six index permutations of the last three axes."""
    perms = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
    lead = T.ndim - 3
    out = np.zeros_like(T)
    for p in perms:
        out = out + T.transpose(tuple(range(lead)) + tuple(lead + q for q in p))
    return out / 6.0


def random_symmetric3(count: int, n: int, rng) -> np.ndarray:
    return symmetrize3(rng.standard_normal((count, n, n, n)))


# ------------------------------------------------------- finite differences

def _fd_gradient(f: SpeedFunction, k, h_step):
    k = np.atleast_2d(np.asarray(k, dtype=float))
    m, n = k.shape
    h = h_step * k.min(axis=1)
    out = np.empty_like(k)
    for i in range(n):
        kp, km = k.copy(), k.copy()
        kp[:, i] += h
        km[:, i] -= h
        # use the step actually represented in floating point
        out[:, i] = (f.value(kp) - f.value(km)) / (kp[:, i] - km[:, i])
    return out


def fd_check_gradient(f: SpeedFunction, kappa, h_step: float = 1e-5) -> float:
    """Largest error of the analytic gradient against central differences.

    Errors are relative to the largest gradient component of each sample.
    ``kappa`` may hold one curvature vector or a batch.
    """
    k = np.atleast_2d(np.asarray(kappa, dtype=float))
    if np.any(k <= 0):
        raise ValueError("kappa must lie in the positive cone")
    g = f.grad(k)
    fd = _fd_gradient(f, k, h_step)
    scale = np.abs(g).max(axis=1)
    return float((np.abs(fd - g).max(axis=1) / scale).max())


def _fd_hessian(f: SpeedFunction, k, h_step):
    k = np.atleast_2d(np.asarray(k, dtype=float))
    m, n = k.shape
    h = h_step * k.min(axis=1)
    f0 = f.value(k)
    out = np.empty((m, n, n))

    def shifted(i, si, j, sj):
        kk = k.copy()
        kk[:, i] += si * h
        kk[:, j] += sj * h
        return f.value(kk)

    for i in range(n):
        out[:, i, i] = (shifted(i, 1, i, 0) - 2 * f0 + shifted(i, -1, i, 0)) / h**2
        for j in range(i + 1, n):
            v = (shifted(i, 1, j, 1) - shifted(i, 1, j, -1)
                 - shifted(i, -1, j, 1) + shifted(i, -1, j, -1)) / (4 * h**2)
            out[:, i, j] = out[:, j, i] = v
    return out


def fd_check_hessian(f: SpeedFunction, kappa, h_step: float = 1e-4) -> float:
    """Largest Hessian error against a second-order central stencil.

    The error is scaled by ``max(|Hess|, f/kappa_max**2)`` per sample, the
    natural size of the second derivative of a degree-one function; this keeps
    linear speeds (zero Hessian) well defined.
    """
    k = np.atleast_2d(np.asarray(kappa, dtype=float))
    H = f.hess(k)
    fd = _fd_hessian(f, k, h_step)
    scale = np.maximum(np.abs(H).max(axis=(1, 2)), f.value(k) / k.max(axis=1) ** 2)
    return float((np.abs(fd - H).max(axis=(1, 2)) / scale).max())


def eigen_perturbation_form(f: SpeedFunction, kappa, B, s_step: float = 1e-3) -> float:
    """``d^2/ds^2 f(eig(diag(kappa) + sB))`` at 0 from symmetric eigenvalues.

    Fourth-order central stencil on the matrix function itself, so it shares
    nothing with the closed-form second derivative.
    """
    k = np.asarray(kappa, dtype=float)
    B = np.asarray(B, dtype=float)
    h = s_step * k.min() / max(np.abs(B).max(), 1e-300)
    D = np.diag(k)

    def F(s):
        return float(f.value(np.linalg.eigvalsh(D + s * B)))

    return (-F(2 * h) + 16 * F(h) - 30 * F(0.0) + 16 * F(-h) - F(-2 * h)) / (12 * h * h)


def second_form_check(f: SpeedFunction, n: int, count: int, seed: int = 0) -> float:
    """Worst relative gap between the closed form and the eigenvalue oracle."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        k = np.exp(rng.uniform(0.0, math.log(3.0), n))
        B = rng.standard_normal((n, n))
        B = 0.5 * (B + B.T)
        B /= np.linalg.norm(B)
        exact = second_derivative_form(f, k, B)
        approx = eigen_perturbation_form(f, k, B)
        scale = max(abs(exact), float(f.value(k)) / k.max() ** 2)
        worst = max(worst, float(abs(exact - approx) / scale))
    return worst


# ------------------------------------------------------------- samplers

def pinched_samples(count: int, n: int, eps: float, rng) -> np.ndarray:
    """Curvatures with ``kappa_min >= eps * H``, ``H = 1``.

    ``kappa = eps H + (1 - n eps) H w`` with ``w`` uniform on the simplex.
    """
    if not 0 <= eps < 1.0 / n:
        raise ValueError("need 0 <= eps < 1/n")
    w = rng.dirichlet(np.ones(n), size=count)
    return eps + (1 - n * eps) * w


def tracefree_directions(count: int, n: int, rng) -> np.ndarray:
    v = rng.standard_normal((count, n))
    v -= v.mean(axis=1, keepdims=True)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def umbilic_perturbations(count: int, n: int, ratios, rng) -> np.ndarray:
    """Curvatures with ``H = n`` and ``|A0|^2 = ratio * H^2`` exactly (up to rounding)."""
    v = tracefree_directions(count, n, rng)
    ratios = np.asarray(ratios, dtype=float)
    # |A0|^2 = |v|^2 * scale^2 when kappa = 1 + scale v
    return 1.0 + (n * np.sqrt(ratios))[:, None] * v


@dataclass
class SuiteReport:
    name: str
    n: int
    samples: int
    checks: dict
    violations: dict
    worst: dict
    passed: bool
    examples: list = field(default_factory=list)

    def as_dict(self):
        return asdict(self)


def _record(checks, violations, worst, examples, name, margin, data, assert_it=True):
    """``margin`` is ``rhs - lhs`` scaled; positive means violated."""
    bad = np.flatnonzero(margin > 0)
    violations[name] = int(bad.size)
    worst[name] = float(margin.max()) if margin.size else 0.0
    checks[name] = bool(bad.size == 0) if assert_it else None
    for j in bad[:3]:
        examples.append({"check": name, "data": np.asarray(data[j]).tolist()})


# ---------------------------------------------------------- identity suite

def identity_suite_37(count: int, n: int, eps_pinch: float = 0.05, seed: int = 0) -> SuiteReport:
    rng = np.random.default_rng(seed)
    k = pinched_samples(count, n, eps_pinch, rng)
    H = k.sum(axis=1)
    A2 = (k * k).sum(axis=1)
    C = (k**3).sum(axis=1)
    diff = k[:, :, None] - k[:, None, :]
    prod = k[:, :, None] * k[:, None, :]
    iu = np.triu_indices(n, 1)
    A02 = (diff[:, iu[0], iu[1]] ** 2).sum(axis=1) / n

    checks, violations, worst, examples = {}, {}, {}, []
    lhs1 = H * C - A2**2
    rhs1 = (prod * diff**2)[:, iu[0], iu[1]].sum(axis=1)
    _record(checks, violations, worst, examples, "i_identity",
            np.abs(lhs1 - rhs1) / H**4 - REL_EXACT, k)
    _record(checks, violations, worst, examples, "i_lower_bound",
            (n * eps_pinch**2 * H**2 * A02 - rhs1) / H**4 - REL_EXACT, k)

    lhs2 = n * C - H * A2
    summ = k[:, :, None] + k[:, None, :]
    rhs2 = 0.5 * (summ * diff**2).sum(axis=(1, 2))
    _record(checks, violations, worst, examples, "ii_identity",
            np.abs(lhs2 - rhs2) / H**3 - REL_EXACT, k)
    _record(checks, violations, worst, examples, "ii_lower_bound",
            (2 * n * eps_pinch * H * A02 - rhs2) / H**3 - REL_EXACT, k)

    # (iii) with a random symmetric gradient at each pinched point
    T = random_symmetric3(count, n, rng)
    trT = np.einsum("sikk->si", T)
    h = np.zeros((count, n, n))
    h[:, np.arange(n), np.arange(n)] = k
    X = H[:, None, None, None] * T - trT[:, :, None, None] * h[:, None, :, :]
    lhs3 = (X**2).sum(axis=(1, 2, 3))
    rhs3 = 0.5 * (n - 1) * eps_pinch**2 * H**2 * (T**2).sum(axis=(1, 2, 3))
    _record(checks, violations, worst, examples, "iii_inequality",
            (rhs3 - lhs3) / np.maximum(lhs3, rhs3) - REL_EXACT, k)

    return SuiteReport("identity_suite_37", n, count, checks, violations, worst,
                       all(v for v in checks.values() if v is not None), examples)


# --------------------------------------------------- gradient inequalities

def gradient_inequality_suite(count: int, n: int, seed: int = 0) -> SuiteReport:
    rng = np.random.default_rng(seed)
    T = random_symmetric3(count, n, rng)
    trT = np.einsum("sikk->si", T)
    normT = (T**2).sum(axis=(1, 2, 3))
    normtr = (trT**2).sum(axis=1)

    checks, violations, worst, examples = {}, {}, {}, []
    _record(checks, violations, worst, examples, "first",
            (3.0 / (n + 2) * normtr - normT) / normT - REL_EXACT, trT)

    eye = np.eye(n)
    T0 = T - trT[:, :, None, None] * eye[None, None, :, :] / n
    bound = 2.0 * (n - 1) / (3.0 * n) * normT
    _record(checks, violations, worst, examples, "second_unsymmetrized",
            (bound - (T0**2).sum(axis=(1, 2, 3))) / normT - REL_EXACT, trT)
    # reported only: the symmetric projection of T0 is not the Codazzi split
    T0s = symmetrize3(T0)
    _record(checks, violations, worst, examples, "second_symmetrized",
            (bound - (T0s**2).sum(axis=(1, 2, 3))) / normT - REL_EXACT, trT, assert_it=False)
    return SuiteReport("gradient_inequality_suite", n, count, checks, violations, worst,
                       all(v for v in checks.values() if v is not None), examples)


# ------------------------------------------------------------ tight pinch

def tight_pinch_suite(count: int, n: int, seed: int = 0) -> SuiteReport:
    rng = np.random.default_rng(seed)
    eps = rng.uniform(0.0, 1.0 / (n * (n - 1)), count)
    k = umbilic_perturbations(count, n, eps, rng)
    H = k.sum(axis=1)
    A2 = (k * k).sum(axis=1)
    C = (k**3).sum(axis=1)
    root = np.sqrt(n * (n - 1) * eps)

    checks, violations, worst, examples = {}, {}, {}, []
    lo = (1 - root) * H / n
    hi = (1 + root) * H / n
    _record(checks, violations, worst, examples, "i_lower",
            (lo - k.min(axis=1)) / H - REL_EXACT, k)
    _record(checks, violations, worst, examples, "i_upper",
            (k.max(axis=1) - hi) / H - REL_EXACT, k)
    lhs = n * C - (1 + n * eps) * H * A2
    rhs = eps * (1 + n * eps) * (1 - root) * H**3
    _record(checks, violations, worst, examples, "ii",
            (rhs - lhs) / H**3 - REL_EXACT, k)
    # pinching cone h >= eps' H g with eps' = (1 - root) / n
    _record(checks, violations, worst, examples, "pinch_equivalence",
            ((1 - root) / n * H - k.min(axis=1)) / H - REL_EXACT, k)
    return SuiteReport("tight_pinch_suite", n, count, checks, violations, worst,
                       all(v for v in checks.values() if v is not None), examples)


# ----------------------------------------------------------------- mu

@dataclass
class MuEstimate:
    mu_hessian: float
    mu_gradient: float
    mu_value: float
    mu: float
    samples: int
    sigma0: float


def estimate_mu(f: SpeedFunction, n: int, sigma0: float, count: int = 2000, seed: int = 0) -> MuEstimate:
    """Sampled suprema of the three constants for ``Fhat = n f``.

    Ratios ``|A0|^2/H^2`` are drawn from the whole admissible range and then
    filtered, so for a fixed seed the sample sets are nested in ``sigma0``.
    """
    rng = np.random.default_rng(seed)
    ratios = rng.uniform(0.0, 1.0 / (n * (n - 1)), count)
    k_all = umbilic_perturbations(count, n, ratios, rng)
    keep = (ratios <= sigma0) & (k_all.min(axis=1) > 0)
    k = k_all[keep]
    if k.shape[0] == 0:
        return MuEstimate(0.0, 0.0, 0.0, 0.0, 0, sigma0)
    H = k.sum(axis=1)
    A0 = np.sqrt(np.maximum((k * k).sum(axis=1) - H**2 / n, 0.0))
    Fh = n * f.value(k)
    g = n * f.grad(k)
    hs = n * f.hess(k)

    eigs = np.abs(np.linalg.eigvalsh(hs)).max(axis=1)
    offd = np.zeros(k.shape[0])
    for a in range(n):
        for b in range(a + 1, n):
            gap = k[:, a] - k[:, b]
            tied = np.abs(gap) < 1e-7 * k.max(axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                q = np.where(tied, hs[:, a, a] - hs[:, a, b], (g[:, a] - g[:, b]) / gap)
            offd = np.maximum(offd, np.abs(q))
    mu1 = float((H * np.maximum(eigs, offd)).max())
    nz = A0 > 1e-12 * H
    mu2 = float((np.abs(g - 1).max(axis=1)[nz] * H[nz] / A0[nz]).max()) if nz.any() else 0.0
    mu3 = float((2 * np.abs(Fh - H)[nz] * H[nz] / A0[nz] ** 2).max()) if nz.any() else 0.0
    return MuEstimate(mu1, mu2, mu3, max(mu1, mu2, mu3), int(k.shape[0]), sigma0)


# ------------------------------------------------------------ chain rule

def _dct_coeffs(values, M):
    """Cosine coefficients of nodal values on ``j pi / N``, truncated to ``M + 1``."""
    N = values.size - 1
    c = fft.dct(values, type=1) / N
    c[0] *= 0.5
    c[-1] *= 0.5
    return c[: M + 1]


def _meridional_radius(coeffs, theta):
    m = np.arange(coeffs.size)
    return np.cos(np.outer(theta, m)) @ (coeffs * (1 - m**2))


def _rotational_radius(coeffs, theta):
    m = np.arange(coeffs.size)
    u = np.cos(np.outer(theta, m)) @ coeffs
    du = -(np.sin(np.outer(theta, m)) * m) @ coeffs
    out = np.empty_like(theta)
    inner = (theta > 0) & (theta < np.pi)
    out[inner] = u[inner] + du[inner] * np.cos(theta[inner]) / np.sin(theta[inner])
    r1 = _meridional_radius(coeffs, theta)
    out[~inner] = r1[~inner]
    return out


def chainrule_consistency(before: SupportProfile, after: SupportProfile, dt: float,
                          f: SpeedFunction, phi: PhiProfile) -> float:
    """Max gap between the time difference of ``r1`` and ``w'' + w``, ``w = -Phi(f)``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    N, n, M = before.N, before.n, before.M
    theta = np.arange(N + 1) * np.pi / N
    r1a = _meridional_radius(before.coeffs, theta)
    r1b = _meridional_radius(after.coeffs, theta)
    r2a = _rotational_radius(before.coeffs, theta)
    kap = np.empty((N + 1, n))
    kap[:, 0] = 1.0 / r1a
    kap[:, 1:] = (1.0 / r2a)[:, None]
    w = -phi.eval(f.value(kap))[0]
    predicted = _meridional_radius(_dct_coeffs(w, M), theta)
    return float(np.abs((r1b - r1a) / dt - predicted).max())


# ------------------------------------------------------------ aggregate

def run_verify(seed: int = 0, fd_samples: int = 1000, suite_samples: int = 10_000) -> dict:
    """Run every suite and return a JSON-ready pass/fail report."""
    t0 = time.perf_counter()
    report = {"seed": seed, "suites": []}
    rng = np.random.default_rng(seed)

    for f in builtin_speeds():
        for n in (2, 3, 4):
            k = np.exp(rng.uniform(0.0, math.log(4.0), (fd_samples, n)))
            g_err = fd_check_gradient(f, k, 1e-5)
            h_err = fd_check_hessian(f, k, 1e-4)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                s_err = second_form_check(f, n, 50, seed)
            report["suites"].append({
                "name": "finite_differences", "f": f.kind, "n": n, "samples": fd_samples,
                "gradient_error": g_err, "hessian_error": h_err, "second_form_error": s_err,
                "passed": bool(g_err <= 1e-6 and h_err <= 1e-5 and s_err <= 1e-5),
            })

    for n in (2, 3, 4):
        report["suites"].append(identity_suite_37(suite_samples, n, 0.05, seed).as_dict())
        report["suites"].append(gradient_inequality_suite(suite_samples, n, seed).as_dict())
    for n in (2, 3):
        report["suites"].append(tight_pinch_suite(suite_samples, n, seed).as_dict())

    report["passed"] = all(s["passed"] for s in report["suites"])
    report["elapsed_s"] = time.perf_counter() - t0
    return report
