import numpy as np
import pytest
from hypothesis import given, strategies as st

from curvflow.curvature import ArithmeticMean, GeometricMean, RootMeanSquare, builtin_speeds
from curvflow.flow import make_state, step
from curvflow.geometry import make_profile
from curvflow.oracles import (SymmetricTensor3, chainrule_consistency, eigen_perturbation_form,
                              estimate_mu, fd_check_gradient, fd_check_hessian, gradient_inequality_suite,
                              identity_suite_37, pinched_samples, run_verify, second_form_check,
                              symmetrize3, tight_pinch_suite, umbilic_perturbations)
from curvflow.speeds import PowerSum


# ------------------------------------------------------------ tensors

def test_symmetric_tensor_rejects_asymmetry(rng):
    with pytest.raises(ValueError):
        SymmetricTensor3(rng.standard_normal((3, 3, 3)))
    with pytest.raises(ValueError):
        SymmetricTensor3(np.zeros((2, 3, 3)))
    T = SymmetricTensor3.random(3, rng)
    assert np.allclose(symmetrize3(T.entries), T.entries)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_trace_gradient_equality_case(n, rng):
    """T = sym(g (x) v) attains |T|^2 = 3/(n+2) |tr T|^2."""
    v = rng.standard_normal(n)
    eye = np.eye(n)
    T = (np.einsum("ij,k->ijk", eye, v) + np.einsum("jk,i->ijk", eye, v) + np.einsum("ik,j->ijk", eye, v))
    T = SymmetricTensor3(T)
    assert np.allclose(T.trace(), (n + 2) * v)
    assert T.norm2() == pytest.approx(3 / (n + 2) * (T.trace() ** 2).sum(), rel=1e-13)


# ------------------------------------------------------------ finite differences

@pytest.mark.parametrize("f", builtin_speeds(), ids=lambda f: f.kind)
@pytest.mark.parametrize("n", [2, 3, 4])
def test_fd_checks_pass_for_builtins(f, n, rng):
    k = np.exp(rng.uniform(0, np.log(4), (200, n)))
    assert fd_check_gradient(f, k) < 1e-6
    assert fd_check_hessian(f, k) < 1e-5
    assert second_form_check(f, n, 10) < 1e-5


class _BrokenMean(ArithmeticMean):
    def _grad(self, k):
        return 1.01 * super()._grad(k)


def test_fd_detects_wrong_gradient():
    assert fd_check_gradient(_BrokenMean(), [[1.0, 2.0]]) > 1e-3


def test_fd_rejects_outside_cone():
    with pytest.raises(ValueError):
        fd_check_gradient(GeometricMean(), [[1.0, -1.0]])


def test_eigen_form_linear_is_zero(rng):
    B = rng.standard_normal((3, 3))
    B = B + B.T
    assert abs(eigen_perturbation_form(ArithmeticMean(), [1.0, 2.0, 3.0], B)) < 1e-6


def test_eigen_form_rms_diagonal():
    """f = |k|/sqrt(n) along B = diag(1, 0): second derivative k2^2 / (sqrt(n) |k|^3)."""
    k = np.array([1.0, 2.0])
    expect = 4.0 / (np.sqrt(2) * 5 ** 1.5)
    assert eigen_perturbation_form(RootMeanSquare(), k, np.diag([1.0, 0.0])) == pytest.approx(expect, rel=1e-7)


# ------------------------------------------------------------ samplers and identities

@given(st.integers(2, 6), st.floats(0.0, 0.15))
def test_pinched_samples_cone(n, eps):
    eps = min(eps, 0.99 / n)
    k = pinched_samples(50, n, eps, np.random.default_rng(1))
    assert np.allclose(k.sum(axis=1), 1.0)
    assert np.all(k >= eps - 1e-15)


def test_pinched_samples_range():
    with pytest.raises(ValueError):
        pinched_samples(3, 2, 0.6, np.random.default_rng(0))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_umbilic_perturbations_exact(n):
    rng = np.random.default_rng(3)
    ratios = rng.uniform(0, 1 / (n * (n - 1)), 100)
    k = umbilic_perturbations(100, n, ratios, rng)
    H = k.sum(axis=1)
    assert np.allclose(H, n, rtol=1e-14)
    a0 = (k**2).sum(axis=1) - H**2 / n
    assert np.allclose(a0 / H**2, ratios, atol=1e-14)


def test_identity_example():
    """kappa = (1, 2): H C - |A|^4 = 2 and n C - H |A|^2 = 3."""
    k = np.array([1.0, 2.0])
    H, A2, C = k.sum(), (k**2).sum(), (k**3).sum()
    assert H * C - A2**2 == pytest.approx(2.0)
    assert 2 * C - H * A2 == pytest.approx(3.0)


@pytest.mark.parametrize("n", [2, 3, 4, 6])
def test_identity_suite_passes(n):
    rep = identity_suite_37(2000, n, 0.05, seed=n)
    assert rep.passed, rep.worst
    assert set(rep.checks) == {"i_identity", "i_lower_bound", "ii_identity", "ii_lower_bound", "iii_inequality"}


@pytest.mark.parametrize("n", [2, 3, 4])
def test_gradient_suite(n):
    rep = gradient_inequality_suite(2000, n, seed=n)
    assert rep.passed
    assert rep.checks["second_symmetrized"] is None


@pytest.mark.parametrize("n", [2, 3])
def test_tight_pinch_suite(n):
    assert tight_pinch_suite(2000, n, seed=n).passed


def test_suites_are_seeded():
    a = identity_suite_37(300, 3, seed=7).as_dict()
    b = identity_suite_37(300, 3, seed=7).as_dict()
    assert a == b


# ------------------------------------------------------------ mu

def test_mu_vanishes_for_mean_curvature():
    est = estimate_mu(ArithmeticMean(), 3, 0.1, count=500)
    assert est.mu == pytest.approx(0.0, abs=1e-12)
    assert est.samples > 0


@pytest.mark.parametrize("f", [GeometricMean(), RootMeanSquare()], ids=lambda f: f.kind)
def test_mu_nondecreasing_in_sigma(f):
    vals = [estimate_mu(f, 2, s, count=1000, seed=4).mu for s in (0.01, 0.05, 0.2, 0.5)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert vals[0] > 0


def test_mu_empty_window():
    assert estimate_mu(GeometricMean(), 2, 0.0, count=50).samples == 0


# ------------------------------------------------------------ chain rule

def test_chainrule_first_order():
    f, phi = GeometricMean(), PowerSum([(1, 1), (1, 3)])
    state = make_state(make_profile({"kind": "perturbed_sphere", "eps": 0.05, "m": 2}, 2, 16))
    devs = []
    for dt in (1e-3, 5e-4, 2.5e-4):
        after = step(state, dt, f, phi)
        devs.append(chainrule_consistency(state.profile, after.profile, dt, f, phi))
    assert devs[0] / devs[1] == pytest.approx(2.0, rel=0.05)
    assert devs[1] / devs[2] == pytest.approx(2.0, rel=0.05)


def test_chainrule_sphere_exact_direction():
    f, phi = GeometricMean(), PowerSum([(1, 1)])
    state = make_state(make_profile({"kind": "sphere"}, 3, 8))
    after = step(state, 1e-6, f, phi)
    assert chainrule_consistency(state.profile, after.profile, 1e-6, f, phi) < 1e-5
    with pytest.raises(ValueError):
        chainrule_consistency(state.profile, after.profile, 0.0, f, phi)


# ------------------------------------------------------------ aggregate

def test_run_verify_small():
    rep = run_verify(seed=1, fd_samples=50, suite_samples=300)
    assert rep["passed"]
    names = {s["name"] for s in rep["suites"]}
    assert names == {"finite_differences", "identity_suite_37", "gradient_inequality_suite", "tight_pinch_suite"}
