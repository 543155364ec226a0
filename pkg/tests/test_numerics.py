import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from becsync.numerics import (EigenConvergenceError, IntegrationError, Measure, PolarGrid,
                              TridiagSym, gauss_legendre, integrate_ode, log_gamma,
                              polar_quadrature, tridiag_eigen)


# --- integrate_ode --------------------------------------------------------

def test_harmonic_oscillator_matches_closed_form():
    w = 1.7
    out = integrate_ode(lambda t, y: np.array([y[1], -w * w * y[0]]), [1.0, 0.0], (0, 20),
                        rel_tol=1e-12, samples=401)
    assert out.y.shape == (401, 2)
    assert out.t[0] == 0 and out.t[-1] == 20
    np.testing.assert_allclose(out.y[:, 0].real, np.cos(w * out.t), atol=1e-9)


def test_complex_linear_system_and_backward_span():
    lam = -0.3 + 2j
    fwd = integrate_ode(lambda t, y: lam * y, [1.0], (0, 5), rel_tol=1e-12)
    assert abs(fwd.y[-1, 0] - np.exp(5 * lam)) < 1e-10
    back = integrate_ode(lambda t, y: lam * y, fwd.y[-1], (5, 0), rel_tol=1e-12)
    assert abs(back.y[-1, 0] - 1.0) < 1e-9


def test_degenerate_span_returns_constant_samples():
    out = integrate_ode(lambda t, y: y, [2.0], (1.0, 1.0), samples=3)
    assert np.all(out.y == 2.0)


@pytest.mark.parametrize("tol", [1e-15, 1e-3])
def test_rel_tol_range_enforced(tol):
    with pytest.raises(ValueError, match="rel_tol"):
        integrate_ode(lambda t, y: y, [1.0], (0, 1), rel_tol=tol)


def test_samples_and_span_validated():
    with pytest.raises(ValueError):
        integrate_ode(lambda t, y: y, [1.0], (0, 1), samples=1)
    with pytest.raises(ValueError):
        integrate_ode(lambda t, y: y, [1.0], (0, np.inf))


def test_blowup_reports_failure_time():
    # y' = y^2 from y(0) = 1 diverges at t = 1
    with pytest.raises(IntegrationError) as err:
        integrate_ode(lambda t, y: y * y, [1.0], (0, 2), rel_tol=1e-8)
    assert 0.5 < err.value.time <= 1.0 + 1e-6


def test_nonfinite_derivative_raises():
    with pytest.raises(IntegrationError):
        integrate_ode(lambda t, y: np.array([np.nan]), [1.0], (0, 1))


# --- tridiagonal eigenproblem ---------------------------------------------

def _random_tridiag(rng, n, scale=1.0):
    return TridiagSym(scale * rng.normal(size=n), scale * rng.normal(size=n - 1))


def _check_eig(h, tol_val=1e-12):
    eig = tridiag_eigen(h)
    ref = np.linalg.eigvalsh(h.to_dense())
    scale = max(h.norm(), 1.0)
    np.testing.assert_allclose(eig.values, ref, atol=tol_val * scale)
    v = eig.vectors
    np.testing.assert_allclose(v.T @ v, np.eye(h.dim), atol=1e-13)
    resid = h.to_dense() @ v - v * eig.values
    assert np.abs(resid).max() < 1e-11 * scale
    assert np.all(np.diff(eig.values) >= 0)
    return eig


@pytest.mark.parametrize("n", [1, 2, 3, 10, 57, 200])
def test_eigen_matches_dense_oracle(n):
    _check_eig(_random_tridiag(np.random.default_rng(n), n))


def test_characteristic_polynomial_roots_small():
    h = TridiagSym([1.0, -2.0, 0.5, 3.0], [0.7, 1.1, -0.4])
    roots = np.sort(np.roots(np.poly(h.to_dense())).real)
    np.testing.assert_allclose(tridiag_eigen(h).values, roots, atol=1e-12)


def test_wilkinson_matrix_close_pairs():
    # W21+: eigenvalue pairs agree to ~1e-13 relative; vectors must stay orthogonal
    d = np.abs(np.arange(-10, 11, dtype=float))
    eig = _check_eig(TridiagSym(d, np.ones(20)))
    assert eig.values[-1] - eig.values[-2] < 1e-12


def test_split_and_repeated_blocks():
    # zero couplings split the matrix; identical blocks give exact degeneracies
    d = np.array([1.0, 2.0, 1.0, 2.0, 5.0])
    e = np.array([0.5, 0.0, 0.5, 0.0])
    _check_eig(TridiagSym(d, e))


def test_diagonal_matrix_gives_permutation():
    eig = tridiag_eigen(TridiagSym([3.0, -1.0, 2.0], [0.0, 0.0]))
    np.testing.assert_array_equal(eig.values, [-1.0, 2.0, 3.0])
    np.testing.assert_array_equal(np.abs(eig.vectors), np.eye(3)[:, [1, 2, 0]])


def test_multiple_eigenvalue_identity_like():
    _check_eig(TridiagSym(np.full(8, 2.5), np.zeros(7)))


def test_eigen_tol_validated():
    h = TridiagSym([1.0, 2.0], [0.1])
    with pytest.raises(ValueError):
        tridiag_eigen(h, tol=1e-6)


def test_tridiag_validation_and_matvec():
    with pytest.raises(ValueError):
        TridiagSym([1.0, 2.0], [0.1, 0.2])
    with pytest.raises(ValueError):
        TridiagSym([1.0, np.nan], [0.1])
    h = _random_tridiag(np.random.default_rng(3), 6)
    x = np.random.default_rng(4).normal(size=(6, 2))
    np.testing.assert_allclose(h.matvec(x), h.to_dense() @ x, atol=1e-14)
    np.testing.assert_allclose(h.matvec(x[:, 0]), h.to_dense() @ x[:, 0], atol=1e-14)


def test_eigen_convergence_error_is_runtime_error():
    assert issubclass(EigenConvergenceError, RuntimeError)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 30), st.integers(0, 10_000), st.floats(1e-3, 1e3))
def test_eigen_property_random_scales(n, seed, scale):
    _check_eig(_random_tridiag(np.random.default_rng(seed), n, scale), tol_val=1e-11)


# --- quadrature, gamma ----------------------------------------------------

def test_gauss_legendre_polynomial_exactness_and_cache_isolation():
    x, w = gauss_legendre(8, 0.0, 2.0)
    assert abs(np.sum(w * x ** 15) - 2.0 ** 16 / 16) < 1e-9
    x[:] = 0.0
    assert gauss_legendre(8, 0.0, 2.0)[0][0] > 0


@pytest.mark.parametrize("k", [0, 1, 3, 7])
def test_standard_grid_moments(k):
    g = PolarGrid(r_max=9.0, n_r=120, n_theta=8)
    val = polar_quadrature(lambda r, th: np.exp(-r * r) * r ** (2 * k), g)
    assert abs(val - math.factorial(k)) < 1e-9 * math.factorial(k)


@pytest.mark.parametrize("k", [0, 2, 5])
def test_paper_grid_moments_are_half_integer_gammas(k):
    g = PolarGrid(r_max=9.0, n_r=120, n_theta=8, measure="paper")
    val = polar_quadrature(lambda r, th: np.exp(-r * r) * r ** (2 * k), g)
    assert abs(val - math.gamma(k + 0.5)) < 1e-9


def test_polar_quadrature_accepts_samples_and_angles():
    g = PolarGrid(r_max=6.0, n_r=60, n_theta=32)
    r, th = g.r[:, None], g.theta[None, :]
    samples = np.exp(-r * r) * (1 + np.cos(th))
    assert abs(polar_quadrature(samples, g) - 1.0) < 1e-10
    with pytest.raises(ValueError):
        polar_quadrature(np.ones((3, 3)), g)


def test_polar_grid_validation_and_helpers():
    with pytest.raises(ValueError):
        PolarGrid(r_max=-1.0)
    g = PolarGrid.for_occupation(15)
    assert g.r_max == 8.0 and g.shape == (240, 128)
    assert g.with_measure(Measure.PAPER).measure is Measure.PAPER
    assert g.refined().n_r == 480
    assert g.describe()["measure"] == "standard"


def test_log_gamma():
    for x in (0.5, 1.0, 7.5, 150.0):
        assert abs(log_gamma(x) - math.lgamma(x)) < 1e-12 * max(1.0, abs(math.lgamma(x)))
    with pytest.raises(ValueError):
        log_gamma(0.0)


# --- remaining worked examples --------------------------------------------

def test_phase_rotation_returns_after_full_turn():
    out = integrate_ode(lambda t, y: -1j * y, [1.0], (0, 2 * np.pi), rel_tol=1e-12)
    assert abs(out.y[-1, 0] - 1) < 1e-9


def test_two_level_eigenvalues():
    eig = tridiag_eigen(TridiagSym([-1.0, 1.0], [1.0]))
    np.testing.assert_allclose(eig.values, [-np.sqrt(2), np.sqrt(2)], atol=1e-15)


def test_three_atom_hamiltonian_against_characteristic_roots():
    from becsync.focksector import QuantumParams, build_hamiltonian
    h = build_hamiltonian(QuantumParams(0.0, 1.0, -0.4, 3))
    roots = np.sort(np.roots(np.poly(h.to_dense())).real)
    np.testing.assert_allclose(tridiag_eigen(h).values, roots, atol=1e-10)


@pytest.mark.parametrize("k", [8, 10])
def test_standard_grid_high_moments(k):
    g = PolarGrid(r_max=8.0, n_r=240, n_theta=8)
    val = polar_quadrature(lambda r, th: np.exp(-r * r) * r ** (2 * k), g)
    assert abs(val - math.factorial(k)) < 1e-7 * math.factorial(k)


def test_log_gamma_special_values_and_recursion():
    assert log_gamma(1.0) == 0.0
    assert abs(log_gamma(0.5) - 0.5 * math.log(math.pi)) < 1e-15
    acc = 0.5 * math.log(math.pi)
    x = 0.5
    while x < 15.5:
        acc += math.log(x)
        x += 1.0
    assert abs(log_gamma(15.5) - acc) < 1e-12
