"""Single-band preference model: spot values, FD oracles, properties."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import log_ndtr, ndtr

from hearfit.errors import ConvergenceError, DomainError
from hearfit.preference import (
    JITTER,
    Comparison,
    Hyperparams,
    best_level,
    fit_hyperparams,
    kernel_matrix,
    laplace_mode,
    laplace_posterior,
    likelihood_grad_hessian,
    log_likelihood,
    log_marginal_laplace,
    posterior_covariance,
)


def random_comparisons(rng, n_levels, m):
    out = []
    for _ in range(m):
        a, b = rng.choice(np.arange(1, n_levels + 1), size=2, replace=False)
        out.append(Comparison(int(a), int(b), int(rng.choice([-1, 1]))))
    return out


# --- kernel ------------------------------------------------------------------


def test_kernel_unit_diagonal():
    K = kernel_matrix(8, 3.7)
    assert np.allclose(np.diag(K), 1.0)


def test_kernel_spot_value():
    # lam = 2, |i-j| = 2: exp(-4 / (2*2)) = exp(-1)
    K = kernel_matrix(8, 2.0)
    assert K[0, 2] == pytest.approx(math.exp(-1.0), abs=1e-12)


def test_kernel_symmetric_and_bounded():
    K = kernel_matrix(6, 0.5)
    assert np.array_equal(K, K.T)
    assert np.all((K > 0) & (K <= 1))


def test_kernel_rejects_bad_args():
    with pytest.raises(DomainError):
        kernel_matrix(8, 0.0)
    with pytest.raises(DomainError):
        kernel_matrix(1, 1.0)


# --- likelihood --------------------------------------------------------------


def test_log_likelihood_constant_f():
    f = np.full(8, 3.3)
    ll = log_likelihood(f, [Comparison(1, 5, 1)], sigma=0.7)
    assert ll == pytest.approx(math.log(0.5), abs=1e-12)


def test_log_likelihood_unit_argument():
    # d (f_a - f_b) / (sqrt 2 sigma) = 1  ->  log Phi(1)
    f = np.zeros(8)
    f[0] = math.sqrt(2.0)
    ll = log_likelihood(f, [Comparison(1, 2, 1)], sigma=1.0)
    assert ll == pytest.approx(math.log(ndtr(1.0)), abs=1e-10)
    assert ll == pytest.approx(-0.172753, abs=1e-6)


def test_log_likelihood_empty():
    assert log_likelihood(np.zeros(8), [], sigma=1.0) == 0.0


def test_log_likelihood_stable_for_confident_mistakes():
    f = np.zeros(8)
    f[0] = 60.0
    ll = log_likelihood(f, [Comparison(1, 2, -1)], sigma=1.0)
    assert math.isfinite(ll) and ll < -100


def test_probit_symmetry():
    rng = np.random.default_rng(0)
    f = rng.standard_normal(8)
    for c in random_comparisons(rng, 8, 20):
        z = c.d * (f[c.a - 1] - f[c.b - 1]) / (math.sqrt(2) * 0.6)
        p_plus = math.exp(log_ndtr(z))
        p_minus = math.exp(log_ndtr(-z))
        assert p_plus + p_minus == pytest.approx(1.0, abs=1e-12)


def test_noise_monotonicity():
    f = np.zeros(8)
    f[2] = 1.0
    c = Comparison(3, 6, 1)
    prev = math.inf
    for sigma in (0.1, 0.5, 1.0, 4.0):
        p = math.exp(log_likelihood(f, [c], sigma))
        dev = abs(p - 0.5)
        assert dev <= prev + 1e-12
        prev = dev


# --- gradient / Hessian vs finite differences --------------------------------


def fd_gradient(f, comparisons, sigma, h=1e-5):
    g = np.zeros_like(f)
    for i in range(f.size):
        fp, fm = f.copy(), f.copy()
        fp[i] += h
        fm[i] -= h
        g[i] = (log_likelihood(fp, comparisons, sigma) - log_likelihood(fm, comparisons, sigma)) / (2 * h)
    return g


def fd_hessian(f, comparisons, sigma, h=1e-4):
    n = f.size
    H = np.zeros((n, n))
    for i in range(n):
        fp, fm = f.copy(), f.copy()
        fp[i] += h
        fm[i] -= h
        gp = fd_gradient(fp, comparisons, sigma)
        gm = fd_gradient(fm, comparisons, sigma)
        H[:, i] = (gp - gm) / (2 * h)
    return (H + H.T) / 2.0


def test_gradient_spot_value():
    grad, _ = likelihood_grad_hessian(np.zeros(8), [Comparison(1, 2, 1)], sigma=1.0)
    expected = 1.0 / math.sqrt(2.0 * math.pi) / 0.5 / math.sqrt(2.0)
    assert grad[0] == pytest.approx(expected, abs=1e-9)
    assert grad[1] == pytest.approx(-expected, abs=1e-9)
    assert expected == pytest.approx(0.564190, abs=1e-6)


def test_empty_data_gradient_hessian():
    grad, W = likelihood_grad_hessian(np.zeros(8), [], sigma=1.0)
    assert np.all(grad == 0) and np.all(W == 0)


def test_gradient_hessian_match_finite_differences():
    rng = np.random.default_rng(42)
    for _ in range(25):
        n = int(rng.integers(3, 9))
        f = rng.standard_normal(n)
        sigma = float(rng.uniform(0.2, 2.0))
        comps = random_comparisons(rng, n, int(rng.integers(1, 12)))
        grad, W = likelihood_grad_hessian(f, comps, sigma)
        g_fd = fd_gradient(f, comps, sigma)
        H_fd = fd_hessian(f, comps, sigma)
        assert np.max(np.abs(grad - g_fd)) <= 1e-5 * max(1.0, np.max(np.abs(g_fd)))
        assert np.max(np.abs(-W - H_fd)) <= 1e-4 * max(1.0, np.max(np.abs(H_fd)))


def test_w_touches_only_pair_entries():
    _, W = likelihood_grad_hessian(np.zeros(8), [Comparison(2, 7, 1)], sigma=1.0)
    nz = {(i, j) for i, j in zip(*np.nonzero(W))}
    assert nz == {(1, 1), (6, 6), (1, 6), (6, 1)}


def test_w_is_psd():
    rng = np.random.default_rng(3)
    f = rng.standard_normal(8)
    _, W = likelihood_grad_hessian(f, random_comparisons(rng, 8, 15), sigma=0.5)
    assert np.min(np.linalg.eigvalsh(W)) >= -1e-10


# --- Laplace mode -------------------------------------------------------------


def stationarity_residual(K, f, comparisons, sigma):
    Kj = K + JITTER * np.eye(K.shape[0])
    grad, _ = likelihood_grad_hessian(f, comparisons, sigma)
    return float(np.max(np.abs(-np.linalg.solve(Kj, f) + grad)))


def test_laplace_empty_data_is_zero():
    f = laplace_mode(kernel_matrix(8, 2.0), [], sigma=1.0)
    assert np.all(f == 0)


def test_laplace_single_comparison_orders_levels():
    f = laplace_mode(kernel_matrix(8, 2.0), [Comparison(1, 2, 1)], sigma=1.0)
    assert f[0] > f[1]


def test_laplace_mirror_invariance():
    rng = np.random.default_rng(7)
    comps = random_comparisons(rng, 8, 10)
    mirrored = [Comparison(c.b, c.a, -c.d) for c in comps]
    K = kernel_matrix(8, 1.5)
    f1 = laplace_mode(K, comps, sigma=0.8)
    f2 = laplace_mode(K, mirrored, sigma=0.8)
    assert np.allclose(f1, f2, atol=1e-8)


def test_laplace_stationarity_random_instances():
    rng = np.random.default_rng(11)
    for _ in range(20):
        n = int(rng.integers(3, 9))
        lam = float(rng.uniform(0.2, 8.0))
        sigma = float(rng.uniform(0.1, 3.0))
        comps = random_comparisons(rng, n, int(rng.integers(1, 20)))
        K = kernel_matrix(n, lam)
        f = laplace_mode(K, comps, sigma)
        assert stationarity_residual(K, f, comps, sigma) <= 1e-6


def test_laplace_warm_start_agrees_with_cold():
    rng = np.random.default_rng(13)
    comps = random_comparisons(rng, 8, 12)
    K = kernel_matrix(8, 2.0)
    cold = laplace_mode(K, comps, sigma=0.7)
    warm = laplace_mode(K, comps, sigma=0.7, f_init=cold + rng.normal(0, 0.3, 8))
    assert np.allclose(cold, warm, atol=1e-5)


def test_laplace_nonconvergence_raises():
    K = kernel_matrix(8, 2.0)
    with pytest.raises(ConvergenceError) as exc:
        laplace_mode(K, [Comparison(1, 2, 1)], sigma=0.5, max_iter=1, tol=1e-14)
    assert exc.value.residual > 0


# --- posterior covariance -----------------------------------------------------


def test_covariance_prior_recovery():
    K = kernel_matrix(8, 2.0)
    assert np.allclose(posterior_covariance(K, np.zeros((8, 8))), K, atol=1e-10)


def test_covariance_symmetric_and_shrinking():
    rng = np.random.default_rng(5)
    K = kernel_matrix(8, 3.0)
    f = rng.standard_normal(8)
    _, W = likelihood_grad_hessian(f, random_comparisons(rng, 8, 20), sigma=0.4)
    cov = posterior_covariance(K, W)
    assert np.allclose(cov, cov.T, atol=1e-10)
    assert np.all(np.diag(cov) <= np.diag(K) + 1e-10)
    assert np.min(np.linalg.eigvalsh(cov)) > 0


def test_laplace_posterior_bundle():
    rng = np.random.default_rng(6)
    comps = random_comparisons(rng, 8, 8)
    post = laplace_posterior(kernel_matrix(8, 2.0), comps, sigma=1.0)
    assert post.mode.shape == (8,)
    assert post.covariance.shape == (8, 8)


# --- evidence ------------------------------------------------------------------


def reference_evidence(comparisons, n_levels, hp):
    """Independent dense reimplementation of the Laplace evidence."""
    K = kernel_matrix(n_levels, hp.lam) + JITTER * np.eye(n_levels)
    f = np.zeros(n_levels)
    Kinv = np.linalg.inv(K)
    for _ in range(200):
        grad, W = likelihood_grad_hessian(f, comparisons, hp.sigma)
        step = np.linalg.solve(Kinv + W, W @ f + grad) - f
        t = 1.0

        def obj(v):
            return log_likelihood(v, comparisons, hp.sigma) - 0.5 * v @ Kinv @ v

        while obj(f + t * step) < obj(f) and t > 1e-8:
            t /= 2
        f = f + t * step
        if np.max(np.abs(-Kinv @ f + grad)) < 1e-10:
            break
    _, W = likelihood_grad_hessian(f, comparisons, hp.sigma)
    fit = log_likelihood(f, comparisons, hp.sigma)
    quad = 0.5 * f @ Kinv @ f
    complexity = 0.5 * math.log(np.linalg.det(np.eye(n_levels) + kernel_matrix(n_levels, hp.lam) @ W))
    return fit - quad - complexity


def test_evidence_empty_data_zero():
    assert log_marginal_laplace([], 8, Hyperparams(2.0, 1.0)) == 0.0


def test_evidence_large_sigma_limit():
    val = log_marginal_laplace([Comparison(1, 5, 1)], 8, Hyperparams(2.0, 500.0))
    assert val == pytest.approx(math.log(0.5), abs=1e-3)


def test_evidence_matches_independent_reimplementation():
    rng = np.random.default_rng(21)
    comps = random_comparisons(rng, 8, 14)
    for lam in (0.3, 1.0, 4.0):
        for sigma in (0.2, 0.8, 3.0):
            hp = Hyperparams(lam, sigma)
            ours = log_marginal_laplace(comps, 8, hp)
            ref = reference_evidence(comps, 8, hp)
            assert ours == pytest.approx(ref, abs=1e-6)


# --- hyperparameter fit ---------------------------------------------------------


def test_fit_within_bounds_and_ascent():
    rng = np.random.default_rng(30)
    comps = random_comparisons(rng, 8, 20)
    init = Hyperparams(2.0, 1.0)
    hp = fit_hyperparams(comps, 8, init=init)
    assert 0.1 <= hp.lam <= 10.0 and 0.05 <= hp.sigma <= 10.0
    assert log_marginal_laplace(comps, 8, hp) >= log_marginal_laplace(comps, 8, init) - 1e-12


def test_fit_empty_data_returns_valid_point():
    hp = fit_hyperparams([], 8)
    assert 0.1 <= hp.lam <= 10.0 and 0.05 <= hp.sigma <= 10.0


# --- best level ------------------------------------------------------------------


def test_best_level_examples():
    assert best_level(np.array([0.1, 0.9, 0.3, 0.2, 0.0, 0.0, 0.0, 0.0])) == 2
    assert best_level(np.zeros(8)) == 1


def test_best_level_empty_rejected():
    with pytest.raises(DomainError):
        best_level(np.array([]))


# --- hypothesis properties --------------------------------------------------------


@st.composite
def comparison_sets(draw, n_levels=8, max_m=12):
    m = draw(st.integers(0, max_m))
    comps = []
    for _ in range(m):
        a = draw(st.integers(1, n_levels))
        b = draw(st.integers(1, n_levels).filter(lambda v, a=a: v != a))
        d = draw(st.sampled_from([-1, 1]))
        comps.append(Comparison(a, b, d))
    return comps


@given(comparison_sets(), st.floats(0.1, 5.0))
@settings(max_examples=40, deadline=None)
def test_property_likelihood_nonpositive(comps, sigma):
    f = np.linspace(-1, 1, 8)
    assert log_likelihood(f, comps, sigma) <= 0.0


@given(comparison_sets(max_m=8), st.floats(0.2, 3.0), st.floats(0.2, 8.0))
@settings(max_examples=25, deadline=None)
def test_property_laplace_stationary(comps, sigma, lam):
    K = kernel_matrix(8, lam)
    f = laplace_mode(K, comps, sigma)
    assert stationarity_residual(K, f, comps, sigma) <= 1e-6


@given(
    st.lists(st.integers(-20, 20).map(lambda v: v / 2.0), min_size=2, max_size=12),
    st.integers(-40, 40).map(lambda v: v / 2.0),
)
@settings(max_examples=50, deadline=None)
def test_property_best_level_shift_invariant(values, c):
    # Half-integer grids keep the shift exact in floating point; unconstrained
    # floats can collapse distinct values when a large constant is added.
    f = np.array(values)
    assert best_level(f) == best_level(f + c)


def test_comparison_validation():
    with pytest.raises(DomainError):
        Comparison(3, 3, 1)
    with pytest.raises(DomainError):
        Comparison(1, 2, 0)
    with pytest.raises(DomainError):
        Hyperparams(-1.0, 1.0)
