"""Single-band Bayesian preference learning.

A zero-mean Gaussian process prior over a latent utility vector ``f`` on the
discrete adjustment-level grid, a probit likelihood for paired-comparison
feedback, a Laplace (Newton) approximation of the posterior, and bounded
maximum-likelihood estimation of the two hyperparameters (kernel length-scale
``lam`` and feedback noise scale ``sigma``).

All functions here are pure and deterministic; the only tolerance knobs are
module constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, cholesky, eigh
from scipy.optimize import minimize
from scipy.special import log_ndtr

from .errors import ConvergenceError, DomainError, NumericalError, OptimizationError

JITTER = 1e-8
NEWTON_TOL = 1e-6
NEWTON_MAX_ITER = 100
NEWTON_MAX_HALVINGS = 20
_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

DEFAULT_BOUNDS = ((0.1, 10.0), (0.05, 10.0))  # (lam, sigma) boxes
FD_LOG_STEP = 1e-4  # central-difference step in log-parameter space


@dataclass(frozen=True)
class Hyperparams:
    """Kernel length-scale and probit noise scale, both strictly positive."""

    lam: float
    sigma: float

    def __post_init__(self):
        if not (self.lam > 0 and self.sigma > 0):
            raise DomainError(f"hyperparameters must be positive: {self}")


@dataclass(frozen=True)
class Comparison:
    """One paired comparison: levels a vs b, outcome d=+1 iff a preferred."""

    a: int
    b: int
    d: int

    def __post_init__(self):
        if self.a == self.b:
            raise DomainError("comparison requires two distinct levels")
        if self.d not in (-1, 1):
            raise DomainError(f"outcome must be -1 or +1, got {self.d}")


@dataclass(frozen=True)
class Posterior:
    mode: np.ndarray
    covariance: np.ndarray


def kernel_matrix(n_levels: int, lam: float) -> np.ndarray:
    """Squared-exponential kernel on the integer level grid 1..n_levels.

    K[i, j] = exp(-(i - j)^2 / (2 lam)). Unit diagonal; jitter is *not*
    baked in here, callers add ``JITTER * I`` before factorizing.
    """
    if n_levels < 2:
        raise DomainError("n_levels must be >= 2")
    if lam <= 0:
        raise DomainError(f"lam must be positive, got {lam}")
    idx = np.arange(1, n_levels + 1, dtype=float)
    sq = (idx[:, None] - idx[None, :]) ** 2
    return np.exp(-sq / (2.0 * lam))


def _unpack(comparisons: Sequence[Comparison]):
    a = np.fromiter((c.a - 1 for c in comparisons), dtype=np.intp, count=len(comparisons))
    b = np.fromiter((c.b - 1 for c in comparisons), dtype=np.intp, count=len(comparisons))
    d = np.fromiter((c.d for c in comparisons), dtype=float, count=len(comparisons))
    return a, b, d


def _check_indices(f: np.ndarray, comparisons: Sequence[Comparison]):
    n = f.shape[0]
    for c in comparisons:
        if not (1 <= c.a <= n and 1 <= c.b <= n):
            raise DomainError(f"comparison {c} references a level outside 1..{n}")


def _ll_arrays(f, a, b, d, sigma: float) -> float:
    z = d * (f[a] - f[b]) / (_SQRT2 * sigma)
    return float(np.sum(log_ndtr(z)))


def _grad_w_arrays(f, a, b, d, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    n = f.shape[0]
    grad = np.zeros(n)
    W = np.zeros((n, n))
    z = d * (f[a] - f[b]) / (_SQRT2 * sigma)
    # r = phi(z) / Phi(z), computed in log space to survive z << 0.
    r = np.exp(-0.5 * z * z - _LOG_SQRT_2PI - log_ndtr(z))
    c = d * r / (_SQRT2 * sigma)
    np.add.at(grad, a, c)
    np.add.at(grad, b, -c)
    h = (r * r + z * r) / (2.0 * sigma * sigma)  # >= 0 for every z
    np.add.at(W, (a, a), h)
    np.add.at(W, (b, b), h)
    np.add.at(W, (a, b), -h)
    np.add.at(W, (b, a), -h)
    return grad, W


def log_likelihood(f: np.ndarray, comparisons: Sequence[Comparison], sigma: float) -> float:
    """Sum of log Phi(d * (f_a - f_b) / (sqrt(2) sigma)) over the comparisons.

    ``log_ndtr`` keeps the tail evaluation stable for large negative arguments.
    """
    if sigma <= 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    f = np.asarray(f, dtype=float)
    if not comparisons:
        return 0.0
    _check_indices(f, comparisons)
    a, b, d = _unpack(comparisons)
    return _ll_arrays(f, a, b, d, sigma)


def likelihood_grad_hessian(
    f: np.ndarray, comparisons: Sequence[Comparison], sigma: float
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of the log likelihood and W = -Hessian (symmetric PSD).

    Each comparison touches only the four (a, b) cross entries of W.
    """
    if sigma <= 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    f = np.asarray(f, dtype=float)
    n = f.shape[0]
    grad = np.zeros(n)
    W = np.zeros((n, n))
    if not comparisons:
        return grad, W
    _check_indices(f, comparisons)
    a, b, d = _unpack(comparisons)
    return _grad_w_arrays(f, a, b, d, sigma)


def laplace_mode(
    K: np.ndarray,
    comparisons: Sequence[Comparison],
    sigma: float,
    f_init: np.ndarray | None = None,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
) -> np.ndarray:
    """Posterior mode by damped Newton iteration.

    Iterates f_new = (K^-1 + W)^-1 (W f + grad), halving the step while it
    would decrease the log posterior. Converged when the stationarity
    residual ||-K^-1 f + grad||_inf drops below ``tol``.
    """
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    f = np.zeros(n) if f_init is None else np.asarray(f_init, dtype=float).copy()
    if not np.all(np.isfinite(f)):
        raise DomainError("f_init must be finite")
    if not comparisons:
        return np.zeros(n)  # prior mode of the zero-mean GP

    if sigma <= 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    _check_indices(f, comparisons)
    a, b, d = _unpack(comparisons)
    Kj = K + JITTER * np.eye(n)
    try:
        cK = cho_factor(Kj, lower=True)
    except LinAlgError as exc:
        raise NumericalError(f"kernel matrix not factorizable: {exc}") from exc

    def log_posterior(fv: np.ndarray) -> float:
        return _ll_arrays(fv, a, b, d, sigma) - 0.5 * fv @ cho_solve(cK, fv)

    residual = math.inf
    for _ in range(max_iter):
        grad, W = _grad_w_arrays(f, a, b, d, sigma)
        residual = float(np.max(np.abs(-cho_solve(cK, f) + grad)))
        if residual <= tol:
            return f
        # (K^-1 + W) f_new = W f + grad  <=>  (I + K W) f_new = K (W f + grad)
        rhs = Kj @ (W @ f + grad)
        try:
            f_new = np.linalg.solve(np.eye(n) + Kj @ W, rhs)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"Newton system singular: {exc}") from exc
        step = f_new - f
        current = log_posterior(f)
        t = 1.0
        for _ in range(NEWTON_MAX_HALVINGS):
            if log_posterior(f + t * step) >= current:
                break
            t *= 0.5
        f = f + t * step

    grad, _ = _grad_w_arrays(f, a, b, d, sigma)
    residual = float(np.max(np.abs(-cho_solve(cK, f) + grad)))
    if residual <= tol:
        return f
    raise ConvergenceError(
        f"Newton iteration did not converge in {max_iter} steps (residual {residual:.3e})",
        residual=residual,
    )


def _psd_sqrt(W: np.ndarray) -> np.ndarray:
    vals, vecs = eigh(np.asarray(W, dtype=float))
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def posterior_covariance(K: np.ndarray, W: np.ndarray) -> np.ndarray:
    """(K^-1 + W)^-1 without ever inverting K.

    Uses the symmetric form K - K W^1/2 (I + W^1/2 K W^1/2)^-1 W^1/2 K,
    whose inner matrix is well conditioned (eigenvalues >= 1).
    """
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    Ws = _psd_sqrt(W)
    B = np.eye(n) + Ws @ K @ Ws
    try:
        cB = cho_factor((B + B.T) / 2.0, lower=True)
    except LinAlgError as exc:
        raise NumericalError(f"posterior factorization failed: {exc}") from exc
    WsK = Ws @ K
    cov = K - WsK.T @ cho_solve(cB, WsK)
    return (cov + cov.T) / 2.0


def laplace_posterior(
    K: np.ndarray, comparisons: Sequence[Comparison], sigma: float,
    f_init: np.ndarray | None = None,
) -> Posterior:
    """Convenience wrapper bundling the mode and its Laplace covariance."""
    f_hat = laplace_mode(K, comparisons, sigma, f_init=f_init)
    _, W = likelihood_grad_hessian(f_hat, comparisons, sigma)
    return Posterior(mode=f_hat, covariance=posterior_covariance(K, W))


def _evidence(
    comparisons: Sequence[Comparison],
    n_levels: int,
    hp: Hyperparams,
    f_init: np.ndarray | None = None,
) -> tuple[float, np.ndarray]:
    K = kernel_matrix(n_levels, hp.lam)
    if not comparisons:
        return 0.0, np.zeros(n_levels)
    f_hat = laplace_mode(K, comparisons, hp.sigma, f_init=f_init)
    fit = log_likelihood(f_hat, comparisons, hp.sigma)
    Kj = K + JITTER * np.eye(n_levels)
    cK = cho_factor(Kj, lower=True)
    quad = 0.5 * float(f_hat @ cho_solve(cK, f_hat))
    _, W = likelihood_grad_hessian(f_hat, comparisons, hp.sigma)
    # det(I + K W) = det(I + W^1/2 K W^1/2) > 0, so the LU route is safe.
    sign, logdet = np.linalg.slogdet(np.eye(n_levels) + K @ W)
    if sign <= 0:
        raise NumericalError("evidence determinant came out non-positive")
    return fit - quad - 0.5 * float(logdet), f_hat


def log_marginal_laplace(
    comparisons: Sequence[Comparison], n_levels: int, hp: Hyperparams
) -> float:
    """Laplace evidence: fit term minus prior quadratic minus complexity.

    log p(D | f_hat) - 1/2 f_hat' K^-1 f_hat - 1/2 log det(I + K W(f_hat)),
    with f_hat the Newton mode for these hyperparameters.
    """
    return _evidence(comparisons, n_levels, hp)[0]


def fit_hyperparams(
    comparisons: Sequence[Comparison],
    n_levels: int,
    bounds: tuple[tuple[float, float], tuple[float, float]] = DEFAULT_BOUNDS,
    init: Hyperparams | None = None,
) -> Hyperparams:
    """Bounded ML for (lam, sigma) via L-BFGS-B in log-parameter space.

    Uniform prior over the bound box, so MAP reduces to bounded maximum
    likelihood of the Laplace evidence. Gradients come from central finite
    differences (the objective itself runs a Newton solve, so analytic
    gradients through f_hat are not worth the fragility). The evidence
    surface is multimodal (a large-lam/large-sigma "all noise" mode competes
    with the data-fitting mode), so the search is multi-started from the
    warm ``init`` and two fixed points of the box. Guaranteed not to return
    a point worse than ``init``.
    """
    (lam_lo, lam_hi), (sig_lo, sig_hi) = bounds
    if init is None:
        init = Hyperparams(math.sqrt(lam_lo * lam_hi), math.sqrt(sig_lo * sig_hi))
    init = Hyperparams(
        min(max(init.lam, lam_lo), lam_hi), min(max(init.sigma, sig_lo), sig_hi)
    )
    log_bounds = [(math.log(lam_lo), math.log(lam_hi)), (math.log(sig_lo), math.log(sig_hi))]
    n_ok = 0
    memo: dict[tuple[float, float], float] = {}
    f_warm: list[np.ndarray | None] = [None]  # unique mode, so warm starts are safe

    def neg_evidence(x: np.ndarray) -> float:
        nonlocal n_ok
        lam = min(max(math.exp(x[0]), lam_lo), lam_hi)
        sig = min(max(math.exp(x[1]), sig_lo), sig_hi)
        key = (lam, sig)
        if key in memo:
            return memo[key]
        try:
            val, f_hat = _evidence(comparisons, n_levels, Hyperparams(lam, sig), f_warm[0])
        except (ConvergenceError, NumericalError):
            memo[key] = math.inf
            return math.inf
        n_ok += 1
        f_warm[0] = f_hat
        memo[key] = -val
        return -val

    def neg_grad(x: np.ndarray) -> np.ndarray:
        g = np.zeros(2)
        for i in range(2):
            xp, xm = x.copy(), x.copy()
            xp[i] += FD_LOG_STEP
            xm[i] -= FD_LOG_STEP
            fp, fm = neg_evidence(xp), neg_evidence(xm)
            g[i] = (fp - fm) / (2.0 * FD_LOG_STEP) if math.isfinite(fp - fm) else 0.0
        return g

    def frac(lo: float, hi: float, q: float) -> float:
        return math.exp(math.log(lo) + q * (math.log(hi) - math.log(lo)))

    x0 = np.array([math.log(init.lam), math.log(init.sigma)])
    starts = [
        x0,
        np.log([frac(lam_lo, lam_hi, 0.2), frac(sig_lo, sig_hi, 0.2)]),
        np.log([lam_hi, frac(sig_lo, sig_hi, 0.3)]),
    ]
    best_x, best_val = x0, neg_evidence(x0)
    for start in starts:
        result = minimize(
            neg_evidence, start, jac=neg_grad, method="L-BFGS-B", bounds=log_bounds,
            options={"maxiter": 20, "ftol": 1e-6},
        )
        val = neg_evidence(result.x)
        if val < best_val:
            best_x, best_val = result.x, val
    if n_ok == 0:
        raise OptimizationError("evidence could not be evaluated anywhere in the box")
    return Hyperparams(
        min(max(math.exp(best_x[0]), lam_lo), lam_hi),
        min(max(math.exp(best_x[1]), sig_lo), sig_hi),
    )


def best_level(f: np.ndarray) -> int:
    """1-based argmax of the preference function; ties go to the lowest index."""
    f = np.asarray(f, dtype=float)
    if f.size == 0:
        raise DomainError("preference function is empty")
    return int(np.argmax(f)) + 1
