"""Zero-mean Gaussian-process regression with a squared-exponential kernel.

The noisy Gram matrix ``K + sigma_n^2 I`` is used both for the posterior and
for the log marginal likelihood. Hyperparameters are trained in log space with
L-BFGS-B and an analytic gradient.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize
from scipy.spatial.distance import cdist

JITTER = 1e-8
DEFAULT_BOUNDS = {"sigma_n": (1e-4, 0.1), "sigma_f": (0.01, 1.0), "length_scale": (0.1, 10.0)}


class GpNumericalError(RuntimeError):
    pass


class GpTrainingWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Hyperparams:
    sigma_n: float = 0.01
    sigma_f: float = 0.1
    length_scale: float = 1.0

    def __post_init__(self):
        if min(self.sigma_n, self.sigma_f, self.length_scale) <= 0:
            raise ValueError(f"hyperparameters must be strictly positive: {self}")

    def to_log(self) -> np.ndarray:
        return np.log([self.sigma_n, self.sigma_f, self.length_scale])

    @classmethod
    def from_log(cls, w) -> "Hyperparams":
        sn, sf, ell = np.exp(np.asarray(w, dtype=float))
        return cls(float(sn), float(sf), float(ell))


def _sqdist(A, B) -> np.ndarray:
    return cdist(np.atleast_2d(A), np.atleast_2d(B), "sqeuclidean")


def kernel(q, qp, theta: Hyperparams) -> float:
    d2 = float(np.sum((np.asarray(q, float) - np.asarray(qp, float)) ** 2))
    return theta.sigma_f**2 * np.exp(-d2 / (2.0 * theta.length_scale**2))


def kernel_matrix(A, B, theta: Hyperparams) -> np.ndarray:
    return theta.sigma_f**2 * np.exp(-_sqdist(A, B) / (2.0 * theta.length_scale**2))


def _factor(K: np.ndarray) -> np.ndarray:
    try:
        return cholesky(K, lower=True)
    except LinAlgError:
        pass
    try:
        return cholesky(K + JITTER * np.eye(len(K)), lower=True)
    except LinAlgError as exc:
        diag = np.diag(K)
        raise GpNumericalError(
            f"Cholesky failed after jitter: n={len(K)}, diag range [{diag.min():.3g}, {diag.max():.3g}]"
        ) from exc


@dataclass
class GpModel:
    X: np.ndarray
    y: np.ndarray
    theta: Hyperparams
    chol: np.ndarray
    alpha: np.ndarray

    @property
    def n(self) -> int:
        return len(self.y)


def _check_data(X, y):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if len(y) < 1 or X.shape[0] != len(y):
        raise ValueError(f"need matching non-empty X, y; got {X.shape[0]} points and {len(y)} values")
    return X, y


def fit(X, y, theta: Hyperparams) -> GpModel:
    X, y = _check_data(X, y)
    K = kernel_matrix(X, X, theta)
    K[np.diag_indices_from(K)] += theta.sigma_n**2
    L = _factor(K)
    alpha = cho_solve((L, True), y)
    return GpModel(X, y, theta, L, alpha)


def predict(model: GpModel, Q, return_var: bool = True):
    """Posterior mean and variance at the rows of ``Q``.

    Variances are clamped at zero against round-off. With ``return_var=False``
    only the mean is computed and ``None`` is returned for the variance.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    Ks = kernel_matrix(model.X, Q, model.theta)  # (n, m)
    mean = Ks.T @ model.alpha
    if not return_var:
        return mean, None
    v = solve_triangular(model.chol, Ks, lower=True, check_finite=False)
    var = model.theta.sigma_f**2 - np.einsum("ij,ij->j", v, v)
    return mean, np.maximum(var, 0.0)


def log_marginal_likelihood(X, y, theta: Hyperparams, eval_gradient: bool = False):
    """log p(y | X, theta); gradient (if requested) is w.r.t. log(sigma_n, sigma_f, l)."""
    X, y = _check_data(X, y)
    n = len(y)
    D = _sqdist(X, X)
    Kf = theta.sigma_f**2 * np.exp(-D / (2.0 * theta.length_scale**2))
    K = Kf.copy()
    K[np.diag_indices_from(K)] += theta.sigma_n**2
    L = _factor(K)
    alpha = cho_solve((L, True), y)
    lml = -0.5 * y @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * np.log(2 * np.pi)
    if not eval_gradient:
        return float(lml)
    W = np.outer(alpha, alpha) - cho_solve((L, True), np.eye(n))
    grad = np.array([
        theta.sigma_n**2 * np.trace(W),
        np.sum(W * Kf),
        0.5 * np.sum(W * Kf * D) / theta.length_scale**2,
    ])
    return float(lml), grad


def _strided_subset(n: int, max_points: int | None) -> np.ndarray:
    if max_points is None or n <= max_points:
        return np.arange(n)
    # evenly spread over the history, always keeping the newest sample
    return np.unique(np.round(np.linspace(0, n - 1, max_points)).astype(int))


def train(
    X,
    y,
    theta_init: Hyperparams,
    bounds: dict | None = None,
    n_restarts: int = 3,
    rng: np.random.Generator | None = None,
    max_points: int | None = None,
) -> Hyperparams:
    """Maximise the log marginal likelihood over box bounds.

    The first start is ``theta_init`` (clipped into the box); the remaining
    ``n_restarts - 1`` starts are log-uniform draws from ``rng``. The result
    never scores below the initial point.
    """
    X, y = _check_data(X, y)
    if len(y) < 2:
        raise ValueError("training needs at least two observations")
    idx = _strided_subset(len(y), max_points)
    X, y = X[idx], y[idx]
    bounds = {**DEFAULT_BOUNDS, **(bounds or {})}
    log_bounds = np.log([bounds["sigma_n"], bounds["sigma_f"], bounds["length_scale"]])
    rng = rng if rng is not None else np.random.default_rng(0)

    def objective(w):
        try:
            f, g = log_marginal_likelihood(X, y, Hyperparams.from_log(w), eval_gradient=True)
        except GpNumericalError:
            return 1e25, np.zeros(3)
        return -f, -g

    w0 = np.clip(theta_init.to_log(), log_bounds[:, 0], log_bounds[:, 1])
    starts = [w0] + [rng.uniform(log_bounds[:, 0], log_bounds[:, 1]) for _ in range(max(n_restarts, 1) - 1)]
    best_w, best_f = w0, objective(w0)[0]
    for w in starts:
        res = minimize(objective, w, jac=True, method="L-BFGS-B", bounds=log_bounds)
        if np.isfinite(res.fun) and res.fun < best_f:
            best_w, best_f = np.clip(res.x, log_bounds[:, 0], log_bounds[:, 1]), res.fun
    if not best_f < 1e25:
        warnings.warn("hyperparameter optimisation made no progress; keeping initial values",
                      GpTrainingWarning, stacklevel=2)
        return theta_init
    if best_w is w0 and np.array_equal(w0, theta_init.to_log()):
        return theta_init
    return Hyperparams.from_log(best_w)
