"""Gaussian-process surrogate: Matern 5/2 kernel, exact inference via
Cholesky factorization, marginal-likelihood hyperparameter search, and the
Expected Improvement acquisition."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import minimize
from scipy.spatial.distance import cdist

SQRT5 = math.sqrt(5.0)

# log-space hyperparameter bounds: lengthscale, signal variance, noise variance
_BOUNDS = np.log(np.array([[0.05, 5.0], [0.1, 10.0], [1e-4, 1.0]]))


def matern52(x, x2, lengthscale: float, signal_var: float) -> float:
    """Matern 5/2 covariance between two points."""
    if lengthscale <= 0 or signal_var <= 0:
        raise ValueError("lengthscale and signal_var must be > 0")
    r = float(np.linalg.norm(np.asarray(x, float) - np.asarray(x2, float))) / lengthscale
    return signal_var * (1.0 + SQRT5 * r + 5.0 * r * r / 3.0) * math.exp(-SQRT5 * r)


def _kernel_matrix(xa: np.ndarray, xb: np.ndarray, lengthscale: float, signal_var: float) -> np.ndarray:
    r = cdist(xa, xb) / lengthscale
    return signal_var * (1.0 + SQRT5 * r + 5.0 / 3.0 * r**2) * np.exp(-SQRT5 * r)


@dataclass
class GPModel:
    x_train: np.ndarray  # (n, d) in the unit cube
    y_mean: float
    y_std: float
    y_std_units: np.ndarray  # standardized targets
    lengthscale: float
    signal_var: float
    noise_var: float
    jitter: float
    chol: tuple  # cached cho_factor of K + (noise + jitter) I
    alpha: np.ndarray  # (K + noise I)^-1 y

    @property
    def y_best_standardized(self) -> float:
        return float(np.min(self.y_std_units))

    @property
    def y_best(self) -> float:
        return self.y_mean + self.y_std * self.y_best_standardized


class SurrogateError(RuntimeError):
    """Kernel matrix could not be factorized even with maximal jitter."""


def _try_factor(k: np.ndarray):
    """cho_factor with escalating jitter 1e-8 .. 1e-2; (chol, jitter) or raise."""
    jitter = 0.0
    for _ in range(8):
        try:
            return cho_factor(k + jitter * np.eye(len(k)), lower=True), jitter
        except np.linalg.LinAlgError:
            jitter = 1e-8 if jitter == 0.0 else jitter * 10.0
            if jitter > 1e-2:
                break
    raise SurrogateError("kernel factorization failed at maximum jitter")


def _neg_log_marginal(
    log_params: np.ndarray, x: np.ndarray, y: np.ndarray, fixed_noise: float | None = None
) -> float:
    if fixed_noise is None:
        ls, sv, nv = np.exp(np.clip(log_params, _BOUNDS[:, 0], _BOUNDS[:, 1]))
    else:
        ls, sv = np.exp(np.clip(log_params, _BOUNDS[:2, 0], _BOUNDS[:2, 1]))
        nv = fixed_noise
    k = _kernel_matrix(x, x, ls, sv) + nv * np.eye(len(x))
    try:
        chol = cho_factor(k, lower=True)
    except np.linalg.LinAlgError:
        return 1e12
    alpha = cho_solve(chol, y)
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol[0]))))
    return 0.5 * float(y @ alpha) + 0.5 * logdet + 0.5 * len(x) * math.log(2 * math.pi)


def fit_gp(
    x, y, n_restarts: int = 8, seed: int = 0, fixed_noise: float | None = None
) -> GPModel:
    """Fit on observations in the unit cube: standardize targets, pick
    hyperparameters by derivative-free local search (Nelder-Mead) from seeded
    random starts in log space, cache the factorization. fixed_noise pins the
    noise variance instead of fitting it."""
    x = np.atleast_2d(np.asarray(x, float))
    y = np.asarray(y, float).ravel()
    if len(x) < 2:
        raise ValueError("need at least 2 observations")
    if len(x) != len(y):
        raise ValueError("x and y length mismatch")

    y_mean = float(np.mean(y))
    y_sd = float(np.std(y))
    if y_sd < 1e-12:
        y_sd = 1.0
    ys = (y - y_mean) / y_sd

    rng = np.random.default_rng(seed)
    ndim = 2 if fixed_noise is not None else 3
    bounds = _BOUNDS[:ndim]
    starts = [np.array([math.log(0.5), 0.0, math.log(1e-2)][:ndim])]
    starts += [rng.uniform(bounds[:, 0], bounds[:, 1]) for _ in range(n_restarts - 1)]
    best = None
    for s in starts:
        res = minimize(
            _neg_log_marginal,
            s,
            args=(x, ys, fixed_noise),
            method="Nelder-Mead",
            options={"maxfev": 150, "xatol": 1e-3, "fatol": 1e-4},
        )
        if best is None or res.fun < best.fun:
            best = res
    if fixed_noise is None:
        ls, sv, nv = np.exp(np.clip(best.x, _BOUNDS[:, 0], _BOUNDS[:, 1]))
    else:
        ls, sv = np.exp(np.clip(best.x, _BOUNDS[:2, 0], _BOUNDS[:2, 1]))
        nv = fixed_noise

    k = _kernel_matrix(x, x, ls, sv) + nv * np.eye(len(x))
    chol, jitter = _try_factor(k)
    alpha = cho_solve(chol, ys)
    return GPModel(
        x_train=x,
        y_mean=y_mean,
        y_std=y_sd,
        y_std_units=ys,
        lengthscale=float(ls),
        signal_var=float(sv),
        noise_var=float(nv),
        jitter=jitter,
        chol=chol,
        alpha=alpha,
    )


def gp_posterior_standardized(model: GPModel, x) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and standard deviation in standardized target units, for
    one point or a batch."""
    xq = np.atleast_2d(np.asarray(x, float))
    ks = _kernel_matrix(xq, model.x_train, model.lengthscale, model.signal_var)
    mu = ks @ model.alpha
    v = cho_solve(model.chol, ks.T)
    var = model.signal_var - np.einsum("ij,ji->i", ks, v)
    sigma = np.sqrt(np.maximum(var, 0.0))
    return mu, sigma


def gp_posterior(model: GPModel, x) -> tuple[float, float]:
    """Posterior mean and standard deviation at one point, in loss units."""
    mu, sigma = gp_posterior_standardized(model, x)
    return (
        model.y_mean + model.y_std * float(mu[0]),
        model.y_std * float(sigma[0]),
    )


def _phi(z):
    return np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)


def _big_phi(z):
    return 0.5 * (1.0 + np.vectorize(math.erf)(z / math.sqrt(2.0)))


def expected_improvement(mu, sigma, y_best) -> float | np.ndarray:
    """EI for minimization: (y_best - mu) Phi(z) + sigma phi(z) with
    z = (y_best - mu) / sigma; the sigma = 0 limit is max(y_best - mu, 0)."""
    mu = np.asarray(mu, float)
    sigma = np.asarray(sigma, float)
    if np.any(sigma < 0):
        raise ValueError("sigma must be >= 0")
    improvement = y_best - mu
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, improvement / np.where(sigma > 0, sigma, 1.0), 0.0)
    ei = np.where(
        sigma > 0,
        improvement * _big_phi(z) + sigma * _phi(z),
        np.maximum(improvement, 0.0),
    )
    ei = np.maximum(ei, 0.0)
    return float(ei) if ei.ndim == 0 else ei
