"""Ordinary-Kriging Gaussian process with a mixed correlation kernel.

The constant trend and the process variance are profiled out of the
likelihood analytically, so the optimizer only searches the correlation
hyperparameters, in log10 space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.linalg.lapack import dtrtrs
from scipy.optimize import minimize

from .kernels import (
    CATEGORICAL_KERNELS,
    DEFAULT_NUGGET,
    SingularCorrelationError,
    ThetaLayout,
    corr_matrix,
    cross_correlation,
    factorize,
)

LOG10_THETA_BOUNDS = (-6.0, 2.0)


@dataclass(frozen=True)
class GpConfig:
    categorical: str = "cr"
    nugget: float = DEFAULT_NUGGET
    n_starts: int = 10
    max_iter: int = 100

    def __post_init__(self):
        if self.categorical not in CATEGORICAL_KERNELS:
            raise ValueError(f"unknown categorical kernel {self.categorical!r}")
        if self.nugget < 0 or self.n_starts < 1 or self.max_iter < 1:
            raise ValueError("need nugget >= 0, n_starts >= 1 and max_iter >= 1")


@dataclass(frozen=True)
class _Profile:
    chol: np.ndarray
    nugget: float
    mu_hat: float
    sigma2_hat: float
    alpha: np.ndarray  # R^-1 (y - mu_hat)
    Rinv_one: np.ndarray
    one_Rinv_one: float
    log_lik: float


def _sigma2_floor(y) -> float:
    return 1e-12 * (1.0 + float(np.var(y)))


def _profile(W, y, theta, layout: ThetaLayout, nugget: float, escalate: bool = True) -> _Profile:
    R0 = corr_matrix(W, theta, layout, nugget=0.0)
    return _profile_from_corr(R0, y, nugget, escalate)


def _profile_from_corr(R0, y, nugget: float, escalate: bool = True, full: bool = True,
                       ones_y=None, floor=None):
    n = len(y)
    if ones_y is None:
        ones_y = np.column_stack([np.ones(n), y])
    if floor is None:
        floor = _sigma2_floor(y)
    L, nug = factorize(R0, nugget, escalate=escalate)
    rhs, _ = dtrtrs(L, ones_y, lower=1)
    Li_one, Li_y = rhs[:, 0], rhs[:, 1]
    one_Rinv_one = float(Li_one @ Li_one)
    mu = float(Li_one @ Li_y) / one_Rinv_one
    Li_res = Li_y - mu * Li_one
    sigma2 = max(float(Li_res @ Li_res) / n, floor)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    ll = -0.5 * n * np.log(sigma2) - 0.5 * logdet - 0.5 * n * (np.log(2 * np.pi) + 1.0)
    if not full:
        return float(ll)
    back, _ = dtrtrs(L, np.column_stack([Li_res, Li_one]), lower=1, trans=1)
    return _Profile(L, nug, mu, sigma2, back[:, 0], back[:, 1], one_Rinv_one, float(ll))


def log_likelihood(W, y, theta, layout: ThetaLayout, nugget: float = DEFAULT_NUGGET) -> float:
    """Concentrated log-likelihood (trend and variance at their MLE).

    Equals ``-n/2 log(sigma2_hat) - 1/2 log|R| - n/2 (log 2 pi + 1)``.
    """
    W = np.atleast_2d(np.asarray(W, dtype=float))
    y = np.asarray(y, dtype=float)
    if len(y) < 2:
        raise ValueError("log-likelihood needs at least 2 points")
    return _profile(W, y, theta, layout, nugget).log_lik


@dataclass(frozen=True)
class GpModel:
    W: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    layout: ThetaLayout
    chol: np.ndarray
    mu_hat: float
    sigma2_hat: float
    nugget: float
    log_lik: float
    alpha: np.ndarray
    Rinv_one: np.ndarray
    one_Rinv_one: float

    def _r(self, w):
        return cross_correlation(np.atleast_2d(w), self.W, self.theta, self.layout)

    def predict(self, w):
        """Mean and variance at one or many encoded points."""
        w = np.atleast_2d(np.asarray(w, dtype=float))
        r = self._r(w)  # (m, n)
        mean = self.mu_hat + r @ self.alpha
        v = solve_triangular(self.chol, r.T, lower=True)  # L^-1 r, (n, m)
        rRr = np.sum(v * v, axis=0)
        trend = (1.0 - r @ self.Rinv_one) ** 2 / self.one_Rinv_one
        var = self.sigma2_hat * (1.0 - rRr + trend)
        return mean, np.maximum(var, 0.0)

    def predict_mean(self, w):
        mean, _ = self.predict(w)
        return float(mean[0]) if np.ndim(w) == 1 else mean

    def predict_var(self, w):
        _, var = self.predict(w)
        return float(var[0]) if np.ndim(w) == 1 else var


def _model_from(W, y, theta, layout, prof: _Profile) -> GpModel:
    return GpModel(
        W=W, y=y, theta=np.asarray(theta, dtype=float), layout=layout,
        chol=prof.chol, mu_hat=prof.mu_hat, sigma2_hat=prof.sigma2_hat,
        nugget=prof.nugget, log_lik=prof.log_lik, alpha=prof.alpha,
        Rinv_one=prof.Rinv_one, one_Rinv_one=prof.one_Rinv_one,
    )


def fit_fixed(W, y, theta, layout: ThetaLayout, nugget: float = DEFAULT_NUGGET) -> GpModel:
    """Condition the GP on data for given hyperparameters (no MLE search)."""
    W = np.atleast_2d(np.asarray(W, dtype=float))
    y = np.asarray(y, dtype=float)
    return _model_from(W, y, theta, layout, _profile(W, y, theta, layout, nugget))


def _variable_sq_dists(W, layout: ThetaLayout) -> np.ndarray:
    """(n, n, n_theta) tensor with R0 = exp(-D @ theta) for the mixed kernel."""
    n = len(W)
    D = np.empty((n, n, layout.n_theta))
    for ts, es, gd in zip(layout.theta_slices, layout.encoded_slices, layout.gower):
        diff2 = (W[:, None, es] - W[None, :, es]) ** 2
        if gd:
            D[:, :, ts] = 0.5 * diff2.sum(axis=2, keepdims=True)
        else:
            D[:, :, ts] = diff2
    return D


def fit(W, y, layout: ThetaLayout, config: GpConfig = GpConfig(), seed: int = 0) -> GpModel:
    """Maximum-likelihood fit of the correlation hyperparameters.

    Multi-start bounded Nelder-Mead in log10(theta). The first start is
    theta = 1; the others are uniform in [-2, 1.5] (log10). With a single
    point the hyperparameters are left at 1.
    """
    W = np.atleast_2d(np.asarray(W, dtype=float))
    y = np.asarray(y, dtype=float)
    if len(y) != len(W) or len(y) < 1:
        raise ValueError("W and y need the same, nonzero, number of rows")
    d = layout.n_theta
    if len(y) == 1:
        return fit_fixed(W, y, np.ones(d), layout, config.nugget)

    lo, hi = LOG10_THETA_BOUNDS
    # per-variable squared distances; R0 = exp(-D @ theta)
    D = _variable_sq_dists(W, layout)
    ones_y = np.column_stack([np.ones(len(y)), y])
    floor = _sigma2_floor(y)

    def nll(z):
        R0 = np.exp(-(D @ 10.0**z))
        try:
            return -_profile_from_corr(R0, y, config.nugget, full=False, ones_y=ones_y, floor=floor)
        except SingularCorrelationError:
            return np.inf

    rng = np.random.default_rng(seed)
    starts = [np.zeros(d)] + [rng.uniform(-2.0, 1.5, d) for _ in range(config.n_starts - 1)]
    best_z, best_val = None, np.inf
    for z0 in starts:
        if not np.isfinite(nll(z0)):
            continue
        res = minimize(
            nll, z0, method="Nelder-Mead", bounds=[(lo, hi)] * d,
            options={"maxiter": config.max_iter, "xatol": 1e-4, "fatol": 1e-8},
        )
        # strict improvement keeps the earliest start on ties
        if np.isfinite(res.fun) and res.fun < best_val:
            best_z, best_val = np.clip(res.x, lo, hi), float(res.fun)
    if best_z is None:
        raise SingularCorrelationError("every likelihood start failed to factorize")
    return fit_fixed(W, y, 10.0 ** best_z, layout, config.nugget)
