"""Regression error metrics and parameter efficiency."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


def _pair(y, yhat):
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.shape != yhat.shape:
        raise ValueError(f"length mismatch: {y.shape[0]} targets, {yhat.shape[0]} predictions")
    if y.size == 0:
        raise ValueError("empty input")
    return y, yhat


def mse(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return float(np.mean((y - yhat) ** 2))


def rmse(y, yhat) -> float:
    return float(np.sqrt(mse(y, yhat)))


def mape(y, yhat) -> float:
    """Mean absolute percentage error, in percent. Zero targets are rejected."""
    y, yhat = _pair(y, yhat)
    if np.any(y == 0):
        raise ValueError("MAPE undefined: target contains zeros")
    return float(100.0 * np.mean(np.abs((y - yhat) / y)))


def parameter_efficiency(mape_percent: float, n_params: int, zeta: float = 100.0) -> float:
    """``max(1 - zeta * MAPE, 0) / n_params`` with MAPE as a fraction.

    With ``zeta = 100`` a model loses all usability at 1 % MAPE.
    """
    if n_params < 1:
        raise ValueError("n_params must be >= 1")
    if zeta <= 0:
        raise ValueError("zeta must be positive")
    return max(1.0 - zeta * mape_percent / 100.0, 0.0) / n_params


@dataclass(frozen=True)
class MetricBundle:
    mse: float
    rmse: float
    mape: float
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


def bundle(y, yhat) -> MetricBundle:
    y, yhat = _pair(y, yhat)
    m = mse(y, yhat)
    return MetricBundle(mse=m, rmse=float(np.sqrt(m)), mape=mape(y, yhat), n=int(y.size))
