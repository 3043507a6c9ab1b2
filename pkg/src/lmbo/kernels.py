"""Mixed continuous / integer / categorical correlation kernels.

All kernels act on points encoded by :meth:`DesignSpace.encode`. The mixed
kernel is the product of one factor per variable, so it reduces to an
anisotropic squared exponential on the encoded coordinates with per-coordinate
weights expanded from the hyperparameter vector ``theta``:

* continuous, integer and ordinal variables: one length-scale weight on the
  scaled value (integer/ordinal use their scaled level index);
* categorical, continuous relaxation (``"cr"``): one weight per level, applied
  to the one-hot coordinates;
* categorical, Gower distance (``"gd"``): one weight for the mismatch
  indicator. Two different one-hot vectors are at squared distance 2, hence
  the factor 1/2 on each coordinate of the block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg.lapack import dpotrf

from .design_space import DesignSpace

CATEGORICAL_KERNELS = ("cr", "gd")
DEFAULT_NUGGET = 1e-10
MAX_NUGGET = 1e-4


class SingularCorrelationError(np.linalg.LinAlgError):
    """Correlation matrix could not be factorized, even after nugget escalation."""


@dataclass(frozen=True)
class ThetaLayout:
    """Maps the flat hyperparameter vector onto encoded coordinates."""

    theta_slices: tuple[slice, ...]
    encoded_slices: tuple[slice, ...]
    groups: tuple[str, ...]  # "cont", "int" or "cat" per variable
    gower: tuple[bool, ...]
    n_theta: int
    encoded_dim: int

    @classmethod
    def from_space(cls, space: DesignSpace, categorical: str = "cr") -> "ThetaLayout":
        if categorical not in CATEGORICAL_KERNELS:
            raise ValueError(f"unknown categorical kernel {categorical!r}")
        t_slices, groups, gower = [], [], []
        k = 0
        for v, sl in zip(space.variables, space.slices):
            if v.kind == "categorical":
                width = 1 if categorical == "gd" else sl.stop - sl.start
                groups.append("cat")
                gower.append(categorical == "gd")
            else:
                width = 1
                groups.append("cont" if v.kind == "continuous" else "int")
                gower.append(False)
            t_slices.append(slice(k, k + width))
            k += width
        return cls(tuple(t_slices), tuple(space.slices), tuple(groups), tuple(gower), k, space.encoded_dim)

    def expand(self, theta) -> np.ndarray:
        """Per-encoded-coordinate weights for a flat ``theta``."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_theta,):
            raise ValueError(f"theta has shape {theta.shape}, layout expects ({self.n_theta},)")
        if np.any(theta <= 0) or not np.all(np.isfinite(theta)):
            raise ValueError("theta entries must be positive and finite")
        w = np.empty(self.encoded_dim)
        for ts, es, gd in zip(self.theta_slices, self.encoded_slices, self.gower):
            w[es] = theta[ts][0] / 2.0 if gd else theta[ts]
        return w


def k_cont(x1, x2, theta) -> float:
    """Squared exponential correlation ``exp(-sum theta_d (x1_d - x2_d)^2)``."""
    x1, x2, theta = (np.atleast_1d(np.asarray(a, dtype=float)) for a in (x1, x2, theta))
    if x1.shape != x2.shape or theta.shape != x1.shape:
        raise ValueError("x1, x2 and theta must have equal lengths")
    if np.any(theta <= 0):
        raise ValueError("theta entries must be positive")
    return float(np.exp(-np.sum(theta * (x1 - x2) ** 2)))


def _onehot(level, levels) -> np.ndarray:
    levels = list(levels)
    if level not in levels:
        raise ValueError(f"unknown level {level!r}")
    e = np.zeros(len(levels))
    e[levels.index(level)] = 1.0
    return e


def k_cat_cr(c1, c2, theta_block, levels) -> float:
    """Continuous-relaxation categorical kernel: SE on the one-hot vectors."""
    theta_block = np.asarray(theta_block, dtype=float)
    if theta_block.shape != (len(levels),):
        raise ValueError("theta_block needs one entry per level")
    return k_cont(_onehot(c1, levels), _onehot(c2, levels), theta_block)


def k_cat_gd(c1, c2, theta, levels) -> float:
    """Gower-distance categorical kernel ``exp(-theta * [c1 != c2])``."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    if c1 not in levels or c2 not in levels:
        raise ValueError(f"unknown level in ({c1!r}, {c2!r})")
    return float(np.exp(-theta * (c1 != c2)))


def k_mixed(w1, w2, theta, layout: ThetaLayout) -> float:
    """Product of per-variable factors on two encoded points."""
    w1, w2 = np.asarray(w1, dtype=float), np.asarray(w2, dtype=float)
    if w1.shape != (layout.encoded_dim,) or w2.shape != (layout.encoded_dim,):
        raise ValueError("encoded points do not match the layout")
    weights = layout.expand(theta)
    return float(np.exp(-np.dot(weights, (w1 - w2) ** 2)))


def cross_correlation(A, B, theta, layout: ThetaLayout) -> np.ndarray:
    """Matrix of ``k_mixed(A[i], B[j])`` (no nugget)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    sw = np.sqrt(layout.expand(theta))
    a, b = A * sw, B * sw
    d2 = (a**2).sum(1)[:, None] + (b**2).sum(1)[None, :] - 2.0 * a @ b.T
    return np.exp(-np.maximum(d2, 0.0))


def corr_matrix(W, theta, layout: ThetaLayout, nugget: float = DEFAULT_NUGGET) -> np.ndarray:
    """Correlation matrix ``R_rs = k(w_r, w_s)`` plus ``nugget`` on the diagonal."""
    if nugget < 0:
        raise ValueError("nugget must be nonnegative")
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if W.shape[0] < 1:
        raise ValueError("need at least one point")
    sw = np.sqrt(layout.expand(theta))
    a = W * sw
    d2 = np.zeros((len(W), len(W)))
    # Coordinate-wise differences keep the diagonal exactly 1 and R exactly symmetric.
    for d in range(a.shape[1]):
        diff = a[:, d, None] - a[None, :, d]
        d2 += diff * diff
    R = np.exp(-d2)
    R[np.diag_indices_from(R)] += nugget
    return R


def factorize(R0, nugget: float = DEFAULT_NUGGET, max_nugget: float = MAX_NUGGET, escalate: bool = True):
    """Cholesky factor of ``R0 + nugget*I``.

    ``R0`` carries no nugget. On failure the nugget is multiplied by 10 until
    ``max_nugget``; returns ``(L, nugget_used)``.
    """
    step = R0.shape[0] + 1
    nug = nugget
    while True:
        A = R0.copy()
        A.flat[::step] += nug
        L, info = dpotrf(A, lower=1, clean=1, overwrite_a=1)
        if info == 0:
            return L, nug
        if not escalate:
            break
        nxt = max(nug * 10.0, DEFAULT_NUGGET)
        if nxt > max_nugget * (1 + 1e-12):
            break
        nug = nxt
    raise SingularCorrelationError(f"correlation matrix not positive definite (nugget up to {nug:g}); duplicate points?")
