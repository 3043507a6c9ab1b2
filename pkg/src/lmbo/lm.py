"""Levenberg-Marquardt training of :mod:`lmbo.mlp` networks.

Training works on z-scored inputs and targets, full batch. Each epoch
computes the residual Jacobian once, then tries damped Gauss-Newton steps,
raising the damping after every rejected step until the training loss
decreases. Validation MSE drives early stopping, and the parameters of the
best validation epoch are returned.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from . import metrics
from .mlp import MlpArchitecture, count_params, forward, init_params, jacobian

log = logging.getLogger(__name__)

MODEL_FORMAT = "lmbo-mlp/1"
MU_MIN = 1e-12
# above this many Jacobian entries, J^T J is accumulated over row blocks
FULL_JACOBIAN_LIMIT = 20_000_000


@dataclass(frozen=True)
class TrainConfig:
    mu0: float = 1e-2
    mu_dec: float = 0.1
    mu_inc: float = 10.0
    mu_max: float = 1e10
    max_epochs: int = 1000
    patience: int = 6
    split: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.mu_dec < 1 < self.mu_inc:
            raise ValueError("need 0 < mu_dec < 1 < mu_inc")
        if self.patience < 1 or self.max_epochs < 1:
            raise ValueError("patience and max_epochs must be >= 1")
        if len(self.split) != 3 or min(self.split) < 0 or abs(sum(self.split) - 1) > 1e-9:
            raise ValueError("split must be three nonnegative fractions summing to 1")


# -- data handling -----------------------------------------------------------

def split_dataset(n_rows: int, ratios=(0.8, 0.1, 0.1), seed: int = 0):
    """Shuffled ``(train, val, test)`` index arrays.

    Sizes are ``floor(r_train * n)``, ``floor(r_val * n)`` and the rest.
    """
    if n_rows < 10:
        raise ValueError(f"need at least 10 rows, got {n_rows}")
    perm = np.random.default_rng(seed).permutation(n_rows)
    n_train = int(np.floor(ratios[0] * n_rows + 1e-9))
    n_val = int(np.floor(ratios[1] * n_rows + 1e-9))
    return perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:]


@dataclass(frozen=True)
class NormStats:
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: np.ndarray
    y_std: np.ndarray

    def apply_x(self, X):
        return (np.asarray(X, dtype=float) - self.x_mean) / self.x_std

    def apply_y(self, Y):
        return (np.asarray(Y, dtype=float) - self.y_mean) / self.y_std

    def invert_y(self, Z):
        return np.asarray(Z, dtype=float) * self.y_std + self.y_mean

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("x_mean", "x_std", "y_mean", "y_std")}

    @classmethod
    def from_dict(cls, d) -> "NormStats":
        return cls(*(np.asarray(d[k], dtype=float) for k in ("x_mean", "x_std", "y_mean", "y_std")))


def _as_2d(Y):
    Y = np.asarray(Y, dtype=float)
    return Y[:, None] if Y.ndim == 1 else Y


def zscore_fit(X, Y) -> NormStats:
    """Column means and population standard deviations. Constant columns are rejected."""
    X, Y = _as_2d(X), _as_2d(Y)
    xs, ys = X.std(axis=0), Y.std(axis=0)
    for name, s in (("feature", xs), ("target", ys)):
        bad = np.flatnonzero(s == 0)
        if bad.size:
            raise ValueError(f"constant {name} column(s) {bad.tolist()} cannot be z-scored")
    return NormStats(X.mean(axis=0), xs, Y.mean(axis=0), ys)


def zscore_apply(stats: NormStats, X):
    return stats.apply_x(X)


# -- the damped Gauss-Newton step ---------------------------------------------

def _solve_damped(JtJ, g, mu):
    A = JtJ.copy()
    A.flat[:: A.shape[0] + 1] += mu
    c = cho_factor(A, lower=True, check_finite=False)
    x = cho_solve(c, g, check_finite=False)
    # one refinement step removes the rounding of the square roots
    return x + cho_solve(c, g - A @ x, check_finite=False)


def lm_direction(J, r, mu: float) -> np.ndarray:
    """``(J^T J + mu I)^-1 J^T r`` by Cholesky, never by explicit inverse.

    With fewer rows than columns and ``mu > 0`` the equivalent
    ``J^T (J J^T + mu I)^-1 r`` is solved instead.
    """
    J = np.atleast_2d(np.asarray(J, dtype=float))
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    if J.shape[0] < J.shape[1] and mu > 0:
        return J.T @ _solve_damped(J @ J.T, r, mu)
    return _solve_damped(J.T @ J, J.T @ r, mu)


def _damped_solver(J, r):
    """``mu -> lm_direction(J, r, mu)`` with the Gram matrix formed once (``mu > 0``)."""
    if J.shape[0] < J.shape[1]:
        G = J @ J.T
        return lambda mu: J.T @ _solve_damped(G, r, mu)
    G, g = J.T @ J, J.T @ r
    return lambda mu: _solve_damped(G, g, mu)


def lm_step(beta, J, r, mu: float) -> np.ndarray:
    """One Levenberg-Marquardt update ``beta - (J^T J + mu I)^-1 J^T r``."""
    return np.asarray(beta, dtype=float) - lm_direction(J, r, mu)


# -- training ------------------------------------------------------------------

@dataclass
class TrainedModel:
    arch: MlpArchitecture
    params: np.ndarray
    norm: NormStats
    history: list[tuple[int, float, float, float]] = field(default_factory=list)
    best_epoch: int = 0
    stalled: bool = False
    metrics: dict = field(default_factory=dict)

    @property
    def n_params(self) -> int:
        return count_params(self.arch)

    def predict(self, X) -> np.ndarray:
        """Predictions in original target units, shape ``(n, output_dim)``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.norm.invert_y(forward(self.arch, self.params, self.norm.apply_x(X)))


def _residual_system(arch, beta, X, Y):
    """``J^T J``, ``J^T r``, full ``J`` when small (else None), and ``r``."""
    r = (forward(arch, beta, X) - Y).ravel()
    p = count_params(arch)
    if r.size * p <= FULL_JACOBIAN_LIMIT:
        J = jacobian(arch, beta, X)
        return None, None, J, r
    block = max(1, FULL_JACOBIAN_LIMIT // (p * arch.output_dim))
    JtJ = np.zeros((p, p))
    g = np.zeros(p)
    K = arch.output_dim
    for s in range(0, len(X), block):
        Jb = jacobian(arch, beta, X[s:s + block])
        JtJ += Jb.T @ Jb
        g += Jb.T @ r[s * K:(s + block) * K]
    return JtJ, g, None, r


def fit_lm(arch: MlpArchitecture, beta0, X, Y, X_val, Y_val, config: TrainConfig = TrainConfig()):
    """LM loop on already-normalized data.

    Returns ``(beta_best, history, best_epoch, stalled)``. ``history`` rows
    are ``(epoch, train_mse, val_mse, mu)``; epoch 0 is the initial point.
    A step is accepted only if it strictly lowers the training MSE.
    """
    X, Y = np.asarray(X, dtype=float), _as_2d(Y)
    X_val, Y_val = np.asarray(X_val, dtype=float), _as_2d(Y_val)
    beta = np.array(beta0, dtype=float)

    def train_mse(b):
        return float(np.mean((forward(arch, b, X) - Y) ** 2))

    def val_mse(b):
        if len(X_val) == 0:
            return train_mse(b)
        return float(np.mean((forward(arch, b, X_val) - Y_val) ** 2))

    mu = config.mu0
    loss = train_mse(beta)
    best_val = val_mse(beta)
    best_beta, best_epoch = beta.copy(), 0
    history = [(0, loss, best_val, mu)]
    stalled = False
    wait = 0
    for epoch in range(1, config.max_epochs + 1):
        JtJ, g, J, r = _residual_system(arch, beta, X, Y)
        if J is not None:
            solve = _damped_solver(J, r)
        else:
            solve = lambda m: _solve_damped(JtJ, g, m)
        accepted = False
        while mu <= config.mu_max:
            try:
                cand = beta - solve(mu)
                cand_loss = train_mse(cand)
            except (LinAlgError, FloatingPointError):
                cand_loss = np.inf
            if cand_loss < loss:
                beta, loss = cand, cand_loss
                mu = max(mu * config.mu_dec, MU_MIN)
                accepted = True
                break
            mu *= config.mu_inc
        if not accepted:
            stalled = True
            log.debug("LM stalled at epoch %d (mu > %g)", epoch, config.mu_max)
            break
        v = val_mse(beta)
        history.append((epoch, loss, v, mu))
        if v < best_val:
            best_val, best_beta, best_epoch, wait = v, beta.copy(), epoch, 0
        else:
            wait += 1
            if wait >= config.patience:
                break
    return best_beta, history, best_epoch, stalled


def train(arch: MlpArchitecture, X, Y, config: TrainConfig = TrainConfig(),
          split=None, init_seed: int | None = None) -> TrainedModel:
    """Split, normalize on the training rows, train, and score every split.

    ``split`` may be a precomputed ``(train, val, test)`` index triple;
    otherwise it is drawn with ``config.seed``. Initial weights use
    ``init_seed`` (default ``config.seed``).
    """
    X, Y = np.asarray(X, dtype=float), _as_2d(Y)
    if X.shape[1] != arch.input_dim or Y.shape[1] != arch.output_dim:
        raise ValueError("data shape does not match the architecture")
    if split is None:
        split = split_dataset(len(X), config.split, config.seed)
    tr, va, te = split
    norm = zscore_fit(X[tr], Y[tr])
    beta0 = init_params(arch, config.seed if init_seed is None else init_seed)
    with np.errstate(over="ignore"):
        beta, history, best_epoch, stalled = fit_lm(
            arch, beta0, norm.apply_x(X[tr]), norm.apply_y(Y[tr]),
            norm.apply_x(X[va]), norm.apply_y(Y[va]), config)
    model = TrainedModel(arch, beta, norm, history, best_epoch, stalled)
    for name, idx in (("train", tr), ("val", va), ("test", te)):
        if len(idx):
            model.metrics[name] = evaluate(model, X[idx], Y[idx]).to_dict()
    return model


def evaluate(model: TrainedModel, X, Y) -> metrics.MetricBundle:
    """MSE / RMSE / MAPE in original units."""
    Y = _as_2d(Y)
    if len(Y) == 0:
        raise ValueError("no rows to evaluate")
    return metrics.bundle(Y, model.predict(X))


def train_gradient_descent(arch: MlpArchitecture, beta0, X, Y, lr: float, epochs: int):
    """Full-batch fixed-step gradient descent on the MSE (comparison baseline).

    Returns ``(beta, train_mse_history)``.
    """
    X, Y = np.asarray(X, dtype=float), _as_2d(Y)
    beta = np.array(beta0, dtype=float)
    n = Y.size
    hist = []
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(epochs):
            r = (forward(arch, beta, X) - Y).ravel()
            hist.append(float(r @ r / n))
            J = jacobian(arch, beta, X)
            beta = beta - lr * (2.0 / n) * (J.T @ r)
        r = (forward(arch, beta, X) - Y).ravel()
        hist.append(float(r @ r / n))
    return beta, hist


# -- persistence ---------------------------------------------------------------

def model_to_dict(model: TrainedModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "arch": model.arch.to_dict(),
        "norm": model.norm.to_dict(),
        "params": model.params.tolist(),
        "best_epoch": model.best_epoch,
        "stalled": model.stalled,
        "metrics": model.metrics,
    }


def model_from_dict(d: dict) -> TrainedModel:
    if d.get("format") != MODEL_FORMAT:
        raise ValueError(f"unsupported model format {d.get('format')!r}")
    a = d["arch"]
    arch = MlpArchitecture(a["input_dim"], tuple(a["hidden"]), a["activation"], a["output_dim"])
    params = np.asarray(d["params"], dtype=float)
    if params.shape != (count_params(arch),):
        raise ValueError("parameter vector does not match the architecture")
    return TrainedModel(arch, params, NormStats.from_dict(d["norm"]),
                        best_epoch=d.get("best_epoch", 0), stalled=d.get("stalled", False),
                        metrics=d.get("metrics", {}))


def save_model(model: TrainedModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1))


def load_model(path) -> TrainedModel:
    return model_from_dict(json.loads(Path(path).read_text()))


def write_history_csv(model: TrainedModel, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "train_mse", "val_mse", "mu"])
        for row in model.history:
            w.writerow([row[0], repr(row[1]), repr(row[2]), repr(row[3])])


def with_overrides(config: TrainConfig, overrides: dict) -> TrainConfig:
    if "split" in overrides:
        overrides = {**overrides, "split": tuple(overrides["split"])}
    return replace(config, **overrides)
