"""Levenberg-Marquardt against plain gradient descent.

A smooth five-input regression problem stands in for a tabular
benchmark. Both methods start from the same Glorot initialization of a
5-[20,20]-1 tanh network and run 200 epochs on z-scored data; gradient
descent gets the best of a small learning-rate sweep.
"""

import numpy as np

from lmbo.lm import TrainConfig, fit_lm, split_dataset, train_gradient_descent, zscore_fit
from lmbo.mlp import MlpArchitecture, count_params, init_params

rng = np.random.default_rng(0)
X = rng.uniform(0, 1, (600, 5))
y = 120 + 4 * np.sin(4 * X[:, 0]) + 3 * X[:, 1] * X[:, 2] - 2 * X[:, 3] + X[:, 4] ** 2

tr, va, te = split_dataset(len(y), seed=0)
norm = zscore_fit(X[tr], y[tr])
Xt, Yt = norm.apply_x(X[tr]), norm.apply_y(y[tr, None])
Xv, Yv = norm.apply_x(X[va]), norm.apply_y(y[va, None])

arch = MlpArchitecture(5, (20, 20), "tanh")
beta0 = init_params(arch, 0)
print(f"{count_params(arch)} parameters, {len(tr)} training rows")

# %% LM with early stopping disabled so both methods see 200 epochs
_, hist, _, _ = fit_lm(arch, beta0, Xt, Yt, Xv, Yv, TrainConfig(max_epochs=200, patience=10**6))
print(f"LM  final train MSE {hist[-1][1]:.3e} after {len(hist)} accepted steps")

# %% Gradient descent over a learning-rate sweep
for lr in (0.01, 0.03, 0.1, 0.3):
    _, h = train_gradient_descent(arch, beta0, Xt, Yt, lr, 200)
    print(f"GD  lr={lr:<5} final train MSE {h[-1]:.3e}")
