"""A smaller network lives inside every larger one.

Padding hidden layers with zero-weight units, or (for linear and relu
networks) appending identity layers, maps the parameters of a small MLP
to a larger architecture without changing its outputs. This is why the
best achievable training error can only go down as the architecture
grows.
"""

import numpy as np

from lmbo.mlp import MlpArchitecture, count_params, embed, forward, init_params

X = np.random.default_rng(1).normal(size=(5, 3))

for act in ("tanh", "sigmoid", "relu"):
    small = MlpArchitecture(3, (4, 2), act)
    large = MlpArchitecture(3, (7, 6), act)
    b = init_params(small, 0)
    diff = np.abs(forward(large, embed(small, b, large), X) - forward(small, b, X)).max()
    print(f"{act:8s} {count_params(small):3d} -> {count_params(large):3d} params, max output change {diff:.1e}")

# %% Deeper, not just wider
small = MlpArchitecture(3, (4,), "relu")
deep = MlpArchitecture(3, (4, 5, 6), "relu")
b = init_params(small, 0)
print("relu depth 1 -> 3, max output change",
      f"{np.abs(forward(deep, embed(small, b, deep), X) - forward(small, b, X)).max():.1e}")
