"""Fully connected regression networks with a flat parameter vector.

Parameter layout (``beta``): layers in order from input to output; for each
layer the weight matrix of shape ``(fan_out, fan_in)`` flattened row-major,
followed by its ``fan_out`` biases. Hidden layers apply the activation, the
output layer is affine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("relu", "tanh", "sigmoid", "linear")


class ArchitectureError(ValueError):
    pass


@dataclass(frozen=True)
class MlpArchitecture:
    input_dim: int
    hidden: tuple[int, ...]
    activation: str = "tanh"
    output_dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        object.__setattr__(self, "activation", self.activation.lower())
        if self.activation not in ACTIVATIONS:
            raise ArchitectureError(f"unknown activation {self.activation!r}")
        if self.input_dim < 1 or self.output_dim < 1:
            raise ArchitectureError("input and output dims must be >= 1")
        if not self.hidden or min(self.hidden) < 1:
            raise ArchitectureError("need at least one hidden layer, all widths >= 1")

    @property
    def widths(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden, self.output_dim)

    @property
    def layer_shapes(self) -> list[tuple[int, int]]:
        """``(fan_out, fan_in)`` per layer."""
        w = self.widths
        return [(w[i + 1], w[i]) for i in range(len(w) - 1)]

    def to_dict(self) -> dict:
        return {"input_dim": self.input_dim, "hidden": list(self.hidden),
                "activation": self.activation, "output_dim": self.output_dim}


def count_params(arch: MlpArchitecture) -> int:
    return sum(o * i + o for o, i in arch.layer_shapes)


def unpack(arch: MlpArchitecture, beta) -> list[tuple[np.ndarray, np.ndarray]]:
    """Views ``[(W, b), ...]`` into ``beta``."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (count_params(arch),):
        raise ArchitectureError(f"beta has shape {beta.shape}, expected ({count_params(arch)},)")
    out, k = [], 0
    for o, i in arch.layer_shapes:
        W = beta[k:k + o * i].reshape(o, i)
        k += o * i
        b = beta[k:k + o]
        k += o
        out.append((W, b))
    return out


def pack(layers) -> np.ndarray:
    return np.concatenate([np.concatenate([W.ravel(), b]) for W, b in layers])


def init_params(arch: MlpArchitecture, seed: int) -> np.ndarray:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    layers = []
    for o, i in arch.layer_shapes:
        lim = np.sqrt(6.0 / (i + o))
        layers.append((rng.uniform(-lim, lim, (o, i)), np.zeros(o)))
    return pack(layers)


def _act(name, z):
    if name == "tanh":
        return np.tanh(z)
    if name == "sigmoid":
        # tanh form avoids overflow warnings for large |z|
        return 0.5 * (1.0 + np.tanh(0.5 * z))
    if name == "relu":
        return np.maximum(z, 0.0)
    return z


def _act_grad(name, z, a):
    """Derivative of the activation given pre-activation ``z`` and output ``a``."""
    if name == "tanh":
        return 1.0 - a * a
    if name == "sigmoid":
        return a * (1.0 - a)
    if name == "relu":
        return (z > 0).astype(float)
    return np.ones_like(z)


def _check_inputs(arch, X):
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != arch.input_dim:
        raise ArchitectureError(f"input has {X.shape[1]} features, network expects {arch.input_dim}")
    return X, single


def forward(arch: MlpArchitecture, beta, X) -> np.ndarray:
    """Network output for one input vector or a batch ``(n, input_dim)``."""
    X, single = _check_inputs(arch, X)
    layers = unpack(arch, beta)
    h = X
    for W, b in layers[:-1]:
        h = _act(arch.activation, h @ W.T + b)
    W, b = layers[-1]
    out = h @ W.T + b
    return out[0] if single else out


def jacobian(arch: MlpArchitecture, beta, X) -> np.ndarray:
    """Derivative of the outputs with respect to ``beta``.

    Rows are ordered sample-major (sample 0 outputs 0..K-1, sample 1 ...),
    shape ``(n * output_dim, n_params)``. Since the residual is
    ``prediction - target``, this is also the residual Jacobian.
    """
    X, _ = _check_inputs(arch, X)
    layers = unpack(arch, beta)
    n, K = len(X), arch.output_dim
    hs, zs = [X], []
    for W, b in layers[:-1]:
        z = hs[-1] @ W.T + b
        zs.append(z)
        hs.append(_act(arch.activation, z))
    grads = [_act_grad(arch.activation, z, h) for z, h in zip(zs, hs[1:])]

    J = np.empty((n, K, count_params(arch)))
    # delta[n, k, j]: d output_k / d pre-activation_j of the current layer
    delta = np.broadcast_to(np.eye(K), (n, K, K))
    offsets = np.cumsum([0] + [o * i + o for o, i in arch.layer_shapes])
    for li in range(len(layers) - 1, -1, -1):
        o, i = arch.layer_shapes[li]
        h_in = hs[li]
        start = offsets[li]
        J[:, :, start:start + o * i] = (delta[:, :, :, None] * h_in[:, None, None, :]).reshape(n, K, o * i)
        J[:, :, start + o * i:start + o * i + o] = delta
        if li > 0:
            W = layers[li][0]
            delta = (delta @ W) * grads[li - 1][:, None, :]
    return J.reshape(n * K, -1)


def embed(small: MlpArchitecture, beta_small, large: MlpArchitecture) -> np.ndarray:
    """Parameters for ``large`` reproducing the function of ``small``.

    Width padding (same depth, every width at least as large): the original
    weights occupy the top-left block and everything else is zero. Padded
    neurons see zero pre-activation and have zero outgoing weights, so the
    output is unchanged for every activation.

    Extra depth: appended hidden layers carry an identity block and zero
    bias. This is exact only when the activation is idempotent on hidden
    outputs, i.e. ``linear`` or ``relu``; other activations are rejected.
    Each appended layer must be at least as wide as the last original one.
    """
    if (small.input_dim, small.output_dim) != (large.input_dim, large.output_dim):
        raise ArchitectureError("input/output dims must match")
    if small.activation != large.activation:
        raise ArchitectureError("activations must match")
    m, M = len(small.hidden), len(large.hidden)
    if M < m or any(N < n for n, N in zip(small.hidden, large.hidden)):
        raise ArchitectureError(f"{large.hidden} is not at least as large as {small.hidden}")
    if M > m:
        if small.activation not in ("linear", "relu"):
            raise ArchitectureError(
                f"adding layers is not exact for {small.activation!r}; only linear or relu")
        if any(N < small.hidden[-1] for N in large.hidden[m:]):
            raise ArchitectureError("appended layers must be at least as wide as the last original layer")

    src = unpack(small, beta_small)
    out = []
    big_shapes = large.layer_shapes
    for li in range(m):
        o, i = big_shapes[li]
        W = np.zeros((o, i))
        b = np.zeros(o)
        w_s, b_s = src[li]
        W[:w_s.shape[0], :w_s.shape[1]] = w_s
        b[:b_s.shape[0]] = b_s
        out.append((W, b))
    carry = small.hidden[-1]
    for li in range(m, M):
        o, i = big_shapes[li]
        W = np.zeros((o, i))
        W[:carry, :carry] = np.eye(carry)
        out.append((W, np.zeros(o)))
    o, i = big_shapes[-1]
    W = np.zeros((o, i))
    w_s, b_s = src[-1]
    W[:, :w_s.shape[1]] = w_s
    out.append((W, b_s.copy()))
    return pack(out)
