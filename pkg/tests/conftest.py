import numpy as np
import pytest

from lmbo.design_space import build_space, categorical, continuous, integer, ordinal
from lmbo.kernels import k_mixed


def mixed_space():
    """Small space touching every kind and role."""
    return build_space([
        integer("m", 1, 2, role="meta"),
        continuous("x", -1.0, 2.0),
        ordinal("o", (1, 2, 4, 8)),
        categorical("c", ("a", "b", "c")),
        integer("k", 0, 6, role="decreed", parent="m", active_when={2}),
    ])


def toy_values(W):
    W = np.atleast_2d(W)
    return np.sin(3 * W[:, 1]) + W[:, 2] ** 2 + 0.5 * W[:, 3] - W[:, 5] + 0.3 * W[:, -1]


def random_doe(space, n, seed):
    pts = list(dict.fromkeys(space.sample_random(3 * n, seed)))[:n]
    return pts, space.encode_many(pts)


def dense_corr(W, theta, layout, nugget):
    n = len(W)
    R = np.array([[k_mixed(W[i], W[j], theta, layout) for j in range(n)] for i in range(n)])
    return R + nugget * np.eye(n)


class DenseGp:
    """Explicit-inverse ordinary Kriging used as an oracle."""

    def __init__(self, W, y, theta, layout, nugget):
        self.W, self.y, self.theta, self.layout = W, y, theta, layout
        R = dense_corr(W, theta, layout, nugget)
        self.Ri = np.linalg.inv(R)
        one = np.ones(len(y))
        self.mu = one @ self.Ri @ y / (one @ self.Ri @ one)
        res = y - self.mu
        self.sigma2 = res @ self.Ri @ res / len(y)
        n = len(y)
        _, logdet = np.linalg.slogdet(R)
        self.loglik = -0.5 * n * np.log(self.sigma2) - 0.5 * logdet - 0.5 * n * (np.log(2 * np.pi) + 1)

    def r(self, w):
        return np.array([k_mixed(w, wi, self.theta, self.layout) for wi in self.W])

    def mean(self, w):
        return self.mu + self.r(w) @ self.Ri @ (self.y - self.mu)

    def var(self, w):
        r, one = self.r(w), np.ones(len(self.y))
        u = 1.0 - one @ self.Ri @ r
        return self.sigma2 * (1.0 - r @ self.Ri @ r + u * u / (one @ self.Ri @ one))


@pytest.fixture
def space():
    return mixed_space()
