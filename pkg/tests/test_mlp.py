import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lmbo.mlp import (
    ArchitectureError,
    MlpArchitecture,
    count_params,
    embed,
    forward,
    init_params,
    jacobian,
    pack,
    unpack,
)


def fd_jacobian(arch, beta, X):
    F = np.empty((len(X) * arch.output_dim, len(beta)))
    for i in range(len(beta)):
        h = 1e-6 * (1 + abs(beta[i]))
        e = np.zeros_like(beta)
        e[i] = h
        F[:, i] = ((forward(arch, beta + e, X) - forward(arch, beta - e, X)) / (2 * h)).ravel()
    return F


def jac_rel_error(arch, beta, X):
    J, F = jacobian(arch, beta, X), fd_jacobian(arch, beta, X)
    return float((np.abs(J - F) / np.maximum(np.abs(F), 1e-2)).max())


def random_arch(rng, act):
    hidden = tuple(int(h) for h in rng.integers(1, 7, rng.integers(1, 4)))
    return MlpArchitecture(int(rng.integers(1, 5)), hidden, act, int(rng.integers(1, 3)))


class TestCounting:
    @pytest.mark.parametrize("hidden,expected", [((48,), 865), ((50, 50, 60), 6521)])
    def test_table_counts(self, hidden, expected):
        assert count_params(MlpArchitecture(16, hidden)) == expected

    def test_minimal(self):
        assert count_params(MlpArchitecture(1, (1,))) == 4

    def test_baseline(self):
        assert count_params(MlpArchitecture(5, (20, 20))) == 5 * 20 + 20 + 20 * 20 + 20 + 21

    @pytest.mark.parametrize("kw", [
        {"input_dim": 0, "hidden": (3,)},
        {"input_dim": 2, "hidden": ()},
        {"input_dim": 2, "hidden": (0,)},
        {"input_dim": 2, "hidden": (3,), "activation": "elu"},
    ])
    def test_invalid(self, kw):
        with pytest.raises(ArchitectureError):
            MlpArchitecture(**kw)


class TestInit:
    def test_deterministic(self):
        a = MlpArchitecture(4, (6, 5))
        np.testing.assert_array_equal(init_params(a, 3), init_params(a, 3))
        assert not np.array_equal(init_params(a, 3), init_params(a, 4))

    def test_zero_biases(self):
        a = MlpArchitecture(4, (6, 5), output_dim=2)
        for _, b in unpack(a, init_params(a, 0)):
            assert np.all(b == 0)

    def test_glorot_range(self):
        a = MlpArchitecture(100, (100,))
        W, _ = unpack(a, init_params(a, 1))[0]
        lim = np.sqrt(6 / 200)
        assert W.size == 10_000
        assert np.all(np.abs(W) <= lim)
        assert np.abs(W).max() > 0.99 * lim

    def test_pack_roundtrip(self):
        a = MlpArchitecture(3, (4, 2), output_dim=2)
        b = np.arange(count_params(a), dtype=float)
        np.testing.assert_array_equal(pack(unpack(a, b)), b)
        W0, b0 = unpack(a, b)[0]
        np.testing.assert_array_equal(W0, np.arange(12).reshape(4, 3))
        np.testing.assert_array_equal(b0, [12, 13, 14, 15])


class TestForward:
    def test_zero_params(self):
        a = MlpArchitecture(3, (5, 4), "sigmoid")
        X = np.random.default_rng(0).normal(size=(10, 3))
        np.testing.assert_array_equal(forward(a, np.zeros(count_params(a)), X), 0.0)

    def test_tiny_tanh(self):
        a = MlpArchitecture(1, (1,), "tanh")
        assert forward(a, np.array([1.0, 0.0, 1.0, 0.0]), [0.0])[0] == 0.0

    @pytest.mark.parametrize("act", ["relu", "tanh", "sigmoid", "linear"])
    def test_dense_oracle(self, act):
        rng = np.random.default_rng(1)
        a = MlpArchitecture(2, (3,), act)
        b = rng.normal(size=count_params(a))
        W1, b1 = b[:6].reshape(3, 2), b[6:9]
        W2, b2 = b[9:12].reshape(1, 3), b[12:13]
        f = {"relu": lambda z: np.maximum(z, 0), "tanh": np.tanh,
             "sigmoid": lambda z: 1 / (1 + np.exp(-z)), "linear": lambda z: z}[act]
        for x in rng.normal(size=(50, 2)):
            expected = W2 @ f(W1 @ x + b1) + b2
            np.testing.assert_allclose(forward(a, b, x), expected, rtol=0, atol=1e-12)

    def test_batch_shape(self):
        a = MlpArchitecture(3, (4,), output_dim=2)
        b = init_params(a, 0)
        assert forward(a, b, np.zeros((7, 3))).shape == (7, 2)
        assert forward(a, b, np.zeros(3)).shape == (2,)

    def test_dimension_mismatch(self):
        a = MlpArchitecture(3, (4,))
        with pytest.raises(ArchitectureError):
            forward(a, init_params(a, 0), np.zeros((2, 4)))
        with pytest.raises(ArchitectureError):
            forward(a, np.zeros(5), np.zeros((2, 3)))

    def test_sigmoid_saturates_quietly(self):
        a = MlpArchitecture(1, (1,), "sigmoid")
        with np.errstate(all="raise"):
            out = forward(a, np.array([1.0, 0.0, 1.0, 0.0]), np.array([[-1e4], [1e4]]))
        np.testing.assert_allclose(out.ravel(), [0.0, 1.0])


class TestJacobian:
    def test_affine_columns(self):
        # linear activation, one hidden unit with unit weights: output = w2 (W1 x + b1) + b2
        a = MlpArchitecture(3, (1,), "linear")
        b = np.array([0.5, -1.0, 2.0, 0.3, 1.0, 0.0])
        X = np.array([[1.0, 2.0, 3.0], [-1.0, 0.5, 0.0]])
        J = jacobian(a, b, X)
        np.testing.assert_array_equal(J[:, :3], X)  # dy/dW1 = w2 * x
        np.testing.assert_array_equal(J[:, 3], 1.0)
        np.testing.assert_array_equal(J[:, 5], 1.0)  # output bias

    def test_zero_input(self):
        a = MlpArchitecture(2, (3,), "tanh")
        b = init_params(a, 2)
        J = jacobian(a, b, np.zeros((1, 2)))
        W1_cols = [i for i in range(6)]
        np.testing.assert_array_equal(J[0, W1_cols], 0.0)
        assert np.any(J[0, 6:9] != 0) and J[0, -1] == 1.0

    @pytest.mark.parametrize("act", ["relu", "tanh", "sigmoid", "linear"])
    def test_finite_differences(self, act):
        rng = np.random.default_rng(hash(act) % 2**32)
        for _ in range(20):
            a = random_arch(rng, act)
            b = rng.normal(size=count_params(a))
            X = rng.normal(size=(6, a.input_dim))
            assert jac_rel_error(a, b, X) <= 1e-5

    def test_sample_major_rows(self):
        a = MlpArchitecture(2, (3,), "tanh", output_dim=2)
        b = init_params(a, 0)
        X = np.random.default_rng(0).normal(size=(4, 2))
        J = jacobian(a, b, X)
        np.testing.assert_allclose(J[2:4], jacobian(a, b, X[1:2]), atol=0)


class TestEmbed:
    def test_identity(self):
        a = MlpArchitecture(3, (4, 5), "relu")
        b = init_params(a, 0)
        np.testing.assert_array_equal(embed(a, b, a), b)

    @pytest.mark.parametrize("act", ["relu", "tanh", "sigmoid"])
    def test_width_padding(self, act):
        rng = np.random.default_rng(0)
        s, L = MlpArchitecture(2, (2, 2), act), MlpArchitecture(2, (4, 4), act)
        b = rng.normal(size=count_params(s))
        X = rng.normal(size=(100, 2))
        assert np.abs(forward(L, embed(s, b, L), X) - forward(s, b, X)).max() <= 1e-12

    def test_depth_linear(self):
        rng = np.random.default_rng(1)
        s, L = MlpArchitecture(2, (2,), "linear"), MlpArchitecture(2, (3, 3), "linear")
        b = rng.normal(size=count_params(s))
        X = rng.normal(size=(100, 2))
        assert np.abs(forward(L, embed(s, b, L), X) - forward(s, b, X)).max() <= 1e-12

    def test_depth_relu(self):
        rng = np.random.default_rng(2)
        s, L = MlpArchitecture(3, (4,), "relu"), MlpArchitecture(3, (5, 6, 4), "relu")
        b = rng.normal(size=count_params(s))
        X = rng.normal(size=(100, 3))
        assert np.abs(forward(L, embed(s, b, L), X) - forward(s, b, X)).max() <= 1e-12

    @pytest.mark.parametrize("act", ["tanh", "sigmoid"])
    def test_depth_nonlinear_rejected(self, act):
        with pytest.raises(ArchitectureError):
            embed(MlpArchitecture(2, (2,), act), np.zeros(9), MlpArchitecture(2, (2, 2), act))

    def test_not_larger(self):
        s = MlpArchitecture(2, (4,), "tanh")
        with pytest.raises(ArchitectureError):
            embed(s, init_params(s, 0), MlpArchitecture(2, (3,), "tanh"))
        with pytest.raises(ArchitectureError):
            embed(s, init_params(s, 0), MlpArchitecture(3, (4,), "tanh"))
        with pytest.raises(ArchitectureError):
            embed(s, init_params(s, 0), MlpArchitecture(2, (4,), "relu"))

    def test_narrow_extra_layer_rejected(self):
        s = MlpArchitecture(2, (4,), "linear")
        with pytest.raises(ArchitectureError):
            embed(s, init_params(s, 0), MlpArchitecture(2, (4, 3), "linear"))

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.integers(1, 5), min_size=1, max_size=3), st.data(),
           st.sampled_from(["relu", "tanh", "sigmoid"]))
    def test_padding_property(self, hidden, data, act):
        pad = data.draw(st.lists(st.integers(0, 3), min_size=len(hidden), max_size=len(hidden)))
        s = MlpArchitecture(3, tuple(hidden), act, 2)
        L = MlpArchitecture(3, tuple(h + p for h, p in zip(hidden, pad)), act, 2)
        rng = np.random.default_rng(sum(hidden) + sum(pad))
        b = rng.normal(size=count_params(s))
        X = rng.normal(size=(20, 3))
        big = embed(s, b, L)
        assert np.abs(forward(L, big, X) - forward(s, b, X)).max() <= 1e-12
        if any(pad):
            assert count_params(L) > count_params(s)
