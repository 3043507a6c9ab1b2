import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import dense_corr, mixed_space, random_doe
from lmbo.design_space import aero_space, build_space, continuous
from lmbo.kernels import (
    SingularCorrelationError,
    ThetaLayout,
    corr_matrix,
    cross_correlation,
    factorize,
    k_cat_cr,
    k_cat_gd,
    k_cont,
    k_mixed,
)

LEVELS = ("relu", "tanh", "sigmoid")


class TestContinuous:
    def test_zero_distance(self):
        assert k_cont([0.3, -2.0], [0.3, -2.0], [5.0, 0.1]) == 1.0

    def test_closed_form(self):
        assert k_cont([0.0], [1.0], [1.0]) == pytest.approx(math.exp(-1))

    def test_small_theta_limit(self):
        assert k_cont([0.0, 0.0], [1.0, 1.0], [1e-12, 1e-12]) == pytest.approx(1.0)

    def test_rejects_nonpositive_theta(self):
        with pytest.raises(ValueError):
            k_cont([0.0], [1.0], [0.0])


class TestCategorical:
    def test_cr_same_level(self):
        assert k_cat_cr("tanh", "tanh", [1, 1, 1], LEVELS) == 1.0

    def test_cr_different_levels(self):
        assert k_cat_cr("tanh", "relu", [1, 1, 1], LEVELS) == pytest.approx(math.exp(-2))

    def test_cr_limit(self):
        assert k_cat_cr("tanh", "relu", [1e-12] * 3, LEVELS) == pytest.approx(1.0)

    def test_cr_two_levels_is_exp_minus_two_theta(self):
        for t in (0.1, 1.0, 7.5):
            assert k_cat_cr("a", "b", [t, t], ("a", "b")) == pytest.approx(math.exp(-2 * t))

    def test_gd(self):
        assert k_cat_gd("relu", "relu", 3.0, LEVELS) == 1.0
        assert k_cat_gd("relu", "tanh", 1.0, LEVELS) == pytest.approx(math.exp(-1))
        assert k_cat_gd("relu", "tanh", 1e6, LEVELS) == 0.0

    @pytest.mark.parametrize("fn,arg", [(k_cat_cr, [1, 1, 1]), (k_cat_gd, 1.0)])
    def test_unknown_level(self, fn, arg):
        with pytest.raises(ValueError):
            fn("elu", "relu", arg, LEVELS)


class TestMixed:
    def test_identity(self, space):
        lay = ThetaLayout.from_space(space)
        w = space.encode(space.sample_random(1, 0)[0])
        assert k_mixed(w, w, np.ones(lay.n_theta), lay) == 1.0

    def test_continuous_only_equals_k_cont(self):
        s = build_space([continuous("a", 0.0, 1.0), continuous("b", 0.0, 1.0)])
        lay = ThetaLayout.from_space(s)
        th = np.array([0.7, 3.0])
        assert k_mixed([0.1, 0.2], [0.9, 0.5], th, lay) == k_cont([0.1, 0.2], [0.9, 0.5], th)

    @pytest.mark.parametrize("kind", ["cr", "gd"])
    def test_differ_only_in_activation(self, kind):
        s = aero_space()
        lay = ThetaLayout.from_space(s, kind)
        rng = np.random.default_rng(0)
        th = rng.uniform(0.1, 5.0, lay.n_theta)
        a = s.encode(s.point([3, 20, 35, 60, "relu"]))
        b = s.encode(s.point([3, 20, 35, 60, "sigmoid"]))
        tf = th[lay.theta_slices[4]]
        expected = k_cat_cr("relu", "sigmoid", tf, LEVELS) if kind == "cr" else k_cat_gd("relu", "sigmoid", tf[0], LEVELS)
        assert k_mixed(a, b, th, lay) == pytest.approx(expected, rel=1e-14)

    def test_product_of_factors(self, space):
        lay = ThetaLayout.from_space(space)
        rng = np.random.default_rng(1)
        th = rng.uniform(0.1, 3.0, lay.n_theta)
        p, q = space.sample_random(2, 5)
        w1, w2 = space.encode(p), space.encode(q)
        prod = 1.0
        for ts, es in zip(lay.theta_slices, lay.encoded_slices):
            prod *= k_cont(w1[es], w2[es], th[ts])
        assert k_mixed(w1, w2, th, lay) == pytest.approx(prod, rel=1e-13)

    def test_layout_mismatch(self, space):
        lay = ThetaLayout.from_space(space)
        with pytest.raises(ValueError):
            k_mixed(np.zeros(3), np.zeros(3), np.ones(lay.n_theta), lay)
        with pytest.raises(ValueError):
            k_mixed(np.zeros(lay.encoded_dim), np.zeros(lay.encoded_dim), np.ones(2), lay)

    def test_layout_sizes(self):
        s = aero_space()
        assert ThetaLayout.from_space(s, "cr").n_theta == 4 + 3
        assert ThetaLayout.from_space(s, "gd").n_theta == 4 + 1

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000), st.sampled_from(["cr", "gd"]))
    def test_symmetry_and_bounds(self, seed, kind):
        s = mixed_space()
        lay = ThetaLayout.from_space(s, kind)
        rng = np.random.default_rng(seed)
        th = 10 ** rng.uniform(-2, 1, lay.n_theta)
        p, q = s.sample_random(2, seed)
        w1, w2 = s.encode(p), s.encode(q)
        k12 = k_mixed(w1, w2, th, lay)
        assert k12 == k_mixed(w2, w1, th, lay)
        assert 0.0 < k12 <= 1.0
        if np.array_equal(w1, w2):
            assert k12 == 1.0
        else:
            assert k12 < 1.0


class TestCorrMatrix:
    def test_single_point(self, space):
        lay = ThetaLayout.from_space(space)
        W = space.encode_many(space.sample_random(1, 0))
        np.testing.assert_array_equal(corr_matrix(W, np.ones(lay.n_theta), lay, 1e-10), [[1 + 1e-10]])

    def test_duplicate_points_singular(self, space):
        lay = ThetaLayout.from_space(space)
        w = space.encode(space.sample_random(1, 0)[0])
        R = corr_matrix(np.vstack([w, w]), np.ones(lay.n_theta), lay, 0.0)
        with pytest.raises(SingularCorrelationError):
            factorize(R, 0.0, escalate=False)
        # escalation repairs exact duplicates with a nugget <= 1e-4
        _, nug = factorize(R, 0.0)
        assert 0 < nug <= 1e-4

    def test_matches_brute_force(self):
        s = aero_space()
        lay = ThetaLayout.from_space(s)
        _, W = random_doe(s, 5, 3)
        th = np.random.default_rng(3).uniform(0.2, 4.0, lay.n_theta)
        np.testing.assert_allclose(corr_matrix(W, th, lay, 1e-10), dense_corr(W, th, lay, 1e-10), rtol=0, atol=1e-14)
        np.testing.assert_allclose(cross_correlation(W, W, th, lay), dense_corr(W, th, lay, 0.0), atol=1e-12)

    def test_structure(self, space):
        lay = ThetaLayout.from_space(space)
        _, W = random_doe(space, 12, 4)
        R = corr_matrix(W, np.full(lay.n_theta, 0.5), lay, 1e-10)
        np.testing.assert_array_equal(R, R.T)
        np.testing.assert_array_equal(np.diag(R), 1 + 1e-10)
        off = R[~np.eye(len(R), dtype=bool)]
        assert np.all((off > 0) & (off <= 1))

    @pytest.mark.parametrize("kind", ["cr", "gd"])
    def test_psd_on_random_does(self, kind):
        s = mixed_space()
        lay = ThetaLayout.from_space(s, kind)
        rng = np.random.default_rng(7)
        for trial in range(50):
            n = int(rng.integers(2, 31))
            _, W = random_doe(s, n, trial)
            th = 10 ** rng.uniform(-2, 1.5, lay.n_theta)
            assert np.linalg.eigvalsh(corr_matrix(W, th, lay, 1e-10)).min() >= -1e-10

    def test_negative_nugget(self, space):
        lay = ThetaLayout.from_space(space)
        with pytest.raises(ValueError):
            corr_matrix(np.zeros((1, lay.encoded_dim)), np.ones(lay.n_theta), lay, -1.0)
