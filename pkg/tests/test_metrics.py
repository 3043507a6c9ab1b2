import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lmbo.metrics import bundle, mape, mse, parameter_efficiency, rmse

finite = st.floats(-1e3, 1e3, allow_nan=False)
nonzero = st.floats(0.01, 1e3) | st.floats(-1e3, -0.01)


class TestErrors:
    def test_equal(self):
        y = [1.0, -2.0, 3.5]
        assert mse(y, y) == 0 == rmse(y, y) == mape(y, y)

    def test_unit_offset(self):
        assert mse([0, 0], [1, 1]) == 1.0 and rmse([0, 0], [1, 1]) == 1.0

    def test_loop_oracle(self):
        rng = np.random.default_rng(0)
        y, p = rng.normal(size=200) + 5, rng.normal(size=200) + 5
        assert mse(y, p) == pytest.approx(sum((a - b) ** 2 for a, b in zip(y, p)) / 200, abs=1e-12)
        assert mape(y, p) == pytest.approx(100 * sum(abs(a - b) / abs(a) for a, b in zip(y, p)) / 200, rel=1e-12)

    def test_mape_example(self):
        assert mape([100.0], [99.0]) == pytest.approx(1.0, abs=1e-12)

    def test_mape_zero_target(self):
        with pytest.raises(ValueError, match="zero"):
            mape([1.0, 0.0], [1.0, 1.0])

    @pytest.mark.parametrize("fn", [mse, rmse, mape])
    def test_shape_errors(self, fn):
        with pytest.raises(ValueError):
            fn([1.0, 2.0], [1.0])
        with pytest.raises(ValueError):
            fn([], [])

    @settings(max_examples=100)
    @given(st.lists(st.tuples(nonzero, finite), min_size=1, max_size=30), st.floats(0.1, 50) | st.floats(-50, -0.1))
    def test_properties(self, pairs, c):
        y, p = np.array(pairs).T
        assert rmse(y, p) ** 2 == pytest.approx(mse(y, p), rel=1e-12, abs=1e-300)
        assert mse(y, p) >= 0 and mape(y, p) >= 0
        assert mape(c * y, c * p) == pytest.approx(mape(y, p), rel=1e-9, abs=1e-9)
        b = bundle(y, p)
        assert b.rmse == pytest.approx(np.sqrt(b.mse), rel=1e-12) and b.n == len(y)


class TestParameterEfficiency:
    @pytest.mark.parametrize("mape_pct,n,expected", [
        (0.141, 865, 9.93e-4),
        (1.053, 35329, 0.0),
        (0.124, 5313, 1.649e-4),
    ])
    def test_table_rows(self, mape_pct, n, expected):
        assert parameter_efficiency(mape_pct, n, 100) == pytest.approx(expected, rel=1e-3, abs=1e-12)

    def test_clamp_boundary(self):
        assert parameter_efficiency(1.0, 10, 100) == 0.0
        assert parameter_efficiency(0.999, 10, 100) > 0

    @settings(max_examples=100)
    @given(st.floats(0, 3), st.floats(0, 3), st.integers(1, 10**5), st.integers(1, 10**5))
    def test_monotone(self, m1, m2, n1, n2):
        lo_m, hi_m = sorted((m1, m2))
        lo_n, hi_n = sorted((n1, n2))
        assert parameter_efficiency(hi_m, lo_n) <= parameter_efficiency(lo_m, lo_n)
        assert parameter_efficiency(lo_m, hi_n) <= parameter_efficiency(lo_m, lo_n)
        assert (parameter_efficiency(hi_m, lo_n) == 0) == (hi_m >= 1.0)

    def test_invalid(self):
        with pytest.raises(ValueError):
            parameter_efficiency(0.1, 0)
        with pytest.raises(ValueError):
            parameter_efficiency(0.1, 10, zeta=0)
