import numpy as np
import pytest

from metrics import precision_at_k, re_at_k, top_k, total_mse


class TestTopK:

    def test_ties_go_to_smaller_index(self):
        assert top_k([5, 7, 7, 1], 2).tolist() == [1, 2]
        assert top_k([3, 3, 3], 1).tolist() == [0]

    def test_k_range(self):
        with pytest.raises(ValueError):
            top_k([1, 2], 3)


class TestTotalMse:

    def test_value(self):
        assert total_mse([1, 2, 3], [1, 0, 4], 5) == pytest.approx((0 + 4 + 1) / 5)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            total_mse([1, 2], [1, 2, 3], 3)

    def test_positive_n(self):
        with pytest.raises(ValueError):
            total_mse([1], [1], 0)


class TestRelativeError:

    def test_exact_estimates(self):
        truth = np.array([10, 50, 30, 0])
        assert re_at_k(truth, truth, 3) == 0.0

    def test_value(self):
        truth = np.array([100, 50, 10])
        estimates = np.array([110, 40, 0])
        # top-2 of the truth is items 1 and 2
        assert re_at_k(estimates, truth, 2) == pytest.approx((0.1 + 0.2) / 2)

    def test_k_limited_to_positive_counts(self):
        with pytest.raises(ValueError):
            re_at_k([1, 1, 1], [5, 0, 0], 2)


class TestPrecision:

    def test_full_domain(self):
        rng = np.random.default_rng(0)
        truth = rng.integers(0, 100, size=20)
        estimates = rng.normal(size=20)
        assert precision_at_k(estimates, truth, 20) == 1.0

    def test_partial_overlap(self):
        truth = np.array([9, 8, 1, 0])
        estimates = np.array([9, 0, 8, 1])
        assert precision_at_k(estimates, truth, 2) == 0.5
