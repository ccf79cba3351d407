import math

import numpy as np
import pytest

from model import (Dataset, GRRParameters, PerturbationProfile, PrivacyModel, ReportBatch, RKind, parse_budget,
                   r_eval, true_counts)
from tests.conftest import LN4, LN6


class TestParseBudget:

    def test_ln_literal(self):
        assert parse_budget("ln(4)") == pytest.approx(LN4)
        assert parse_budget(" LN( 6 ) ") == pytest.approx(LN6)

    def test_numbers(self):
        assert parse_budget(1.5) == 1.5
        assert parse_budget("2") == 2.0

    @pytest.mark.parametrize("value", [0, -1.0, "ln(1)", "ln(0.5)", "abc", True, float("inf")])
    def test_rejects(self, value):
        with pytest.raises(ValueError):
            parse_budget(value)


class TestPrivacyModel:

    def test_r_min_and_avg(self):
        model = PrivacyModel.from_level_sizes((LN4, LN6), (1, 1), RKind.MIN)
        assert r_eval(model, 0, 1) == pytest.approx(LN4)
        avg = PrivacyModel.from_level_sizes((LN4, LN6), (1, 1), RKind.AVG)
        assert r_eval(avg, 0, 1) == pytest.approx((LN4 + LN6) / 2)

    def test_r_is_symmetric_and_bounded(self):
        model = PrivacyModel.from_level_sizes((0.5, 1.0, 2.0), (1, 1, 1), RKind.AVG)
        matrix = model.r_matrix()
        assert np.allclose(matrix, matrix.T)
        for i in range(3):
            for j in range(3):
                assert min(model.budgets[i], model.budgets[j]) <= matrix[i, j] <= max(model.budgets[i], model.budgets[j])

    def test_unknown_level(self, toy_model):
        with pytest.raises(IndexError):
            r_eval(toy_model, 0, 2)

    def test_contiguous_levels(self, toy_model):
        assert toy_model.m == 5
        assert toy_model.level_sizes == (1, 4)
        assert toy_model.level_of(1) == 0
        assert toy_model.level_of(5) == 1
        assert toy_model.min_level == 0
        with pytest.raises(IndexError):
            toy_model.level_of(6)

    def test_restrict_reindexes(self, toy_model):
        small = toy_model.restrict([1, 4])
        assert small.m == 2
        assert small.item_budget(1) == pytest.approx(LN4)
        assert small.item_budget(2) == pytest.approx(LN6)

    def test_invalid(self):
        with pytest.raises(ValueError):
            PrivacyModel((LN4,), (1,))
        with pytest.raises(ValueError):
            PrivacyModel((0.0,), (0,))


class TestPerturbationProfile:

    def test_strict_ordering(self):
        with pytest.raises(ValueError):
            PerturbationProfile((0.3,), (0.5,))
        with pytest.raises(ValueError):
            PerturbationProfile((1.0,), (0.0,))
        identity = PerturbationProfile.unchecked((1.0,), (0.0,))
        assert identity.a == (1.0,)

    def test_dummy_pair_must_be_complete(self):
        with pytest.raises(ValueError):
            PerturbationProfile((0.6,), (0.3,), dummy_a=0.6)

    def test_position_probabilities(self, toy_model, toy_profile):
        a_pos, b_pos = toy_profile.position_probabilities(toy_model, padded_len=2)
        assert a_pos.tolist() == [0.59, 0.67, 0.67, 0.67, 0.67, 0.59, 0.59]
        assert b_pos.tolist() == [0.33, 0.28, 0.28, 0.28, 0.28, 0.33, 0.33]

    def test_padding_needs_dummy(self, toy_model):
        profile = PerturbationProfile((0.59, 0.67), (0.33, 0.28))
        with pytest.raises(ValueError):
            profile.position_probabilities(toy_model, padded_len=1)

    def test_fingerprint_is_stable(self, toy_profile):
        again = PerturbationProfile((0.59, 0.67), (0.33, 0.28), 0.59, 0.33)
        assert toy_profile.fingerprint() == again.fingerprint()
        assert len(toy_profile.fingerprint()) == 16


class TestGRRParameters:

    def test_sums_to_one(self):
        GRRParameters(0.5, 0.125, 5)
        with pytest.raises(ValueError):
            GRRParameters(0.5, 0.2, 5)


class TestDataset:

    def test_records_are_sorted(self):
        dataset = Dataset(4, ((3, 1), (2,), ()))
        assert dataset.records == ((1, 3), (2,), ())
        assert dataset.n == 3
        assert dataset.sizes.tolist() == [2, 1, 0]
        assert not dataset.is_single_item

    def test_duplicates_rejected(self):
        with pytest.raises(ValueError):
            Dataset(4, ((1, 1),))

    def test_ids_in_range(self):
        with pytest.raises(ValueError):
            Dataset(3, ((4,),))

    def test_true_counts(self):
        dataset = Dataset(3, ((1, 2), (2,), (2, 3)))
        assert true_counts(dataset).tolist() == [1, 3, 1]


class TestReportBatch:

    def test_counts_within_n(self):
        with pytest.raises(ValueError):
            ReportBatch(np.array([3, 1]), 2)

    def test_merge(self):
        merged = ReportBatch(np.array([1, 2]), 3).merge(ReportBatch(np.array([2, 0]), 2))
        assert merged.bit_counts.tolist() == [3, 2]
        assert merged.n == 5
        assert math.isclose(merged.m, 2)
