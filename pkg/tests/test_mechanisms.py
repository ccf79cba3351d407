import itertools

import numpy as np
import pytest

from mechanisms import (GeneralizedRandomizedResponse, PaddedUnaryEncoding, RandomSource, UnaryEncoding,
                        encode_onehot, grr_perturb, grr_perturb_many, idue_ps, pad_and_sample, perturb_ue,
                        perturb_ue_by_blocks, sample_padded_positions, sampling_distribution, simulate_ue_batch)
from model import Dataset, GRRParameters, PrivacyModel
from optimizer import Baseline, baseline_profile
from tests.conftest import LN4, LN6


class TestEncoding:

    def test_onehot(self):
        assert encode_onehot(2, 4).tolist() == [False, True, False, False]

    def test_onehot_range(self):
        with pytest.raises(ValueError):
            encode_onehot(5, 4)
        with pytest.raises(ValueError):
            encode_onehot(0, 4)


class TestRandomSource:

    def test_same_keys_same_draws(self):
        source = RandomSource(42)
        assert source.generator(1, 2).random(5).tolist() == source.generator(1, 2).random(5).tolist()

    def test_keys_separate_streams(self):
        source = RandomSource(42)
        assert source.generator(1, 2).random() != source.generator(1, 3).random()
        assert source.for_user(0).random() != source.for_user(1).random()


class TestUnaryPerturbation:

    def test_exact_output_probability(self, toy_model, toy_profile):
        channel = UnaryEncoding.from_profile(toy_profile, toy_model)
        dist = channel.output_distribution(1)
        assert dist.sum() == pytest.approx(1.0)
        # only bit 1 set
        assert dist[1] == pytest.approx(0.59 * 0.72 ** 4)

    @pytest.mark.slow
    def test_empirical_output_frequency(self, toy_model, toy_profile):
        rng = np.random.default_rng(0)
        a_pos, b_pos = toy_profile.position_probabilities(toy_model)
        bits = encode_onehot(1, 5)
        draws = 200_000
        target = np.array([True, False, False, False, False])
        hits = sum(np.array_equal(perturb_ue(bits, a_pos, b_pos, rng), target) for _ in range(draws))
        expected = 0.59 * 0.72 ** 4
        se = np.sqrt(expected * (1 - expected) / draws)
        assert abs(hits / draws - expected) < 5 * se

    def test_block_sampler_has_same_bit_rates(self, toy_model, toy_profile):
        rng = np.random.default_rng(1)
        a_pos, b_pos = toy_profile.position_probabilities(toy_model, padded_len=2)
        bits = encode_onehot(3, 7)
        draws = 20_000
        rates = np.mean([perturb_ue_by_blocks(bits, a_pos, b_pos, rng) for _ in range(draws)], axis=0)
        expected = np.where(bits, a_pos, b_pos)
        se = np.sqrt(expected * (1 - expected) / draws)
        assert np.all(np.abs(rates - expected) < 5 * se)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            perturb_ue(np.zeros(3, dtype=bool), np.full(2, 0.5), np.full(2, 0.2), np.random.default_rng(0))

    def test_identity_channel_is_lossless(self):
        rng = np.random.default_rng(2)
        bits = encode_onehot(2, 3)
        assert perturb_ue(bits, np.ones(3), np.zeros(3), rng).tolist() == bits.tolist()


class TestGRR:

    def test_self_report_rate(self):
        params = GRRParameters(0.5, 0.125, 5)
        rng = np.random.default_rng(3)
        reports = grr_perturb_many(np.full(100_000, 3), params, rng)
        assert np.mean(reports == 3) == pytest.approx(0.5, abs=0.01)
        others = np.bincount(reports, minlength=6)[[1, 2, 4, 5]] / reports.size
        assert others == pytest.approx([0.125] * 4, abs=0.01)

    def test_single_report(self):
        params = GRRParameters(0.5, 0.125, 5)
        rng = np.random.default_rng(4)
        assert all(1 <= grr_perturb(5, params, rng) <= 5 for _ in range(100))
        with pytest.raises(ValueError):
            grr_perturb(6, params, rng)

    def test_channel(self):
        channel = GeneralizedRandomizedResponse(GRRParameters(0.5, 0.125, 5))
        assert channel.output_distribution(2).tolist() == [0.125, 0.5, 0.125, 0.125, 0.125]


class TestPaddingAndSampling:

    def test_distribution_short_set(self):
        weights = sampling_distribution([2], 3, 4)
        assert weights[1] == pytest.approx(1 / 3)
        assert weights[4:].tolist() == pytest.approx([2 / 9] * 3)
        assert weights.sum() == pytest.approx(1.0)

    def test_distribution_long_set(self):
        weights = sampling_distribution([1, 2, 3, 4], 2, 4)
        assert weights[:4].tolist() == pytest.approx([0.25] * 4)
        assert weights[4:].tolist() == [0.0, 0.0]

    def test_empty_set_samples_a_dummy(self):
        rng = np.random.default_rng(5)
        assert all(5 <= pad_and_sample([], 2, 4, rng) <= 6 for _ in range(50))

    def test_sampler_matches_distribution(self):
        rng = np.random.default_rng(6)
        draws = 60_000
        samples = np.array([pad_and_sample([1, 3], 3, 4, rng) for _ in range(draws)])
        rates = np.bincount(samples, minlength=8)[1:] / draws
        expected = sampling_distribution([1, 3], 3, 4)
        se = np.sqrt(expected * (1 - expected) / draws) + 1e-12
        assert np.all(np.abs(rates - expected) <= 5 * se)

    def test_invalid_sets(self):
        rng = np.random.default_rng(7)
        with pytest.raises(ValueError):
            pad_and_sample([1, 1], 2, 4, rng)
        with pytest.raises(ValueError):
            pad_and_sample([5], 2, 4, rng)
        with pytest.raises(ValueError):
            pad_and_sample([1], 0, 4, rng)

    def test_idue_ps_report_length(self, toy_model, toy_profile):
        report = idue_ps([1, 2], toy_profile, toy_model, 3, np.random.default_rng(8))
        assert report.shape == (8,)

    def test_padded_channel_sums_to_one(self):
        model = PrivacyModel((LN4,), (0, 0, 0))
        channel = PaddedUnaryEncoding(baseline_profile(Baseline.OUE, LN4), model, 2)
        assert channel.outcomes == 32
        assert channel.output_distribution((1, 3)).sum() == pytest.approx(1.0)


class TestBatchSimulation:

    def test_expected_counts(self, toy_model, toy_profile):
        a_pos, b_pos = toy_profile.position_probabilities(toy_model)
        counts = np.array([20_000] * 5)
        n = counts.sum()
        rng = np.random.default_rng(9)
        batch = simulate_ue_batch(counts, a_pos, b_pos, rng)
        expected = counts * a_pos + (n - counts) * b_pos
        sd = np.sqrt(counts * a_pos * (1 - a_pos) + (n - counts) * b_pos * (1 - b_pos))
        assert batch.n == n
        assert np.all(np.abs(batch.bit_counts - expected) < 5 * sd)

    def test_padded_positions_follow_sampling_law(self):
        dataset = Dataset(4, ((1, 2),) * 20_000 + ((3,),) * 20_000 + ((1, 2, 3, 4),) * 20_000)
        rng = np.random.default_rng(10)
        positions = sample_padded_positions(dataset, 2, rng)
        assert positions.min() >= 1 and positions.max() <= 6
        rates = np.bincount(positions, minlength=7)[1:] / dataset.n
        expected = (sampling_distribution([1, 2], 2, 4) + sampling_distribution([3], 2, 4)
                    + sampling_distribution([1, 2, 3, 4], 2, 4)) / 3
        assert rates == pytest.approx(expected, abs=0.01)


def _outcome_index(reports: np.ndarray) -> np.ndarray:
    """Bit k of the outcome index is position k, as in the exact channels."""
    return reports.astype(np.int64) @ (1 << np.arange(reports.shape[-1]))


class TestReportLaw:

    @pytest.mark.parametrize("perturb", [perturb_ue, perturb_ue_by_blocks])
    def test_bits_are_uncorrelated(self, perturb):
        rng = np.random.default_rng(11)
        a_pos, b_pos = np.full(5, 0.6), np.full(5, 0.3)
        draws = 400_000
        # repeated reports in one call
        flat = perturb(np.tile(encode_onehot(2, 5), draws), np.tile(a_pos, draws), np.tile(b_pos, draws), rng)
        reports = flat.reshape(draws, 5)
        assert reports.mean(axis=0) == pytest.approx(np.where(encode_onehot(2, 5), a_pos, b_pos), abs=0.005)
        correlation = np.corrcoef(reports, rowvar=False)
        off_diagonal = correlation[~np.eye(5, dtype=bool)]
        assert np.all(np.abs(off_diagonal) < 0.01)

    def test_padded_channel_closed_form(self, toy_profile):
        model = PrivacyModel.from_level_sizes((LN4, LN6), (1, 1))
        dist = PaddedUnaryEncoding(toy_profile, model, 1).output_distribution([1])
        # item 1 kept, item 2 and the dummy stay down
        assert dist[0b001] == pytest.approx(0.59 * (1 - 0.28) * (1 - 0.33), abs=1e-12)

    @pytest.mark.parametrize("m", [1, 2, 3])
    @pytest.mark.parametrize("padded_len", [1, 2])
    def test_padded_channel_is_sampling_mixture(self, toy_profile, m, padded_len):
        model = PrivacyModel.from_level_sizes((LN4, LN6), (1, m - 1))
        channel = PaddedUnaryEncoding(toy_profile, model, padded_len)
        a_pos, b_pos = toy_profile.position_probabilities(model, padded_len)
        length = m + padded_len
        outcomes = np.array(list(itertools.product([False, True], repeat=length)))
        order = np.argsort(_outcome_index(outcomes))
        for size in range(m + 1):
            for x in itertools.combinations(range(1, m + 1), size):
                denominator = max(size, padded_len)
                weights = {item: 1.0 / denominator for item in x}
                weights.update({m + d: (1.0 - size / denominator) / padded_len for d in range(1, padded_len + 1)})
                expected = np.zeros(len(outcomes))
                for position, weight in weights.items():
                    if weight == 0:
                        continue
                    p = np.where(np.arange(1, length + 1) == position, a_pos, b_pos)
                    expected += weight * np.prod(np.where(outcomes, p, 1 - p), axis=1)
                assert channel.output_distribution(x) == pytest.approx(expected[order], abs=1e-12)

    @pytest.mark.slow
    def test_idue_ps_matches_padded_channel(self, toy_profile):
        model = PrivacyModel.from_level_sizes((LN4, LN6), (1, 1))
        channel = PaddedUnaryEncoding(toy_profile, model, 2)
        rng = np.random.default_rng(12)
        draws = 200_000
        reports = np.array([idue_ps([2], toy_profile, model, 2, rng) for _ in range(draws)])
        rates = np.bincount(_outcome_index(reports), minlength=channel.outcomes) / draws
        assert rates == pytest.approx(channel.output_distribution([2]), abs=0.004)
