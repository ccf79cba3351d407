import itertools
import math

import numpy as np
import pytest

from config import ENUMERATION_CAP
from errors import EnumerationCapExceeded
from model import PerturbationProfile, PrivacyModel, RKind
from optimizer import Baseline, baseline_profile, solve_opt0, solve_opt1, solve_opt2
from privacy import (LeakageMode, audit_composition, audit_itemset, audit_ldp_equivalence, audit_leakage,
                     audit_single_item, bruteforce_max_ratio, check_idldp, itemset_budget, joint_distribution,
                     ldp_equivalent_budget, leakage_bounds, pair_ratio)
from mechanisms import UnaryEncoding
from tests.conftest import LN4, LN6


class TestAnalyticCheck:

    def test_pair_ratio(self, toy_profile):
        assert pair_ratio(toy_profile, 0, 1) == pytest.approx(0.59 * 0.72 / (0.33 * 0.33))

    def test_toy_profile_passes(self, toy_model, toy_profile):
        report = check_idldp(toy_profile, toy_model)
        assert report.passed
        assert report.max_ratio == pytest.approx(3.90, abs=0.02)
        assert report.worst_pair == ("level 2", "level 1")

    def test_gross_violation(self):
        model = PrivacyModel.from_level_sizes((LN4, LN4), (1, 1))
        report = check_idldp(PerturbationProfile.uniform(0.9, 0.1, 2), model)
        assert not report.passed
        assert report.max_ratio == pytest.approx(81.0)

    def test_halved_b_is_named(self, toy_model, toy_profile):
        corrupted = PerturbationProfile((0.59, 0.67), (0.165, 0.28), 0.59, 0.165)
        report = check_idldp(corrupted, toy_model)
        assert not report.passed
        assert "level 1" in report.worst_pair

    def test_level_mismatch(self, toy_profile):
        with pytest.raises(ValueError):
            check_idldp(toy_profile, PrivacyModel((LN4,), (0,)))


class TestBruteForce:

    def test_rappor_two_items(self, rappor_ln4):
        model = PrivacyModel((LN4,), (0, 0))
        channel = UnaryEncoding.from_profile(rappor_ln4, model)
        assert bruteforce_max_ratio([channel], 1, 2) == pytest.approx(4.0)

    def test_single_item_agrees_with_analytic(self, toy_model, toy_profile):
        small = toy_model.restrict([1, 2, 3])
        privacy, agreement = audit_single_item(toy_profile, small)
        assert privacy.passed
        assert agreement.max_ratio == pytest.approx(agreement.bound, rel=1e-9)

    def test_cap(self, toy_model, toy_profile):
        channel = UnaryEncoding.from_profile(toy_profile, toy_model)
        with pytest.raises(EnumerationCapExceeded):
            joint_distribution([channel, channel], 1, cap=2 ** 8)

    def test_joint_distribution_sums_to_one(self, toy_model, toy_profile):
        channel = UnaryEncoding.from_profile(toy_profile, toy_model)
        assert joint_distribution([channel], 1, ENUMERATION_CAP).sum() == pytest.approx(1.0)

    def test_composition(self, toy_model, toy_profile):
        small = toy_model.restrict([1, 2])
        report = audit_composition([toy_profile, toy_profile], [small, small])
        assert report.passed
        assert report.bound == pytest.approx(16.0)


class TestLdpEquivalence:

    def test_budget(self):
        model = PrivacyModel.from_level_sizes((LN4, LN6), (1, 1))
        assert ldp_equivalent_budget(model) == pytest.approx(LN6)
        wide = PrivacyModel.from_level_sizes((0.5, 3.0), (1, 1))
        assert ldp_equivalent_budget(wide) == pytest.approx(1.0)

    def test_audit(self, toy_model, toy_profile):
        assert audit_ldp_equivalence(toy_profile, toy_model.restrict([1, 2, 3])).passed

    def test_avg_rejected(self, toy_profile):
        model = PrivacyModel.from_level_sizes((LN4, LN6), (1, 1), RKind.AVG)
        with pytest.raises(ValueError):
            audit_ldp_equivalence(toy_profile, model)


class TestItemsetBudget:

    def test_singleton_without_padding(self):
        model = PrivacyModel((LN4, LN6), (0, 1))
        assert itemset_budget([1], model, 1) == pytest.approx(LN4)

    def test_singleton_padded(self):
        model = PrivacyModel((LN4, LN6), (0, 1))
        assert itemset_budget([2], model, 2, eps_star=LN4) == pytest.approx(math.log(5))

    def test_convexity_lower_bound(self):
        model = PrivacyModel((LN4, LN6, 2.0), (0, 1, 2))
        x = [1, 2, 3]
        eta = 3 / max(3, 4)
        linear = eta * (LN4 + LN6 + 2.0) / 3 + (1 - eta) * LN4
        assert itemset_budget(x, model, 4) >= linear

    def test_empty_set(self):
        model = PrivacyModel((LN4,), (0,))
        assert itemset_budget([], model, 2) == pytest.approx(LN4)
        with pytest.raises(ValueError):
            itemset_budget([], model, 0)


class TestItemsetAudit:

    @pytest.mark.parametrize("padded_len", [1, 2])
    def test_solved_profile_three_items(self, padded_len):
        model = PrivacyModel.from_level_sizes((LN4, LN6), (1, 2))
        profile = solve_opt0(model)
        budget_check, weighted_check = audit_itemset(profile, model, padded_len)
        assert budget_check.passed
        assert weighted_check.passed

    def test_domain_limits(self, toy_model, toy_profile):
        with pytest.raises(ValueError):
            audit_itemset(toy_profile, toy_model, 1)
        with pytest.raises(ValueError):
            audit_itemset(toy_profile, toy_model.restrict([1, 2]), 3)


class TestLeakage:

    def test_rappor_within_bound(self, rappor_ln4):
        model = PrivacyModel((LN4,), (0, 0))
        low, high = leakage_bounds([0.5, 0.5], rappor_ln4, model, 1)
        assert low >= 0.25 - 1e-12
        assert high <= 4.0 + 1e-12

    def test_bound_mode(self, toy_model, toy_profile):
        low, high = leakage_bounds([0.2] * 5, toy_profile, toy_model, 2, LeakageMode.BOUND)
        assert high == pytest.approx(6.0)
        assert low == pytest.approx(1 / 6.0)

    def test_audit(self, toy_model, toy_profile):
        assert audit_leakage([0.1, 0.2, 0.7], toy_profile, toy_model.restrict([1, 2, 3])).passed

    def test_audit_tolerance(self, toy_model, toy_profile):
        small = toy_model.restrict([1, 2, 3])
        report = audit_leakage([0.1, 0.2, 0.7], toy_profile, small, tol=1e-6)
        assert report.tolerance == 1e-6
        assert report.passed
        # a tolerance of -1 shrinks every bound to zero
        assert not audit_leakage([0.1, 0.2, 0.7], toy_profile, small, tol=-1.0).passed

    def test_prior_validated(self, toy_model, toy_profile):
        with pytest.raises(ValueError):
            leakage_bounds([0.5, 0.6, 0, 0, 0], toy_profile, toy_model, 1)


class TestBaselinesAudit:

    @pytest.mark.parametrize("kind", [Baseline.RAPPOR, Baseline.OUE])
    def test_uniform_baselines_pass(self, toy_model, kind):
        profile = baseline_profile(kind, toy_model.min_budget, t=toy_model.t)
        assert check_idldp(profile, toy_model).passed


def _random_setting(rng: np.random.Generator) -> tuple[PerturbationProfile, PrivacyModel]:
    t = int(rng.integers(1, 4))
    sizes = rng.integers(1, 3, size=t)
    budgets = rng.uniform(0.5, 3.0, size=t)
    b = rng.uniform(0.05, 0.45, size=t)
    a = rng.uniform(b + 0.05, 0.95)
    kind = RKind.MIN if rng.random() < 0.5 else RKind.AVG
    return PerturbationProfile(tuple(a), tuple(b)), PrivacyModel.from_level_sizes(budgets, sizes, kind)


class TestRandomProfiles:

    def test_analytic_ratio_matches_enumeration(self):
        rng = np.random.default_rng(21)
        for _ in range(50):
            profile, model = _random_setting(rng)
            channel = UnaryEncoding.from_profile(profile, model)
            for x, x_prime in itertools.permutations(range(1, model.m + 1), 2):
                exact = bruteforce_max_ratio([channel], x, x_prime)
                analytic = pair_ratio(profile, model.level_of(x), model.level_of(x_prime))
                assert exact == pytest.approx(analytic, rel=1e-9)

    def test_analytic_verdict_implies_enumerated_verdict(self):
        rng = np.random.default_rng(22)
        for _ in range(50):
            profile, model = _random_setting(rng)
            if model.m < 2:
                continue
            bruteforce, agreement = audit_single_item(profile, model)
            assert agreement.passed
            if check_idldp(profile, model).passed:
                assert bruteforce.passed


SOLVERS = {"opt0": solve_opt0, "opt1": solve_opt1, "opt2": solve_opt2}


class TestSolvedProfiles:

    @pytest.mark.parametrize("name", sorted(SOLVERS))
    @pytest.mark.parametrize("budgets, sizes", [((LN4, LN6), (1, 4)), ((1.0, 2.0, 3.0), (2, 2, 2))])
    def test_passes_every_enumerated_audit(self, name, budgets, sizes):
        model = PrivacyModel.from_level_sizes(budgets, sizes)
        profile = SOLVERS[name](model)
        bruteforce, agreement = audit_single_item(profile, model)
        assert bruteforce.passed
        assert agreement.passed
        assert audit_ldp_equivalence(profile, model).passed
        assert audit_composition([profile, profile], [model, model]).passed
