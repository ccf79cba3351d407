"""
Privacy checks for unary-encoding and GRR mechanisms.

Every brute-force check computes exact output distributions; no sampling.
"""
import itertools
import logging
import math
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from config import AUDIT_TOLERANCE, ENUMERATION_CAP, ITEMSET_AUDIT_MAX_ITEMS, ITEMSET_AUDIT_MAX_PADDING
from errors import EnumerationCapExceeded
from mechanisms import Channel, PaddedUnaryEncoding, UnaryEncoding
from model import AuditReport, PerturbationProfile, PrivacyModel, RKind, r_eval

logger = logging.getLogger(__name__)

DUMMY = "*"


class LeakageMode(str, Enum):
    EXACT = "exact"
    BOUND = "bound"


def _ratio(a_i: float, b_i: float, a_j: float, b_j: float) -> float:
    numerator = a_i * (1.0 - b_j)
    denominator = b_i * (1.0 - a_j)
    if denominator == 0:
        return math.inf if numerator > 0 else 1.0
    return numerator / denominator


def _worst(check: str, rows: list[tuple[float, float, tuple]], tol: float, detail: str = "") -> AuditReport:
    """rows are (ratio, bound, pair); the worst row maximizes ratio / bound."""
    ratio, bound, pair = max(rows, key=lambda row: row[0] / row[1])
    return AuditReport(check, float(ratio), float(bound), pair, tol, len(rows), detail)


# ==================== ANALYTIC CHECKS ====================

def pair_ratio(profile: PerturbationProfile, level_i: int, level_j: int) -> float:
    """Tight bound of Pr(y|v_i)/Pr(y|v_j), attained at y[i]=1, y[j]=0."""
    return _ratio(profile.a[level_i], profile.b[level_i], profile.a[level_j], profile.b[level_j])


def check_idldp(profile: PerturbationProfile, model: PrivacyModel, tol: float = AUDIT_TOLERANCE) -> AuditReport:
    """All t^2 ordered level pairs, plus the dummy pair at budget min(E) when present."""
    if profile.t != model.t:
        raise ValueError(f"Profile has {profile.t} levels, model has {model.t}")
    labels = list(range(model.t))
    pairs = {level: (profile.a[level], profile.b[level], model.budgets[level]) for level in labels}
    if profile.has_dummy:
        labels.append(DUMMY)
        pairs[DUMMY] = (profile.dummy_a, profile.dummy_b, model.min_budget)

    rows = []
    for i, j in itertools.product(labels, repeat=2):
        a_i, b_i, e_i = pairs[i]
        a_j, b_j, e_j = pairs[j]
        bound = math.exp(model.r_kind.combine(e_i, e_j))
        rows.append((_ratio(a_i, b_i, a_j, b_j), bound, (_label(i), _label(j))))
    return _worst("idldp", rows, tol)


def _label(level) -> str:
    return DUMMY if level == DUMMY else f"level {level + 1}"


def ldp_equivalent_budget(model: PrivacyModel) -> float:
    """A MinID-LDP mechanism also satisfies plain LDP at min(max E, 2 min E)."""
    return min(model.max_budget, 2.0 * model.min_budget)


# ==================== BRUTE FORCE ====================

def joint_distribution(chain: Sequence[Channel], x, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """Law of the concatenated outputs of independent runs of every channel on x."""
    if not chain:
        raise ValueError("Mechanism chain is empty")
    outcomes = math.prod(channel.outcomes for channel in chain)
    if outcomes > cap:
        raise EnumerationCapExceeded(f"{outcomes} joint outcomes exceed the cap of {cap}")
    dist = chain[0].output_distribution(x)
    for channel in chain[1:]:
        dist = np.multiply.outer(dist, channel.output_distribution(x)).ravel()
    return dist


def bruteforce_max_ratio(chain: Sequence[Channel], x, x_prime, cap: int = ENUMERATION_CAP) -> float:
    """max over every joint output y of Pr(y|x) / Pr(y|x')."""
    numerator = joint_distribution(chain, x, cap)
    denominator = joint_distribution(chain, x_prime, cap)
    if (denominator <= 0).any():
        raise ValueError("Zero-probability output; profiles with b=0 or a=1 cannot be audited")
    return float(np.max(numerator / denominator))


def audit_single_item(profile: PerturbationProfile, model: PrivacyModel,
                      tol: float = AUDIT_TOLERANCE, cap: int = ENUMERATION_CAP) -> tuple[AuditReport, AuditReport]:
    """
    Brute-force every ordered pair of distinct items. Returns the ID-LDP check
    and the agreement check against pair_ratio (bound = analytic value).
    """
    channel = UnaryEncoding.from_profile(profile, model)
    if channel.outcomes > cap:
        raise EnumerationCapExceeded(f"{channel.outcomes} outcomes exceed the cap of {cap}")
    dists = {item: channel.output_distribution(item) for item in range(1, model.m + 1)}
    privacy_rows, agreement_rows = [], []
    for x, x_prime in itertools.permutations(dists, 2):
        ratio = float(np.max(dists[x] / dists[x_prime]))
        level_x, level_y = model.level_of(x), model.level_of(x_prime)
        bound = math.exp(r_eval(model, level_x, level_y))
        analytic = pair_ratio(profile, level_x, level_y)
        privacy_rows.append((ratio, bound, (x, x_prime)))
        agreement_rows.append((max(ratio, analytic), min(ratio, analytic), (x, x_prime)))
    if not privacy_rows:
        raise ValueError("Single-item audit needs at least two items")
    return _worst("bruteforce", privacy_rows, tol), _worst("analytic_agreement", agreement_rows, tol)


def audit_ldp_equivalence(profile: PerturbationProfile, model: PrivacyModel,
                          tol: float = AUDIT_TOLERANCE, cap: int = ENUMERATION_CAP) -> AuditReport:
    """Plain-LDP brute-force audit at ldp_equivalent_budget(model); MinID-LDP only."""
    if model.r_kind is not RKind.MIN:
        raise ValueError("The LDP-equivalent budget holds for MinID-LDP only")
    channel = UnaryEncoding.from_profile(profile, model)
    bound = math.exp(ldp_equivalent_budget(model))
    rows = [
        (bruteforce_max_ratio([channel], x, x_prime, cap), bound, (x, x_prime))
        for x, x_prime in itertools.permutations(range(1, model.m + 1), 2)
    ]
    return _worst("ldp_equivalence", rows, tol)


def audit_composition(profiles: Sequence[PerturbationProfile], models: Sequence[PrivacyModel],
                      tol: float = AUDIT_TOLERANCE, cap: int = ENUMERATION_CAP) -> AuditReport:
    """
    Joint output of independent mechanisms on the same input, bounded by
    exp(r(sum of eps_x, sum of eps_x')) over the chain.
    """
    if len(profiles) != len(models) or not profiles:
        raise ValueError("Need one model per profile")
    m = models[0].m
    if any(model.m != m for model in models):
        raise ValueError("Composed mechanisms must share the item universe")
    chain = [UnaryEncoding.from_profile(p, mdl) for p, mdl in zip(profiles, models)]
    r_kind = models[0].r_kind
    rows = []
    for x, x_prime in itertools.permutations(range(1, m + 1), 2):
        total_x = sum(model.item_budget(x) for model in models)
        total_y = sum(model.item_budget(x_prime) for model in models)
        bound = math.exp(r_kind.combine(total_x, total_y))
        rows.append((bruteforce_max_ratio(chain, x, x_prime, cap), bound, (x, x_prime)))
    return _worst("composition", rows, tol)


# ==================== ITEM SETS ====================

def itemset_budget(x: Iterable[int], model: PrivacyModel, padded_len: int,
                   eps_star: Optional[float] = None) -> float:
    """eps_x = ln[eta_x * sum(e^eps_i)/|x| + (1 - eta_x) * e^eps*]."""
    items = sorted(set(int(i) for i in x))
    if padded_len < 0:
        raise ValueError("Padded length must be non-negative")
    if not items and padded_len == 0:
        raise ValueError("Empty item set needs a positive padded length")
    eps_star = model.min_budget if eps_star is None else eps_star
    size = len(items)
    eta = size / max(size, padded_len)
    exponents = [model.item_budget(i) for i in items] + [eps_star]
    weights = ([eta / size] * size if size else []) + [1.0 - eta]
    return float(logsumexp(exponents, b=weights))


def weighted_ratio_bound(profile: PerturbationProfile, model: PrivacyModel, padded_len: int,
                      x: Iterable[int], x_prime: Iterable[int]) -> float:
    """
    Analytic bound on Pr(y|x)/Pr(y|x') for item sets: the eta-weighted mean of
    alpha over x (and the dummies) divided by that of beta over x'.
    """
    alpha, beta = profile.alpha, profile.beta

    def weighted(items, per_level, dummy_value):
        items = sorted(set(int(i) for i in items))
        size = len(items)
        eta = size / max(size, padded_len)
        mean = float(np.mean([per_level[model.level_of(i)] for i in items])) if items else 0.0
        return eta * mean + (1.0 - eta) * dummy_value

    return weighted(x, alpha, profile.dummy_alpha) / weighted(x_prime, beta, profile.dummy_beta)


def audit_itemset(profile: PerturbationProfile, model: PrivacyModel, padded_len: int,
                  eps_star: Optional[float] = None, tol: float = AUDIT_TOLERANCE,
                  cap: int = ENUMERATION_CAP) -> tuple[AuditReport, AuditReport]:
    """
    Every ordered pair of item sets over the (small) model domain. Returns the
    item-set MinID-LDP check and the cross-check against weighted_ratio_bound.
    """
    if model.m > ITEMSET_AUDIT_MAX_ITEMS or not 1 <= padded_len <= ITEMSET_AUDIT_MAX_PADDING:
        raise ValueError(
            f"Item-set audits need m <= {ITEMSET_AUDIT_MAX_ITEMS} and 1 <= l <= {ITEMSET_AUDIT_MAX_PADDING}"
        )
    if not profile.has_dummy:
        raise ValueError("Item-set audits need a dummy pair")
    channel = PaddedUnaryEncoding(profile, model, padded_len)
    if channel.outcomes > cap:
        raise EnumerationCapExceeded(f"{channel.outcomes} outcomes exceed the cap of {cap}")
    eps_star = model.min_budget if eps_star is None else eps_star

    universe = range(1, model.m + 1)
    itemsets = [s for size in range(model.m + 1) for s in itertools.combinations(universe, size)]
    dists = {s: channel.output_distribution(s) for s in itemsets}
    budgets = {s: itemset_budget(s, model, padded_len, eps_star) for s in itemsets}

    budget_rows, weighted_rows = [], []
    for x, x_prime in itertools.permutations(itemsets, 2):
        ratio = float(np.max(dists[x] / dists[x_prime]))
        bound = math.exp(model.r_kind.combine(budgets[x], budgets[x_prime]))
        budget_rows.append((ratio, bound, (x, x_prime)))
        weighted_rows.append((ratio, weighted_ratio_bound(profile, model, padded_len, x, x_prime), (x, x_prime)))
    detail = f"padded_len={padded_len} eps_star={eps_star:.6g}"
    return (_worst("itemset", budget_rows, tol, detail),
            _worst("itemset_weighted_bound", weighted_rows, tol, detail))


# ==================== LEAKAGE ====================

def leakage_bounds(prior: Sequence[float], profile: PerturbationProfile, model: PrivacyModel,
                   x: int, mode: LeakageMode = LeakageMode.EXACT,
                   cap: int = ENUMERATION_CAP) -> tuple[float, float]:
    """
    Range of Pr(x)/Pr(x|y). EXACT enumerates every output and applies Bayes;
    BOUND returns e^{-min(eps_x, 2 min E)} and e^{min(eps_x, 2 min E)}.
    """
    prior = np.asarray(prior, dtype=float)
    if prior.size != model.m:
        raise ValueError(f"Prior has {prior.size} entries, model has {model.m} items")
    if (prior < 0).any() or not math.isclose(prior.sum(), 1.0, abs_tol=1e-9):
        raise ValueError("Prior must be a probability vector")
    if LeakageMode(mode) is LeakageMode.BOUND:
        if model.r_kind is not RKind.MIN:
            raise ValueError("Leakage bounds are stated for MinID-LDP only")
        exponent = min(model.item_budget(x), 2.0 * model.min_budget)
        return math.exp(-exponent), math.exp(exponent)

    channel = UnaryEncoding.from_profile(profile, model)
    if channel.outcomes > cap:
        raise EnumerationCapExceeded(f"{channel.outcomes} outcomes exceed the cap of {cap}")
    likelihood = np.stack([channel.output_distribution(i) for i in range(1, model.m + 1)])
    evidence = prior @ likelihood
    # Pr(x)/Pr(x|y) = Pr(y)/Pr(y|x)
    ratios = evidence / likelihood[x - 1]
    return float(ratios.min()), float(ratios.max())


def audit_leakage(prior: Sequence[float], profile: PerturbationProfile, model: PrivacyModel,
                  tol: float = AUDIT_TOLERANCE, cap: int = ENUMERATION_CAP) -> AuditReport:
    """EXACT leakage range inside the MinID-LDP bound for every input."""
    rows = []
    for x in range(1, model.m + 1):
        low, high = leakage_bounds(prior, profile, model, x, LeakageMode.EXACT, cap)
        bound_low, bound_high = leakage_bounds(prior, profile, model, x, LeakageMode.BOUND, cap)
        # lower side compared as reciprocals
        rows.append((high, bound_high, (x, "upper")))
        rows.append((1.0 / low, 1.0 / bound_low, (x, "lower")))
    return _worst("leakage", rows, tol)


LEAKAGE_BOUND_TABLE = {
    "LDP": ("e^{-eps}", "e^{eps}"),
    "PLDP": ("e^{-eps_u}", "e^{eps_u}"),
    "GI": ("e^{-eps d(x, x')}", "e^{eps d(x, x')}"),
    "CLDP": ("e^{-alpha d(x, x')}", "e^{alpha d(x, x')}"),
    "MinID-LDP": ("e^{-min(eps_x, 2 min E)}", "e^{min(eps_x, 2 min E)}"),
}
