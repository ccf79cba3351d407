"""
Server-side aggregation, unbiased frequency estimators and theoretical variances.

Estimates are never clamped: negative values are kept so the estimators stay unbiased.
"""
import logging
from typing import Optional, Sequence

import numpy as np

from model import (Dataset, FrequencyEstimate, GRRParameters, PerturbationProfile, PrivacyModel,
                   ReportBatch)

logger = logging.getLogger(__name__)


def aggregate(reports: Sequence[np.ndarray], length: Optional[int] = None, padded_len: int = 0) -> ReportBatch:
    """c_k = number of reports with bit k set."""
    if not len(reports):
        if length is None:
            raise ValueError("An empty batch needs an explicit vector length")
        return ReportBatch(np.zeros(length, dtype=np.int64), 0, padded_len)
    lengths = {len(report) for report in reports}
    if len(lengths) != 1 or (length is not None and lengths != {length}):
        raise ValueError(f"Reports differ in length: {sorted(lengths)}")
    counts = np.sum(np.asarray(reports, dtype=np.int64), axis=0)
    return ReportBatch(counts, len(reports), padded_len)


def _calibrate(counts: np.ndarray, n: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    gap = a - b
    if np.any(gap == 0):
        raise ValueError("Estimator undefined when a = b")
    return (counts - n * b) / gap


def estimate_single(batch: ReportBatch, profile: PerturbationProfile, model: PrivacyModel) -> FrequencyEstimate:
    """c_hat_i = (c_i - n b_i) / (a_i - b_i) with the probabilities of item i's level."""
    if batch.padded_len:
        raise ValueError("Single-item estimation expects unpadded reports")
    a_pos, b_pos = profile.position_probabilities(model)
    if batch.m != model.m:
        raise ValueError(f"Batch covers {batch.m} items, model has {model.m}")
    return FrequencyEstimate(_calibrate(batch.bit_counts, batch.n, a_pos, b_pos), batch.n, profile)


def estimate_itemset(batch: ReportBatch, profile: PerturbationProfile, model: PrivacyModel,
                     padded_len: int) -> FrequencyEstimate:
    """
    l * (c_i - n b_i) / (a_i - b_i) over the real positions. Unbiased only when
    no record is longer than l; truncation otherwise scales item i down by l/|x|.
    """
    if padded_len < 1 or batch.padded_len != padded_len:
        raise ValueError(f"Batch padded to {batch.padded_len}, expected {padded_len} >= 1")
    if batch.m != model.m:
        raise ValueError(f"Batch covers {batch.m} items, model has {model.m}")
    a_pos, b_pos = profile.position_probabilities(model)
    values = padded_len * _calibrate(batch.bit_counts[:model.m], batch.n, a_pos, b_pos)
    return FrequencyEstimate(values, batch.n, profile)


def grr_estimate(counts: Sequence[int], n: int, params: GRRParameters) -> FrequencyEstimate:
    """c_hat_i = (c_i - n q) / (p - q)."""
    if params.p == params.q:
        raise ValueError("Estimator undefined when p = q")
    counts = np.asarray(counts, dtype=np.int64)
    return FrequencyEstimate((counts - n * params.q) / (params.p - params.q), n, params)


# ==================== THEORY ====================

def variance_coefficients(profile: PerturbationProfile) -> tuple[np.ndarray, np.ndarray]:
    """Per level: the coefficient of n and the coefficient of c*_i in Var[c_hat_i]."""
    a, b = profile.a_array, profile.b_array
    gap = a - b
    return b * (1 - b) / gap ** 2, (1 - a - b) / gap


def theoretical_mse(profile: PerturbationProfile, model: PrivacyModel, counts: Sequence[float], n: int,
                    padded_len: int = 0) -> tuple[np.ndarray, float]:
    """
    Var[c_hat_i] = n b(1-b)/(a-b)^2 + c_i (1-a-b)/(a-b).

    With padded_len > 0, counts must be the expected sampled counts
    (expected_sampled_counts) and every variance is scaled by l^2; this is an
    approximation, not an exact formula for the padded mechanism.
    """
    counts = np.asarray(counts, dtype=float)
    if counts.size != model.m:
        raise ValueError(f"Got {counts.size} counts for {model.m} items")
    n_coef, c_coef = variance_coefficients(profile)
    levels = model.levels
    per_item = n * n_coef[levels] + counts * c_coef[levels]
    if padded_len:
        per_item = per_item * padded_len ** 2
    return per_item, float(per_item.sum())


def grr_theoretical_mse(params: GRRParameters, counts: Sequence[float], n: int) -> tuple[np.ndarray, float]:
    """Var[c_hat_i] = n q(1-q)/(p-q)^2 + c_i (1-p-q)/(p-q)."""
    p, q = params.p, params.q
    counts = np.asarray(counts, dtype=float)
    per_item = n * q * (1 - q) / (p - q) ** 2 + counts * (1 - p - q) / (p - q)
    return per_item, float(per_item.sum())


def expected_sampled_counts(dataset: Dataset, padded_len: int) -> np.ndarray:
    """Expected number of users whose sampled element is item i: sum over holders of 1/max(|x|, l)."""
    if padded_len < 1:
        raise ValueError("Padded length must be at least 1")
    weights = 1.0 / np.maximum(dataset.sizes, padded_len)
    per_item = np.repeat(weights, dataset.sizes)
    return np.bincount(dataset.flat, weights=per_item, minlength=dataset.m + 1)[1:]


def mse_range_over_counts(profile: PerturbationProfile, model: PrivacyModel) -> tuple[float, float]:
    """
    Smallest and largest total variance per unit n over every way of spreading
    n single-item users across the occupied levels.
    """
    n_coef, c_coef = variance_coefficients(profile)
    sizes = np.asarray(model.level_sizes)
    occupied = sizes > 0
    base = float(np.sum(sizes * n_coef))
    return base + float(c_coef[occupied].min()), base + float(c_coef[occupied].max())
