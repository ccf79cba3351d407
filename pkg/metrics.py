"""
Evaluation metrics. Rankings break ties by the smaller item id.
"""
from typing import Sequence

import numpy as np


def _as_pair(estimates: Sequence[float], truth: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    estimates = np.asarray(estimates, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimates.shape != truth.shape:
        raise ValueError(f"Estimates {estimates.shape} and truth {truth.shape} differ in shape")
    return estimates, truth


def top_k(values: Sequence[float], k: int) -> np.ndarray:
    """0-based indices of the k largest values; ties to the smaller index."""
    values = np.asarray(values, dtype=float)
    if not 1 <= k <= values.size:
        raise ValueError(f"k={k} outside 1..{values.size}")
    order = np.lexsort((np.arange(values.size), -values))
    return order[:k]


def total_mse(estimates: Sequence[float], truth: Sequence[float], n: int) -> float:
    """sum_i (c_hat_i - c*_i)^2 / n"""
    estimates, truth = _as_pair(estimates, truth)
    if n <= 0:
        raise ValueError("n must be positive")
    return float(np.sum((estimates - truth) ** 2) / n)


def re_at_k(estimates: Sequence[float], truth: Sequence[float], k: int) -> float:
    """Mean relative error over the true top-k; items with zero count never qualify."""
    estimates, truth = _as_pair(estimates, truth)
    positive = int(np.count_nonzero(truth > 0))
    if not 1 <= k <= positive:
        raise ValueError(f"k={k} exceeds the {positive} items with a positive count")
    members = top_k(truth, k)
    return float(np.mean(np.abs(estimates[members] - truth[members]) / truth[members]))


def precision_at_k(estimates: Sequence[float], truth: Sequence[float], k: int) -> float:
    """Share of the predicted top-k that is in the true top-k."""
    estimates, truth = _as_pair(estimates, truth)
    predicted = top_k(estimates, k)
    actual = top_k(truth, k)
    return len(np.intersect1d(predicted, actual)) / k
