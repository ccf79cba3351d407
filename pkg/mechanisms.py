"""
Client-side randomizers and their exact output distributions.

Bit vectors are boolean numpy arrays indexed from 0; position k holds item k+1.
Dummy positions m+1..m+l follow the m real positions.
"""
import logging
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from model import Dataset, GRRParameters, PerturbationProfile, PrivacyModel, ReportBatch

logger = logging.getLogger(__name__)

USER_STREAM = 0


# ==================== RANDOMNESS ====================

@dataclass(frozen=True)
class RandomSource:
    """Seed-derived generators; identical (seed, keys) give identical draws."""
    seed: int

    def generator(self, *keys: int) -> np.random.Generator:
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=tuple(int(k) for k in keys))
        return np.random.default_rng(sequence)

    def for_user(self, user: int) -> np.random.Generator:
        return self.generator(USER_STREAM, user)


# ==================== ENCODING AND PERTURBATION ====================

def encode_onehot(item: int, length: int) -> np.ndarray:
    if not 1 <= item <= length:
        raise ValueError(f"Item {item} outside 1..{length}")
    bits = np.zeros(length, dtype=bool)
    bits[item - 1] = True
    return bits


def _check_lengths(bits: np.ndarray, a_pos: np.ndarray, b_pos: np.ndarray):
    if not (bits.shape == a_pos.shape == b_pos.shape):
        raise ValueError(f"Length mismatch: bits {bits.shape}, a {a_pos.shape}, b {b_pos.shape}")


def perturb_ue(bits: np.ndarray, a_pos: np.ndarray, b_pos: np.ndarray,
               rng: np.random.Generator) -> np.ndarray:
    """Keep a set bit with probability a_k, raise an unset bit with probability b_k."""
    bits = np.asarray(bits, dtype=bool)
    a_pos, b_pos = np.asarray(a_pos, dtype=float), np.asarray(b_pos, dtype=float)
    _check_lengths(bits, a_pos, b_pos)
    return rng.random(bits.size) < np.where(bits, a_pos, b_pos)


def _equal_blocks(a_pos: np.ndarray, b_pos: np.ndarray) -> list[tuple[int, int]]:
    changes = np.flatnonzero((np.diff(a_pos) != 0) | (np.diff(b_pos) != 0)) + 1
    edges = np.concatenate([[0], changes, [a_pos.size]])
    return list(zip(edges[:-1].tolist(), edges[1:].tolist()))


def perturb_ue_by_blocks(bits: np.ndarray, a_pos: np.ndarray, b_pos: np.ndarray,
                         rng: np.random.Generator) -> np.ndarray:
    """
    Same law as perturb_ue. Within each contiguous run of equal (a, b) the
    number of raised zero bits is drawn from a binomial and placed uniformly.
    """
    bits = np.asarray(bits, dtype=bool)
    a_pos, b_pos = np.asarray(a_pos, dtype=float), np.asarray(b_pos, dtype=float)
    _check_lengths(bits, a_pos, b_pos)
    out = np.zeros(bits.size, dtype=bool)
    ones = np.flatnonzero(bits)
    out[ones] = rng.random(ones.size) < a_pos[ones]
    for start, stop in _equal_blocks(a_pos, b_pos):
        zeros = start + np.flatnonzero(~bits[start:stop])
        raised = rng.binomial(zeros.size, b_pos[start])
        if raised:
            out[rng.choice(zeros, size=raised, replace=False)] = True
    return out


def grr_perturb(item: int, params: GRRParameters, rng: np.random.Generator) -> int:
    """Report the true item with probability p, any other one with probability q."""
    if not 1 <= item <= params.m:
        raise ValueError(f"Item {item} outside 1..{params.m}")
    if params.m == 1 or rng.random() < params.p:
        return item
    other = int(rng.integers(1, params.m))
    return other + 1 if other >= item else other


def grr_perturb_many(items: np.ndarray, params: GRRParameters, rng: np.random.Generator) -> np.ndarray:
    items = np.asarray(items, dtype=np.int64)
    if items.size and (items.min() < 1 or items.max() > params.m):
        raise ValueError(f"Items outside 1..{params.m}")
    if params.m == 1:
        return items.copy()
    keep = rng.random(items.size) < params.p
    other = rng.integers(1, params.m, size=items.size)
    other = np.where(other >= items, other + 1, other)
    return np.where(keep, items, other)


# ==================== PADDING AND SAMPLING ====================

def _check_itemset(x: Iterable[int], m: int, padded_len: int) -> list[int]:
    items = sorted(int(i) for i in x)
    if padded_len < 1:
        raise ValueError("Padded length must be at least 1")
    if len(set(items)) != len(items):
        raise ValueError("Item set contains duplicates")
    if items and (items[0] < 1 or items[-1] > m):
        raise ValueError(f"Items outside 1..{m}")
    return items


def pad_and_sample(x: Iterable[int], padded_len: int, m: int, rng: np.random.Generator) -> int:
    """
    Pad x with distinct dummies up to padded_len items (or truncate it to a
    random padded_len-subset), then return one element uniformly.
    """
    items = _check_itemset(x, m, padded_len)
    if len(items) < padded_len:
        dummies = rng.choice(np.arange(m + 1, m + padded_len + 1), size=padded_len - len(items), replace=False)
        padded = items + dummies.tolist()
    elif len(items) > padded_len:
        padded = rng.choice(items, size=padded_len, replace=False).tolist()
    else:
        padded = items
    return int(padded[int(rng.integers(len(padded)))])


def sampling_distribution(x: Iterable[int], padded_len: int, m: int) -> np.ndarray:
    """
    Probability of each position 1..m+padded_len (0-based) being the sampled
    one: 1/max(|x|, l) for members of x and (1 - eta_x)/l for each dummy.
    """
    items = _check_itemset(x, m, padded_len)
    weights = np.zeros(m + padded_len)
    denominator = max(len(items), padded_len)
    eta = len(items) / denominator
    if items:
        weights[np.asarray(items) - 1] = 1.0 / denominator
    weights[m:] = (1.0 - eta) / padded_len
    return weights


def idue_ps(x: Iterable[int], profile: PerturbationProfile, model: PrivacyModel,
            padded_len: int, rng: np.random.Generator) -> np.ndarray:
    """One item-set report of length m+l."""
    position = pad_and_sample(x, padded_len, model.m, rng)
    a_pos, b_pos = profile.position_probabilities(model, padded_len)
    return perturb_ue(encode_onehot(position, model.m + padded_len), a_pos, b_pos, rng)


# ==================== AGGREGATE SIMULATION ====================

def simulate_ue_batch(position_counts: np.ndarray, a_pos: np.ndarray, b_pos: np.ndarray,
                      rng: np.random.Generator, padded_len: int = 0) -> ReportBatch:
    """
    Bit counts of n independent unary-encoding reports, where position_counts[k]
    users encoded position k: c_k = Bin(s_k, a_k) + Bin(n - s_k, b_k).
    """
    position_counts = np.asarray(position_counts, dtype=np.int64)
    n = int(position_counts.sum())
    _check_lengths(position_counts, np.asarray(a_pos), np.asarray(b_pos))
    counts = rng.binomial(position_counts, a_pos) + rng.binomial(n - position_counts, b_pos)
    return ReportBatch(counts, n, padded_len)


def sample_padded_positions(dataset: Dataset, padded_len: int, rng: np.random.Generator) -> np.ndarray:
    """Sampled position (1..m+l) of every user, drawn from the padding-and-sampling law."""
    if padded_len < 1:
        raise ValueError("Padded length must be at least 1")
    sizes = dataset.sizes
    denominator = np.maximum(sizes, padded_len)
    u = rng.random(dataset.n)
    dummies = dataset.m + 1 + rng.integers(0, padded_len, size=dataset.n)
    real = u * denominator < sizes
    if not dataset.flat.size:
        return dummies
    pick = np.minimum(np.floor(u * denominator).astype(np.int64), np.maximum(sizes - 1, 0))
    index = np.minimum(dataset.offsets[:-1] + pick, dataset.flat.size - 1)
    return np.where(real, dataset.flat[index], dummies)


# ==================== EXACT CHANNELS ====================

def _bit_product_distribution(probabilities: np.ndarray) -> np.ndarray:
    """Law of independent bits; bit k of the output index is position k."""
    dist = np.ones(1)
    for p in probabilities:
        dist = np.concatenate([dist * (1.0 - p), dist * p])
    return dist


class UnaryEncoding:
    """Unary-encoding channel (RAPPOR, OUE, IDUE) over single items."""

    def __init__(self, a_pos: Sequence[float], b_pos: Sequence[float]):
        self.a_pos = np.asarray(a_pos, dtype=float)
        self.b_pos = np.asarray(b_pos, dtype=float)
        if self.a_pos.shape != self.b_pos.shape:
            raise ValueError("a and b position vectors differ in length")

    @classmethod
    def from_profile(cls, profile: PerturbationProfile, model: PrivacyModel) -> "UnaryEncoding":
        return cls(*profile.position_probabilities(model))

    @property
    def length(self) -> int:
        return self.a_pos.size

    @property
    def outcomes(self) -> int:
        return 2 ** self.length

    def bit_probabilities(self, item: int) -> np.ndarray:
        bits = encode_onehot(item, self.length)
        return np.where(bits, self.a_pos, self.b_pos)

    def output_distribution(self, item: int) -> np.ndarray:
        return _bit_product_distribution(self.bit_probabilities(item))


class PaddedUnaryEncoding:
    """IDUE-PS channel: padding-and-sampling followed by unary encoding over m+l positions."""

    def __init__(self, profile: PerturbationProfile, model: PrivacyModel, padded_len: int):
        self.m = model.m
        self.padded_len = padded_len
        self.a_pos, self.b_pos = profile.position_probabilities(model, padded_len)

    @property
    def length(self) -> int:
        return self.m + self.padded_len

    @property
    def outcomes(self) -> int:
        return 2 ** self.length

    def sampling_distribution(self, x: Iterable[int]) -> np.ndarray:
        return sampling_distribution(x, self.padded_len, self.m)

    def output_distribution(self, x: Iterable[int]) -> np.ndarray:
        weights = self.sampling_distribution(x)
        dist = np.zeros(self.outcomes)
        for position in np.flatnonzero(weights):
            probabilities = np.where(np.arange(self.length) == position, self.a_pos, self.b_pos)
            dist += weights[position] * _bit_product_distribution(probabilities)
        return dist


class GeneralizedRandomizedResponse:
    """GRR channel; outcome index k is item k+1."""

    def __init__(self, params: GRRParameters):
        self.params = params

    @property
    def outcomes(self) -> int:
        return self.params.m

    def output_distribution(self, item: int) -> np.ndarray:
        if not 1 <= item <= self.params.m:
            raise ValueError(f"Item {item} outside 1..{self.params.m}")
        dist = np.full(self.params.m, self.params.q)
        dist[item - 1] = self.params.p
        return dist


Channel = Union[UnaryEncoding, PaddedUnaryEncoding, GeneralizedRandomizedResponse]
