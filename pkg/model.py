"""
Core domain types shared by every module.

Levels are 0-based internally; item ids run 1..m. Budgets are in nats.
"""
import hashlib
import json
import logging
import math
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from config import AUDIT_TOLERANCE

logger = logging.getLogger(__name__)


# ==================== BUDGETS ====================

class RKind(str, Enum):
    """How two per-input budgets combine into the pairwise bound."""
    MIN = "min"
    AVG = "avg"

    def combine(self, first: float, second: float) -> float:
        if self is RKind.MIN:
            return min(first, second)
        return (first + second) / 2.0


_LN_LITERAL = re.compile(r"^\s*ln\s*\(\s*([^()]+?)\s*\)\s*$", re.IGNORECASE)


def parse_budget(value: Union[str, float, int]) -> float:
    """Normalize a budget given as a number or an `ln(k)` literal."""
    if isinstance(value, bool):
        raise ValueError(f"Invalid budget: {value!r}")
    if isinstance(value, str):
        match = _LN_LITERAL.match(value)
        try:
            budget = math.log(float(match.group(1))) if match else float(value)
        except ValueError:
            raise ValueError(f"Invalid budget: {value!r}") from None
    else:
        budget = float(value)
    if not math.isfinite(budget) or budget <= 0:
        raise ValueError(f"Budget must be positive and finite, got {value!r}")
    return budget


# ==================== PRIVACY MODEL ====================

@dataclass(frozen=True)
class PrivacyModel:
    """Per-level budgets, the item to level map and the r-function."""
    budgets: tuple[float, ...]
    item_level: tuple[int, ...]
    r_kind: RKind = RKind.MIN

    def __post_init__(self):
        object.__setattr__(self, "budgets", tuple(float(e) for e in self.budgets))
        object.__setattr__(self, "item_level", tuple(int(level) for level in self.item_level))
        object.__setattr__(self, "r_kind", RKind(self.r_kind))
        if not self.budgets:
            raise ValueError("At least one privacy level is required")
        for budget in self.budgets:
            if not math.isfinite(budget) or budget <= 0:
                raise ValueError(f"Budgets must be positive and finite, got {budget}")
        if not self.item_level:
            raise ValueError("The item universe is empty")
        for level in self.item_level:
            if not 0 <= level < len(self.budgets):
                raise ValueError(f"Item mapped to unknown level {level}")

    @classmethod
    def from_level_sizes(cls, budgets: Sequence[float], sizes: Sequence[int],
                         r_kind: RKind = RKind.MIN) -> "PrivacyModel":
        """Assign items to levels contiguously: level 1 gets items 1..m_1, and so on."""
        if len(budgets) != len(sizes):
            raise ValueError("budgets and level sizes differ in length")
        if any(size < 0 for size in sizes):
            raise ValueError("Level sizes must be non-negative")
        item_level = [level for level, size in enumerate(sizes) for _ in range(int(size))]
        return cls(tuple(budgets), tuple(item_level), r_kind)

    @classmethod
    def from_assignment(cls, budgets: Sequence[float], item_level: Iterable[int],
                        r_kind: RKind = RKind.MIN) -> "PrivacyModel":
        return cls(tuple(budgets), tuple(int(level) for level in item_level), r_kind)

    @property
    def t(self) -> int:
        return len(self.budgets)

    @property
    def m(self) -> int:
        return len(self.item_level)

    @cached_property
    def level_sizes(self) -> tuple[int, ...]:
        counts = np.bincount(np.asarray(self.item_level), minlength=self.t)
        return tuple(int(c) for c in counts)

    @cached_property
    def levels(self) -> np.ndarray:
        return np.asarray(self.item_level, dtype=np.int64)

    @property
    def min_budget(self) -> float:
        return min(self.budgets)

    @property
    def max_budget(self) -> float:
        return max(self.budgets)

    @property
    def min_level(self) -> int:
        """First level carrying the smallest budget."""
        return self.budgets.index(self.min_budget)

    def level_of(self, item: int) -> int:
        if not 1 <= item <= self.m:
            raise IndexError(f"Item {item} outside 1..{self.m}")
        return self.item_level[item - 1]

    def item_budget(self, item: int) -> float:
        return self.budgets[self.level_of(item)]

    def r(self, level_i: int, level_j: int) -> float:
        return r_eval(self, level_i, level_j)

    def r_matrix(self) -> np.ndarray:
        """t x t matrix of pairwise bounds in nats."""
        e = np.asarray(self.budgets)
        if self.r_kind is RKind.MIN:
            return np.minimum.outer(e, e)
        return np.add.outer(e, e) / 2.0

    def restrict(self, items: Sequence[int]) -> "PrivacyModel":
        """Sub-model over the given items, re-indexed 1..k in the given order."""
        return PrivacyModel(self.budgets, tuple(self.level_of(i) for i in items), self.r_kind)


def r_eval(model: PrivacyModel, level_i: int, level_j: int) -> float:
    for level in (level_i, level_j):
        if not 0 <= level < model.t:
            raise IndexError(f"Level {level} outside 0..{model.t - 1}")
    return model.r_kind.combine(model.budgets[level_i], model.budgets[level_j])


# ==================== PERTURBATION PROFILE ====================

@dataclass(frozen=True)
class PerturbationProfile:
    """Per-level (a, b) probabilities plus the dummy pair used for padded positions."""
    a: tuple[float, ...]
    b: tuple[float, ...]
    dummy_a: Optional[float] = None
    dummy_b: Optional[float] = None
    strict: bool = field(default=True, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(x) for x in self.a))
        object.__setattr__(self, "b", tuple(float(x) for x in self.b))
        if len(self.a) != len(self.b) or not self.a:
            raise ValueError("a and b must be non-empty and of equal length")
        if (self.dummy_a is None) != (self.dummy_b is None):
            raise ValueError("Dummy pair must be given as both a* and b*")
        pairs = list(zip(self.a, self.b))
        if self.dummy_a is not None:
            object.__setattr__(self, "dummy_a", float(self.dummy_a))
            object.__setattr__(self, "dummy_b", float(self.dummy_b))
            pairs.append((self.dummy_a, self.dummy_b))
        for a, b in pairs:
            if self.strict and not 0 < b < a < 1:
                raise ValueError(f"Profile requires 0 < b < a < 1, got a={a}, b={b}")
            if not self.strict and not 0 <= b <= a <= 1:
                raise ValueError(f"Profile requires 0 <= b <= a <= 1, got a={a}, b={b}")

    @classmethod
    def uniform(cls, a: float, b: float, t: int) -> "PerturbationProfile":
        """Same pair at every level and for the dummy positions."""
        return cls((a,) * t, (b,) * t, a, b)

    @classmethod
    def unchecked(cls, a: Sequence[float], b: Sequence[float],
                  dummy_a: Optional[float] = None, dummy_b: Optional[float] = None) -> "PerturbationProfile":
        """Test channels such as the identity (a=1, b=0) or a=b."""
        return cls(tuple(a), tuple(b), dummy_a, dummy_b, strict=False)

    @property
    def t(self) -> int:
        return len(self.a)

    @property
    def has_dummy(self) -> bool:
        return self.dummy_a is not None

    @property
    def a_array(self) -> np.ndarray:
        return np.asarray(self.a)

    @property
    def b_array(self) -> np.ndarray:
        return np.asarray(self.b)

    @property
    def alpha(self) -> np.ndarray:
        return self.a_array / self.b_array

    @property
    def beta(self) -> np.ndarray:
        return (1.0 - self.a_array) / (1.0 - self.b_array)

    @property
    def dummy_alpha(self) -> float:
        return self.dummy_a / self.dummy_b

    @property
    def dummy_beta(self) -> float:
        return (1.0 - self.dummy_a) / (1.0 - self.dummy_b)

    def with_dummy_from_level(self, level: int) -> "PerturbationProfile":
        return replace(self, dummy_a=self.a[level], dummy_b=self.b[level])

    def position_probabilities(self, model: PrivacyModel, padded_len: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Per-position (a_k, b_k) for positions 1..m+padded_len (returned 0-based)."""
        if self.t != model.t:
            raise ValueError(f"Profile has {self.t} levels, model has {model.t}")
        a_pos = self.a_array[model.levels]
        b_pos = self.b_array[model.levels]
        if padded_len:
            if not self.has_dummy:
                raise ValueError("Padded positions need a dummy pair")
            a_pos = np.concatenate([a_pos, np.full(padded_len, self.dummy_a)])
            b_pos = np.concatenate([b_pos, np.full(padded_len, self.dummy_b)])
        return a_pos, b_pos

    def fingerprint(self) -> str:
        payload = json.dumps([self.a, self.b, self.dummy_a, self.dummy_b])
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class GRRParameters:
    """Generalized randomized response over m items."""
    p: float
    q: float
    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("GRR needs at least one item")
        if not (0 <= self.q <= 1 and 0 <= self.p <= 1):
            raise ValueError("GRR probabilities must lie in [0, 1]")
        if abs(self.p + (self.m - 1) * self.q - 1.0) > 1e-9:
            raise ValueError(f"GRR requires p + (m-1)q = 1, got p={self.p}, q={self.q}, m={self.m}")


# ==================== DATA ====================

@dataclass(frozen=True)
class Dataset:
    """One record (an item set) per user over the universe 1..m."""
    m: int
    records: tuple[tuple[int, ...], ...]
    original_ids: Optional[tuple[int, ...]] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("Universe size must be at least 1")
        records = tuple(tuple(sorted(int(i) for i in record)) for record in self.records)
        object.__setattr__(self, "records", records)
        flat = self.flat
        if flat.size and (flat.min() < 1 or flat.max() > self.m):
            raise ValueError(f"Item ids must lie in 1..{self.m}")
        owner = np.repeat(np.arange(self.n), self.sizes)
        if ((np.diff(flat) == 0) & (np.diff(owner) == 0)).any():
            raise ValueError("Duplicate item within a record")

    @classmethod
    def from_items(cls, m: int, items: Iterable[int]) -> "Dataset":
        """Single-item dataset."""
        return cls(m, tuple((int(i),) for i in items))

    @property
    def n(self) -> int:
        return len(self.records)

    @cached_property
    def sizes(self) -> np.ndarray:
        return np.fromiter((len(r) for r in self.records), dtype=np.int64, count=len(self.records))

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.sizes)]).astype(np.int64)

    @cached_property
    def flat(self) -> np.ndarray:
        """All item ids, record after record."""
        return np.fromiter((i for r in self.records for i in r), dtype=np.int64)

    @property
    def is_single_item(self) -> bool:
        return bool(np.all(self.sizes == 1))


def true_counts(dataset: Dataset) -> np.ndarray:
    """c*_i: number of users holding item i, for i = 1..m."""
    return np.bincount(dataset.flat, minlength=dataset.m + 1)[1:].astype(np.int64)


# ==================== REPORTS AND ESTIMATES ====================

@dataclass(frozen=True, eq=False)
class ReportBatch:
    """Per-position counts of set bits over n reports."""
    bit_counts: np.ndarray
    n: int
    padded_len: int = 0

    def __post_init__(self):
        counts = np.asarray(self.bit_counts, dtype=np.int64)
        object.__setattr__(self, "bit_counts", counts)
        if self.n < 0 or self.padded_len < 0:
            raise ValueError("n and padded_len must be non-negative")
        if counts.ndim != 1 or counts.size <= self.padded_len:
            raise ValueError("bit_counts must cover at least one item position")
        if counts.size and (counts.min() < 0 or counts.max() > self.n):
            raise ValueError("Bit counts must lie in 0..n")

    @property
    def m(self) -> int:
        return self.bit_counts.size - self.padded_len

    def merge(self, other: "ReportBatch") -> "ReportBatch":
        if self.bit_counts.size != other.bit_counts.size or self.padded_len != other.padded_len:
            raise ValueError("Cannot merge batches of different shapes")
        return ReportBatch(self.bit_counts + other.bit_counts, self.n + other.n, self.padded_len)


@dataclass(frozen=True, eq=False)
class FrequencyEstimate:
    """Unclamped per-item estimates for items 1..m."""
    values: np.ndarray
    n: int
    profile: Union[PerturbationProfile, GRRParameters, None] = None

    @property
    def m(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class AuditReport:
    """Outcome of one privacy check; the worst pair has the largest ratio relative to its bound."""
    check: str
    max_ratio: float
    bound: float
    worst_pair: tuple
    tolerance: float = AUDIT_TOLERANCE
    pairs_checked: int = 0
    detail: str = ""

    @property
    def slack(self) -> float:
        return self.bound - self.max_ratio

    @property
    def passed(self) -> bool:
        return self.max_ratio <= self.bound * (1.0 + self.tolerance)
