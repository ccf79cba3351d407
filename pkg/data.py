"""
Synthetic data generation, transaction file ingestion and privacy-level assignment.
"""
import logging
import math
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd

from errors import DatasetError
from mechanisms import RandomSource
from model import Dataset
from schemas import DatasetSummary

logger = logging.getLogger(__name__)

DATA_STREAM = 1
LEVEL_STREAM = 2
CHUNK_SIZE = 1 << 16

SPACE_SEP_IDS = "space"
CSV_USER_ITEM = "csv"

POWERLAW_REALIZATION = "continuous power law on [1, m] rounded half-up; items 1 and m get half-width bins"
UNIFORM_REALIZATION = "uniform over 1..m"

# (users, items) of the public item-set datasets
REFERENCE_DATASETS = {
    "retail": (88_162, 16_470),
    "kosarak": (990_002, 41_270),
    "clothing": (105_508, 5_850),
}


# ==================== GENERATORS ====================

def _chunked(n: int, seed: int, draw) -> np.ndarray:
    """Concatenate per-range draws; each range of records owns its substream."""
    source = RandomSource(seed)
    parts = [
        draw(source.generator(DATA_STREAM, index), min(CHUNK_SIZE, n - start))
        for index, start in enumerate(range(0, n, CHUNK_SIZE))
    ]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)


def gen_powerlaw(n: int, m: int, alpha: float = 2.0, seed: int = 0) -> Dataset:
    """
    Truncated continuous power law on [1, m], rounded half-up to an item id.
    u is rescaled onto [m^-(alpha-1), 1] so that x = u^(-1/(alpha-1)) covers [1, m].
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    if not alpha > 1:
        raise ValueError("alpha must exceed 1")
    shape = alpha - 1.0
    low = float(m) ** -shape

    def draw(rng, size):
        u = low + (1.0 - low) * rng.random(size)
        x = u ** (-1.0 / shape)
        return np.clip(np.floor(x + 0.5), 1, m).astype(np.int64)

    return Dataset.from_items(m, _chunked(n, seed, draw))


def gen_uniform(n: int, m: int, seed: int = 0) -> Dataset:
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    return Dataset.from_items(m, _chunked(n, seed, lambda rng, size: rng.integers(1, m + 1, size=size)))


def assign_levels(m: int, fractions: Sequence[float], seed: int = 0) -> np.ndarray:
    """
    Level (0-based) of every item 1..m. Level sizes use largest-remainder
    rounding of m * fraction, ties to the lower level; items are shuffled.
    """
    fractions = np.asarray(fractions, dtype=float)
    if fractions.size == 0 or (fractions < 0).any() or abs(fractions.sum() - 1.0) > 1e-9:
        raise ValueError(f"Invalid level fractions: {fractions.tolist()}")
    raw = m * fractions
    sizes = np.floor(raw + 1e-9).astype(np.int64)
    shortfall = m - int(sizes.sum())
    order = np.argsort(-(raw - sizes), kind="stable")
    sizes[order[:shortfall]] += 1
    labels = np.repeat(np.arange(fractions.size), sizes)
    return RandomSource(seed).generator(LEVEL_STREAM).permutation(labels)


# ==================== FILES ====================

def _from_original(records: list[np.ndarray], name: str) -> Dataset:
    sizes = [len(r) for r in records]
    flat = np.concatenate(records) if records else np.zeros(0, dtype=np.int64)
    if not flat.size:
        raise DatasetError(f"{name}: no items found")
    original_ids, dense = np.unique(flat, return_inverse=True)
    bounds = np.cumsum([0] + sizes)
    dense = dense + 1
    dataset = Dataset(
        int(original_ids.size),
        tuple(tuple(dense[bounds[k]:bounds[k + 1]].tolist()) for k in range(len(records))),
        tuple(original_ids.tolist()),
    )
    logger.info(f"Loaded {name}: n={dataset.n}, m={dataset.m}, records={int(dataset.sizes.sum())}")
    return dataset


def _load_space_separated(path: Path) -> Dataset:
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines:
        raise DatasetError(f"{path}: empty file")
    records = []
    for number, line in enumerate(lines, start=1):
        try:
            ids = [int(token) for token in line.split()]
        except ValueError:
            raise DatasetError(f"{path}:{number}: not a list of integer item ids") from None
        if any(i < 0 for i in ids):
            raise DatasetError(f"{path}:{number}: negative item id")
        unique = sorted(set(ids))
        if len(unique) != len(ids):
            logger.warning(f"{path}:{number}: dropped {len(ids) - len(unique)} duplicate item(s)")
        records.append(np.asarray(unique, dtype=np.int64))
    return _from_original(records, str(path))


def _load_user_item_csv(path: Path) -> Dataset:
    try:
        frame = pd.read_csv(path, header=None, names=["user", "item"], dtype=str, skip_blank_lines=False)
    except pd.errors.EmptyDataError:
        raise DatasetError(f"{path}: empty file") from None
    except pd.errors.ParserError as exc:
        raise DatasetError(f"{path}: {exc}") from None
    items = pd.to_numeric(frame["item"], errors="coerce")
    invalid = items.isna() | (items < 0) | (items % 1 != 0) | frame["user"].isna()
    if invalid.any():
        raise DatasetError(f"{path}:{int(invalid.idxmax()) + 1}: expected 'user,item' with a non-negative integer item")
    frame = frame.assign(item=items.astype(np.int64))
    duplicated = frame.duplicated()
    if duplicated.any():
        logger.warning(f"{path}: dropped {int(duplicated.sum())} duplicate user-item row(s)")
        frame = frame[~duplicated]
    grouped = frame.groupby("user", sort=False)["item"]
    records = [np.sort(group.to_numpy()) for _, group in grouped]
    return _from_original(records, str(path))


def load_transactions(path: Union[str, Path], format: str = SPACE_SEP_IDS) -> Dataset:
    """
    SPACE_SEP_IDS: one record per line of whitespace-separated item ids.
    CSV_USER_ITEM: header-less (user, item) rows grouped into per-user sets,
    users in order of first appearance.
    Item ids are remapped densely onto 1..m in increasing original order.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"{path}: no such file")
    if format == SPACE_SEP_IDS:
        return _load_space_separated(path)
    if format == CSV_USER_ITEM:
        return _load_user_item_csv(path)
    raise DatasetError(f"Unknown dataset format {format!r}")


def write_transactions(dataset: Dataset, path: Union[str, Path]) -> None:
    """One line per record; original ids when the dataset carries them."""
    ids = np.asarray(dataset.original_ids) if dataset.original_ids else np.arange(dataset.m + 1)[1:]
    with open(path, "w", encoding="utf-8") as handle:
        for record in dataset.records:
            handle.write(" ".join(str(ids[i - 1]) for i in record) + "\n")


# ==================== VIEWS AND SUMMARIES ====================

def first_items(dataset: Dataset) -> Dataset:
    """Single-item view keeping the smallest item of every non-empty record."""
    return Dataset(
        dataset.m,
        tuple((record[0],) for record in dataset.records if record),
        dataset.original_ids,
    )


def summarize(dataset: Dataset, name: Optional[str] = None) -> DatasetSummary:
    sizes = dataset.sizes
    return DatasetSummary(
        name=name,
        users=dataset.n,
        items=dataset.m,
        records=int(sizes.sum()),
        mean_size=float(sizes.mean()) if sizes.size else 0.0,
        p90_size=float(np.percentile(sizes, 90)) if sizes.size else 0.0,
        max_size=int(sizes.max()) if sizes.size else 0,
    )


def check_against_reference(summary: DatasetSummary, name: str) -> bool:
    """Compare users and items with the published figures for a known dataset."""
    expected = REFERENCE_DATASETS.get(name.lower())
    if expected is None:
        logger.info(f"No reference figures for dataset {name!r}")
        return True
    if (summary.users, summary.items) != expected:
        logger.warning(f"{name}: n={summary.users}, m={summary.items}; reference n={expected[0]}, m={expected[1]}")
        return False
    return True


def default_padded_len(dataset: Dataset, epsilon_base: float) -> int:
    """Mean record size for large budgets (>= 4), half of it otherwise; at least 1."""
    mean = float(dataset.sizes.mean()) if dataset.n else 1.0
    target = mean if epsilon_base >= 4 else mean / 2.0
    return max(1, math.floor(target + 0.5))
