"""
simulate: run the frequency-estimation experiment grid and write a metrics CSV.
"""

import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

import crud
from commands.common import (build_dataset, build_model, csv_header, dataset_name, load_profile_document,
                             record_run, write_output)
from data import default_padded_len, first_items
from database import get_db_context, persistence_enabled
from errors import ConfigError, WorkbenchError
from estimation import (estimate_itemset, estimate_single, expected_sampled_counts, grr_estimate,
                        grr_theoretical_mse, theoretical_mse)
from mechanisms import RandomSource, grr_perturb_many, sample_padded_positions, simulate_ue_batch
from metrics import precision_at_k, re_at_k, total_mse
from model import Dataset, GRRParameters, PerturbationProfile, PrivacyModel, true_counts
from optimizer import Baseline, baseline_profile, solve
from schemas import WorkbenchConfig

logger = logging.getLogger(__name__)

NAME = "simulate"
HELP = "Simulate mechanisms over a dataset and report MSE and top-k metrics"

SIMULATION_STREAM = 3

SINGLE_ITEM_MECHANISMS = ("GRR", "RAPPOR", "OUE", "IDUE", "IDENTITY")
ITEMSET_MECHANISMS = ("IDUE-PS", "RAPPOR-PS", "OUE-PS")
MECHANISMS = SINGLE_ITEM_MECHANISMS + ITEMSET_MECHANISMS


@dataclass(frozen=True)
class Arm:
    """One mechanism at one base budget, ready to be repeated."""
    mechanism: str
    model_name: str
    epsilon_base: float
    model: PrivacyModel
    profile: Union[PerturbationProfile, GRRParameters]
    padded_len: int = 0

    @property
    def itemset(self) -> bool:
        return self.padded_len > 0


# ==================== ARMS ====================

def _idue_profile(config: WorkbenchConfig, model: PrivacyModel) -> tuple[PerturbationProfile, str]:
    if config.experiment.profile_path:
        document = load_profile_document(config.experiment.profile_path)
        try:
            profile = document.to_profile()
        except ValueError as exc:
            raise ConfigError(f"{config.experiment.profile_path}: {exc}") from None
        if profile.t != model.t:
            raise ConfigError(f"Profile has {profile.t} levels, the model has {model.t}")
        return profile, document.model_name
    options = config.solver.model_copy(update={"seed": config.seed, "threads": 1})
    result = solve(options.model, model, options)
    return result.profile, result.model_name


def build_arms(config: WorkbenchConfig, dataset: Dataset) -> List[Arm]:
    """Every (base budget, mechanism) pair in canonical order."""
    try:
        return _build_arms(config, dataset)
    except WorkbenchError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _build_arms(config: WorkbenchConfig, dataset: Dataset) -> List[Arm]:
    unknown = [name for name in config.experiment.mechanisms if name not in MECHANISMS]
    if unknown:
        raise ConfigError(f"Unknown mechanisms {unknown}; choose from {list(MECHANISMS)}")
    arms = []
    for epsilon_base in config.experiment.epsilons:
        model = build_model(config, m=dataset.m, epsilon_base=epsilon_base)
        idue = None
        padded_len = config.experiment.padded_len or default_padded_len(dataset, epsilon_base)
        for name in config.experiment.mechanisms:
            base = name.removesuffix("-PS")
            ell = padded_len if name in ITEMSET_MECHANISMS else 0
            if base == "IDUE":
                if idue is None:
                    idue = _idue_profile(config, model)
                profile, model_name = idue
                if ell and not profile.has_dummy:
                    profile = profile.with_dummy_from_level(model.min_level)
            elif base == "IDENTITY":
                profile = PerturbationProfile.unchecked((1.0,) * model.t, (0.0,) * model.t, 1.0, 0.0)
                model_name = "identity"
            elif base == "GRR":
                profile = baseline_profile(Baseline.GRR, model.min_budget, m=model.m)
                model_name = "baseline"
            else:
                # uniform baselines have to meet the strictest level
                profile = baseline_profile(Baseline(base.lower()), model.min_budget, t=model.t)
                model_name = "baseline"
            arms.append(Arm(name, model_name, epsilon_base, model, profile, ell))
    return arms


# ==================== REPEATS ====================

def _metric_columns(ks: List[int]) -> List[str]:
    return [column for k in ks for column in (f"re_{k}", f"prec_{k}")]


def _check_ks(ks: List[int], truth: np.ndarray, label: str) -> None:
    positive = int(np.count_nonzero(truth > 0))
    too_large = [k for k in ks if k > positive]
    if too_large:
        raise ConfigError(f"k={too_large} exceeds the {positive} items with a positive {label} count")


def _estimate(arm: Arm, dataset: Dataset, single: Dataset, single_counts: np.ndarray,
              rng: np.random.Generator) -> np.ndarray:
    if isinstance(arm.profile, GRRParameters):
        reported = grr_perturb_many(single.flat, arm.profile, rng)
        counts = np.bincount(reported, minlength=arm.model.m + 1)[1:]
        return grr_estimate(counts, single.n, arm.profile).values
    if arm.itemset:
        positions = sample_padded_positions(dataset, arm.padded_len, rng)
        position_counts = np.bincount(positions, minlength=arm.model.m + arm.padded_len + 1)[1:]
        a_pos, b_pos = arm.profile.position_probabilities(arm.model, arm.padded_len)
        batch = simulate_ue_batch(position_counts, a_pos, b_pos, rng, arm.padded_len)
        return estimate_itemset(batch, arm.profile, arm.model, arm.padded_len).values
    a_pos, b_pos = arm.profile.position_probabilities(arm.model)
    batch = simulate_ue_batch(single_counts, a_pos, b_pos, rng)
    return estimate_single(batch, arm.profile, arm.model).values


def _theory(arm: Arm, dataset: Dataset, single_counts: np.ndarray, n: int) -> tuple[float, bool]:
    """Predicted total MSE per user, and whether it is only an approximation."""
    if isinstance(arm.profile, GRRParameters):
        return grr_theoretical_mse(arm.profile, single_counts, n)[1] / n, False
    if arm.itemset:
        sampled = expected_sampled_counts(dataset, arm.padded_len)
        return theoretical_mse(arm.profile, arm.model, sampled, n, arm.padded_len)[1] / n, True
    return theoretical_mse(arm.profile, arm.model, single_counts, n)[1] / n, False


def run_repeat(arm: Arm, arm_index: int, repeat: int, dataset: Dataset, single: Dataset,
               ks: List[int], source: RandomSource) -> Dict[str, Any]:
    """One CSV row; the generator depends only on (arm, repeat)."""
    rng = source.generator(SIMULATION_STREAM, arm_index, repeat)
    single_counts = true_counts(single)
    truth = true_counts(dataset) if arm.itemset else single_counts
    n = dataset.n if arm.itemset else single.n
    estimates = _estimate(arm, dataset, single, single_counts, rng)
    mse_theory, approx = _theory(arm, dataset, single_counts, n)
    row: Dict[str, Any] = {
        "mechanism": arm.mechanism,
        "model": arm.model_name,
        "epsilon_base": arm.epsilon_base,
        "repeat": repeat,
        "mse_emp": total_mse(estimates, truth, n),
        "mse_theory": mse_theory,
    }
    for k in ks:
        row[f"re_{k}"] = re_at_k(estimates, truth, k)
        row[f"prec_{k}"] = precision_at_k(estimates, truth, k)
    row["theory_approx"] = int(approx)
    return row


def simulate_rows(config: WorkbenchConfig, dataset: Dataset) -> List[Dict[str, Any]]:
    """All repeat rows in (budget, mechanism, repeat) order, then one mean row per arm."""
    single = dataset if dataset.is_single_item else first_items(dataset)
    if not dataset.is_single_item and any(name in SINGLE_ITEM_MECHANISMS for name in config.experiment.mechanisms):
        logger.info(f"Single-item mechanisms use the first item of {single.n} non-empty records")
    if single.n == 0:
        raise ConfigError("The dataset has no non-empty records")
    ks = config.experiment.k
    _check_ks(ks, true_counts(single), "single-item")
    if any(name in ITEMSET_MECHANISMS for name in config.experiment.mechanisms):
        _check_ks(ks, true_counts(dataset), "item-set")

    arms = build_arms(config, dataset)
    source = RandomSource(config.seed)
    tasks = [(arm, index, repeat) for index, arm in enumerate(arms) for repeat in range(config.experiment.repeats)]

    def work(task):
        arm, index, repeat = task
        return run_repeat(arm, index, repeat, dataset, single, ks, source)

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            rows = list(pool.map(work, tasks))
    else:
        rows = [work(task) for task in tasks]

    frame = pd.DataFrame(rows)
    numeric = ["mse_emp", "mse_theory"] + _metric_columns(ks)
    means = (frame.groupby(["epsilon_base", "mechanism", "model"], sort=False)[numeric + ["theory_approx"]]
             .mean().reset_index())
    means["repeat"] = "mean"
    means["theory_approx"] = means["theory_approx"].astype(int)
    return rows + means[list(rows[0].keys())].to_dict("records")


def to_csv(config: WorkbenchConfig, rows: List[Dict[str, Any]]) -> str:
    columns = ["mechanism", "model", "epsilon_base", "repeat", "mse_emp", "mse_theory"]
    columns += _metric_columns(config.experiment.k) + ["theory_approx"]
    buffer = io.StringIO()
    buffer.write(csv_header(config))
    pd.DataFrame(rows, columns=columns).to_csv(buffer, index=False, float_format="%.10g", lineterminator="\n")
    return buffer.getvalue()


def run(config: WorkbenchConfig) -> List[Dict[str, Any]]:
    dataset = build_dataset(config.dataset, config.seed)
    logger.info(f"Simulating over n={dataset.n} users and m={dataset.m} items")
    rows = simulate_rows(config, dataset)
    write_output(to_csv(config, rows), config.output.path)

    run_id: Optional[int] = record_run(NAME, config)
    if persistence_enabled():
        with get_db_context() as db:
            crud.add_metric_records(db, run_id, rows)
            if dataset.original_ids:
                crud.save_item_mapping(db, dataset_name(config.dataset), dataset.original_ids)
    return rows
