"""
Configuration loading, model construction and output plumbing shared by the commands.
"""

import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from pydantic import ValidationError

import crud
from config import CSV_SCHEMA_VERSION
from data import assign_levels, gen_powerlaw, gen_uniform, load_transactions
from database import get_db_context, persistence_enabled
from errors import ConfigError
from model import Dataset, PrivacyModel
from schemas import DatasetConfig, ModelConfig, ProfileDocument, WorkbenchConfig

logger = logging.getLogger(__name__)

# Three levels at {eps, 1.2 eps, 2 eps} holding {5%, 5%, 90%} of the items
DEFAULT_MODEL = ModelConfig(multipliers=[1.0, 1.2, 2.0], fractions=[0.05, 0.05, 0.90])


# ==================== CONFIG ====================

def _apply_override(raw: Dict[str, Any], assignment: str) -> None:
    key, sep, value = assignment.partition("=")
    if not sep or not key:
        raise ConfigError(f"Override {assignment!r} is not of the form section.key=value")
    *sections, leaf = key.strip().split(".")
    target = raw
    for section in sections:
        target = target.setdefault(section, {})
        if not isinstance(target, dict):
            raise ConfigError(f"Override {assignment!r}: {section} is not a section")
    try:
        target[leaf] = yaml.safe_load(value)
    except yaml.YAMLError as exc:
        raise ConfigError(f"Override {assignment!r}: {exc}") from None


def load_config(path: Optional[str] = None, overrides: Optional[List[str]] = None,
                seed: Optional[int] = None, threads: Optional[int] = None,
                out: Optional[str] = None) -> WorkbenchConfig:
    """YAML file, then --set overrides, then the global flags."""
    raw: Dict[str, Any] = {}
    if path:
        try:
            with open(path, encoding="utf-8") as handle:
                raw = yaml.safe_load(handle) or {}
        except OSError as exc:
            raise ConfigError(f"Cannot read config {path}: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"Invalid YAML in {path}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a mapping of sections")
    for assignment in overrides or []:
        _apply_override(raw, assignment)
    if seed is not None:
        raw["seed"] = seed
    if threads is not None:
        raw["threads"] = threads
    if out is not None:
        raw.setdefault("output", {})["path"] = out
    try:
        return WorkbenchConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"Invalid configuration:\n{exc}") from None


def effective_config(config: WorkbenchConfig) -> Dict[str, Any]:
    """The config echoed into outputs; output location and thread counts are left out."""
    return config.model_dump(mode="json", exclude={"output": True, "threads": True, "solver": {"threads"}})


def config_echo(config: WorkbenchConfig) -> str:
    return json.dumps(effective_config(config), sort_keys=True, separators=(",", ":"))


def csv_header(config: WorkbenchConfig) -> str:
    return f"# schema={CSV_SCHEMA_VERSION} config={config_echo(config)}\n"


# ==================== MODEL AND DATA ====================

def build_model(config: WorkbenchConfig, m: Optional[int] = None,
                epsilon_base: Optional[float] = None) -> PrivacyModel:
    """Privacy model from the model section (or the default three-level split)."""
    section = config.model or DEFAULT_MODEL
    if epsilon_base is None and section.multipliers is not None:
        epsilon_base = config.experiment.epsilons[0]
    try:
        budgets = section.budgets_for(epsilon_base)
        if section.level_sizes is not None:
            if m is not None and sum(section.level_sizes) != m:
                raise ConfigError(f"level_sizes sum to {sum(section.level_sizes)}, the dataset has m={m}")
            return PrivacyModel.from_level_sizes(budgets, section.level_sizes, section.r_kind)
        if section.fractions is not None:
            if m is None:
                raise ConfigError("fractions need a universe size; give level_sizes instead")
            return PrivacyModel.from_assignment(budgets, assign_levels(m, section.fractions, config.seed),
                                                section.r_kind)
        if len(budgets) == 1 and m is not None:
            return PrivacyModel.from_level_sizes(budgets, [m], section.r_kind)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError("model section needs level_sizes or fractions")


def build_dataset(section: DatasetConfig, seed: int) -> Dataset:
    if section.source == "powerlaw":
        return gen_powerlaw(section.n, section.m, section.alpha, seed)
    if section.source == "uniform":
        return gen_uniform(section.n, section.m, seed)
    return load_transactions(section.path, section.format)


def dataset_name(section: DatasetConfig) -> str:
    if section.name:
        return section.name
    return Path(section.path).stem if section.path else section.source


def load_profile_document(path: str) -> ProfileDocument:
    try:
        with open(path, encoding="utf-8") as handle:
            raw = yaml.safe_load(handle)
        return ProfileDocument.model_validate(raw)
    except OSError as exc:
        raise ConfigError(f"Cannot read profile {path}: {exc}") from None
    except (yaml.YAMLError, ValidationError) as exc:
        raise ConfigError(f"Invalid profile document {path}: {exc}") from None


# ==================== OUTPUT ====================

def write_output(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)
    logger.info(f"Wrote {path}")


def dump_yaml(document: Dict[str, Any]) -> str:
    return yaml.safe_dump(document, sort_keys=False)


def record_run(command: str, config: WorkbenchConfig) -> Optional[int]:
    """Store the invocation when a results store is configured."""
    if not persistence_enabled():
        return None
    with get_db_context() as db:
        return crud.create_run(db, command, effective_config(config), config.seed).id
