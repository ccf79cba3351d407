"""
gendata: write a synthetic transaction file and its metadata sidecar.
"""

import logging
from pathlib import Path

from commands.common import build_dataset, dump_yaml, effective_config, record_run, write_output
from data import POWERLAW_REALIZATION, UNIFORM_REALIZATION, summarize, write_transactions
from errors import ConfigError
from model import Dataset
from schemas import WorkbenchConfig

logger = logging.getLogger(__name__)

NAME = "gendata"
HELP = "Generate a power-law or uniform dataset in the space-separated format"


def run(config: WorkbenchConfig) -> Dataset:
    section = config.dataset
    if section.source == "file":
        raise ConfigError("gendata needs dataset.source powerlaw or uniform")
    if not config.output.path:
        raise ConfigError("gendata needs an output path (--out)")
    dataset = build_dataset(section, config.seed)
    if section.single_item and not dataset.is_single_item:
        raise ConfigError("Generated records are not single items")

    path = Path(config.output.path)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_transactions(dataset, path)
    meta = {
        "seed": config.seed,
        "generator": section.model_dump(mode="json", exclude={"path", "format"}),
        "realization": POWERLAW_REALIZATION if section.source == "powerlaw" else UNIFORM_REALIZATION,
        "config": effective_config(config),
        "summary": summarize(dataset, section.name or path.stem).model_dump(mode="json"),
    }
    write_output(dump_yaml(meta), f"{path}.meta.yaml")
    logger.info(f"Wrote {dataset.n} records over m={dataset.m} to {path}")
    record_run(NAME, config)
    return dataset
