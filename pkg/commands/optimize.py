"""
optimize: solve a perturbation profile for the configured privacy model.
"""

import logging

from commands.common import DEFAULT_MODEL, build_model, dump_yaml, effective_config, record_run, write_output
from database import get_db_context, persistence_enabled
from errors import AuditFailure
from optimizer import solve
from privacy import check_idldp
from schemas import CheckResult, ProfileDocument, WorkbenchConfig
import crud

logger = logging.getLogger(__name__)

NAME = "optimize"
HELP = "Solve per-level (a, b) probabilities and write a profile document"


def optimize_profile(config: WorkbenchConfig) -> ProfileDocument:
    """Solve, audit analytically and wrap the profile with its metadata."""
    section = config.model or DEFAULT_MODEL
    # fractions are spread over the dataset universe; explicit level sizes stand alone
    model = build_model(config, m=None if section.level_sizes is not None else config.dataset.m)
    options = config.solver.model_copy(update={"seed": config.seed, "threads": config.threads})
    result = solve(options.model, model, options)
    report = check_idldp(result.profile, model)
    logger.info(f"{result.model_name}: objective {result.objective:.6g}, "
                f"max ratio {report.max_ratio:.6g} against {report.bound:.6g}")
    return ProfileDocument.from_profile(
        result.profile,
        model,
        result.model_name,
        objective=result.objective,
        seed=result.seed,
        restarts_succeeded=result.restarts_succeeded,
        audit=CheckResult.from_report(report),
    )


def run(config: WorkbenchConfig) -> ProfileDocument:
    document = optimize_profile(config)
    write_output(dump_yaml({"config": effective_config(config), **document.model_dump(mode="json")}),
                 config.output.path)

    run_id = record_run(NAME, config)
    if persistence_enabled():
        with get_db_context() as db:
            crud.create_profile(db, document, run_id)

    if not document.audit.passed:
        raise AuditFailure(f"Solved profile violates {document.audit.worst_pair}: "
                           f"{document.audit.max_ratio:.6g} > {document.audit.bound:.6g}")
    return document
