"""
audit: analytic and brute-force privacy checks of a profile.
"""

import logging
from typing import List

import crud
from commands.common import (dump_yaml, effective_config, load_profile_document,
                             record_run, write_output)
from commands.optimize import optimize_profile
from database import get_db_context, persistence_enabled
from errors import AuditFailure, ConfigError
from model import AuditReport, PerturbationProfile, PrivacyModel, RKind
from privacy import (LEAKAGE_BOUND_TABLE, audit_composition, audit_itemset, audit_ldp_equivalence, audit_leakage,
                     audit_single_item, check_idldp)
from schemas import AuditDocument, CheckResult, ProfileDocument, WorkbenchConfig

logger = logging.getLogger(__name__)

NAME = "audit"
HELP = "Check a profile analytically and by exhaustive enumeration on a small domain"


def small_domain(model: PrivacyModel, size: int) -> List[int]:
    """One item from every occupied level first, then the lowest remaining ids, up to size items."""
    chosen = []
    for level in range(model.t):
        members = [i for i in range(1, model.m + 1) if model.level_of(i) == level]
        if members:
            chosen.append(members[0])
    chosen = chosen[:size]
    for item in range(1, model.m + 1):
        if len(chosen) >= size:
            break
        if item not in chosen:
            chosen.append(item)
    return sorted(chosen)


def _load_document(config: WorkbenchConfig) -> ProfileDocument:
    if config.audit.profile_path:
        return load_profile_document(config.audit.profile_path)
    return optimize_profile(config)


def run_checks(config: WorkbenchConfig, profile: PerturbationProfile, model: PrivacyModel) -> List[AuditReport]:
    """Every applicable check, in a fixed order."""
    section = config.audit
    cap = section.enumeration_cap
    reports = [check_idldp(profile, model)]

    small = model.restrict(small_domain(model, section.items))
    if small.m < 2:
        raise ConfigError("Brute-force audits need at least two items")
    reports.extend(audit_single_item(profile, small, cap=cap))
    reports.append(audit_composition([profile, profile], [small, small], cap=cap))

    if model.r_kind is RKind.MIN:
        reports.append(audit_ldp_equivalence(profile, small, cap=cap))
        prior = section.prior or [1.0 / small.m] * small.m
        if len(prior) != small.m:
            raise ConfigError(f"audit.prior needs {small.m} entries, one per audited item")
        reports.append(audit_leakage(prior, profile, small, cap=cap))

        if profile.has_dummy:
            itemset_model = model.restrict(small_domain(model, section.itemset_items))
            for padded_len in section.padded_lens:
                reports.extend(audit_itemset(profile, itemset_model, padded_len, cap=cap))
        else:
            logger.info("Profile has no dummy pair; item-set checks skipped")
    else:
        logger.info("LDP-equivalence, leakage and item-set checks apply to MinID-LDP only; skipped")
    return reports


def audit_profile(config: WorkbenchConfig) -> AuditDocument:
    document = _load_document(config)
    try:
        profile = document.to_profile()
        model = document.to_model()
    except ValueError as exc:
        raise ConfigError(f"Invalid profile document: {exc}") from None
    reports = run_checks(config, profile, model)
    for report in reports:
        logger.info(f"{report.check}: max ratio {report.max_ratio:.6g} against {report.bound:.6g} "
                    f"({'pass' if report.passed else 'FAIL'}) at {report.worst_pair}")
    checks = [CheckResult.from_report(report) for report in reports]
    return AuditDocument(
        config=effective_config(config),
        profile=document,
        checks=checks,
        passed=all(check.passed for check in checks),
        leakage_table={name: list(bounds) for name, bounds in LEAKAGE_BOUND_TABLE.items()},
    )


def run(config: WorkbenchConfig) -> AuditDocument:
    document = audit_profile(config)
    write_output(dump_yaml(document.model_dump(mode="json")), config.output.path)

    run_id = record_run(NAME, config)
    if persistence_enabled():
        with get_db_context() as db:
            crud.create_profile(db, document.profile, run_id)
            crud.create_audit_records(db, run_id, document.checks)

    failed = [check for check in document.checks if not check.passed]
    if failed:
        raise AuditFailure("; ".join(
            f"{check.check} violated at {tuple(check.worst_pair)}: {check.max_ratio:.6g} > {check.bound:.6g}"
            for check in failed
        ))
    return document
