"""
CRUD operations for the results store.
"""

from sqlalchemy.orm import Session
from typing import Any, Dict, List, Optional, Sequence

from database_models import AuditRecord, ExperimentRun, ItemMapping, MetricRecord, ProfileRecord
from schemas import CheckResult, ProfileDocument


# ==================== RUN CRUD ====================

def create_run(db: Session, command: str, config: Dict[str, Any], seed: int) -> ExperimentRun:
    """Record a command invocation."""
    db_run = ExperimentRun(command=command, config=config, seed=seed)
    db.add(db_run)
    db.commit()
    db.refresh(db_run)
    return db_run


def get_run(db: Session, run_id: int) -> Optional[ExperimentRun]:
    """Get run by ID."""
    return db.query(ExperimentRun).filter(ExperimentRun.id == run_id).first()


# ==================== PROFILE CRUD ====================

def create_profile(db: Session, document: ProfileDocument, run_id: Optional[int] = None) -> ProfileRecord:
    """Store a profile document."""
    db_profile = ProfileRecord(
        run_id=run_id,
        model_name=document.model_name,
        a=document.a,
        b=document.b,
        dummy_a=document.dummy_a,
        dummy_b=document.dummy_b,
        budgets=document.budgets,
        level_sizes=document.level_sizes,
        r_kind=document.r_kind.value,
        objective=document.objective,
        seed=document.seed,
        restarts_succeeded=document.restarts_succeeded,
    )
    db.add(db_profile)
    db.commit()
    db.refresh(db_profile)
    return db_profile


def get_profile(db: Session, profile_id: int) -> Optional[ProfileRecord]:
    """Get profile by ID."""
    return db.query(ProfileRecord).filter(ProfileRecord.id == profile_id).first()


def list_profiles(db: Session, model_name: Optional[str] = None, limit: int = 50) -> List[ProfileRecord]:
    """Most recent profiles, optionally for one solver model."""
    query = db.query(ProfileRecord)
    if model_name:
        query = query.filter(ProfileRecord.model_name == model_name)
    return query.order_by(ProfileRecord.id.desc()).limit(limit).all()


# ==================== AUDIT CRUD ====================

def create_audit_records(db: Session, run_id: int, checks: Sequence[CheckResult]) -> List[AuditRecord]:
    """Store every check of an audit run."""
    records = [AuditRecord(run_id=run_id, **check.model_dump()) for check in checks]
    db.add_all(records)
    db.commit()
    return records


# ==================== METRIC CRUD ====================

def add_metric_records(db: Session, run_id: int, rows: Sequence[Dict[str, Any]]) -> int:
    """Store simulation rows; re_k / prec_k columns go into the top_k mapping."""
    fixed = {"mechanism", "model", "epsilon_base", "repeat", "mse_emp", "mse_theory", "theory_approx"}
    records = [
        MetricRecord(
            run_id=run_id,
            mechanism=row["mechanism"],
            model=row.get("model"),
            epsilon_base=row["epsilon_base"],
            repeat=str(row["repeat"]),
            mse_emp=row["mse_emp"],
            mse_theory=row.get("mse_theory"),
            theory_approx=bool(row.get("theory_approx", False)),
            top_k={key: value for key, value in row.items() if key not in fixed},
        )
        for row in rows
    ]
    db.add_all(records)
    db.commit()
    return len(records)


def get_run_metrics(db: Session, run_id: int) -> List[MetricRecord]:
    """All metric rows of a run in insertion order."""
    return db.query(MetricRecord).filter(MetricRecord.run_id == run_id).order_by(MetricRecord.id).all()


# ==================== ITEM MAPPING CRUD ====================

def save_item_mapping(db: Session, dataset_name: str, original_ids: Sequence[int]) -> ItemMapping:
    """Create or replace the dense-to-original id table of a dataset."""
    db_mapping = db.query(ItemMapping).filter(ItemMapping.dataset_name == dataset_name).first()
    if db_mapping is None:
        db_mapping = ItemMapping(dataset_name=dataset_name, original_ids=list(original_ids))
        db.add(db_mapping)
    else:
        db_mapping.original_ids = list(original_ids)
    db.commit()
    db.refresh(db_mapping)
    return db_mapping


def get_item_mapping(db: Session, dataset_name: str) -> Optional[List[int]]:
    """Original ids indexed by dense id - 1."""
    db_mapping = db.query(ItemMapping).filter(ItemMapping.dataset_name == dataset_name).first()
    return None if db_mapping is None else list(db_mapping.original_ids)
