"""
Database models for the ID-LDP workbench results store.
SQLAlchemy ORM models; SQLite is enough, any SQLAlchemy URL works.
"""

from sqlalchemy import Column, Integer, String, Text, DateTime, ForeignKey, Boolean, Float, JSON
from sqlalchemy.orm import relationship, declarative_base
from datetime import datetime, timezone

Base = declarative_base()


class ExperimentRun(Base):
    """One command invocation with its effective configuration."""
    __tablename__ = "experiment_runs"

    id = Column(Integer, primary_key=True, index=True)
    command = Column(String, nullable=False)  # optimize, simulate, audit, gendata
    config = Column(JSON, nullable=False)
    seed = Column(Integer, nullable=False)
    created_at = Column(DateTime(timezone=True), default=lambda: datetime.now(timezone.utc))

    # Relationships
    profiles = relationship("ProfileRecord", back_populates="run", cascade="all, delete-orphan")
    audits = relationship("AuditRecord", back_populates="run", cascade="all, delete-orphan")
    metrics = relationship("MetricRecord", back_populates="run", cascade="all, delete-orphan", order_by="MetricRecord.id")


class ProfileRecord(Base):
    """A solved or baseline perturbation profile and the model it was solved for."""
    __tablename__ = "profiles"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("experiment_runs.id", ondelete="CASCADE"), nullable=True)
    model_name = Column(String, nullable=False)  # opt0, opt1, opt2, rappor, oue
    a = Column(JSON, nullable=False)
    b = Column(JSON, nullable=False)
    dummy_a = Column(Float, nullable=True)
    dummy_b = Column(Float, nullable=True)
    budgets = Column(JSON, nullable=False)
    level_sizes = Column(JSON, nullable=False)
    r_kind = Column(String, default="min")
    objective = Column(Float, nullable=True)
    seed = Column(Integer, nullable=True)
    restarts_succeeded = Column(Integer, nullable=True)
    created_at = Column(DateTime(timezone=True), default=lambda: datetime.now(timezone.utc))

    # Relationships
    run = relationship("ExperimentRun", back_populates="profiles")


class AuditRecord(Base):
    """One check of an audit run."""
    __tablename__ = "audit_records"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("experiment_runs.id", ondelete="CASCADE"), nullable=False)
    check = Column(String, nullable=False)
    passed = Column(Boolean, nullable=False)
    max_ratio = Column(Float, nullable=False)
    bound = Column(Float, nullable=False)
    slack = Column(Float, nullable=False)
    worst_pair = Column(JSON, nullable=False)
    pairs_checked = Column(Integer, default=0)
    detail = Column(Text, default="")

    # Relationships
    run = relationship("ExperimentRun", back_populates="audits")


class MetricRecord(Base):
    """One CSV row of a simulation run."""
    __tablename__ = "metric_records"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("experiment_runs.id", ondelete="CASCADE"), nullable=False)
    mechanism = Column(String, nullable=False)
    model = Column(String, nullable=True)
    epsilon_base = Column(Float, nullable=False)
    repeat = Column(String, nullable=False)  # repeat index or "mean"
    mse_emp = Column(Float, nullable=False)
    mse_theory = Column(Float, nullable=True)
    theory_approx = Column(Boolean, default=False)
    top_k = Column(JSON, nullable=True)  # {"re_10": ..., "prec_10": ...}

    # Relationships
    run = relationship("ExperimentRun", back_populates="metrics")


class ItemMapping(Base):
    """Dense item ids of a loaded dataset mapped back to the original ids."""
    __tablename__ = "item_mappings"

    id = Column(Integer, primary_key=True, index=True)
    dataset_name = Column(String, unique=True, index=True, nullable=False)
    original_ids = Column(JSON, nullable=False)  # position i-1 holds the original id of item i
    created_at = Column(DateTime(timezone=True), default=lambda: datetime.now(timezone.utc))
