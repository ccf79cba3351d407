"""
Pydantic schemas for experiment configuration and result documents.
"""

from pydantic import BaseModel, Field, field_validator, model_validator
from typing import Any, Dict, List, Literal, Optional

from config import DEFAULT_SEED, DEFAULT_THREADS, ENUMERATION_CAP
from model import AuditReport, PerturbationProfile, PrivacyModel, RKind, parse_budget


# ==================== SOLVER SCHEMAS ====================

class SolverOptions(BaseModel):
    """Multi-start and tolerance settings shared by every solver."""
    model: Literal["opt0", "opt1", "opt2"] = "opt0"
    restarts: int = Field(default=8, ge=1)
    max_iters: int = Field(default=500, ge=1)
    step_tol: float = Field(default=1e-12, gt=0)
    constraint_tol: float = Field(default=1e-10, gt=0)
    seed: int = DEFAULT_SEED
    threads: int = Field(default=1, ge=1)


# ==================== CONFIG SCHEMAS ====================

class ModelConfig(BaseModel):
    """Privacy levels: explicit budgets or multipliers of a swept base budget."""
    budgets: Optional[List[float]] = None
    multipliers: Optional[List[float]] = None
    level_sizes: Optional[List[int]] = None
    fractions: Optional[List[float]] = None
    r_kind: RKind = RKind.MIN

    @field_validator("budgets", mode="before")
    @classmethod
    def parse_budgets(cls, value):
        return None if value is None else [parse_budget(v) for v in value]

    @model_validator(mode="after")
    def check_levels(self):
        if (self.budgets is None) == (self.multipliers is None):
            raise ValueError("give exactly one of budgets or multipliers")
        t = len(self.budgets or self.multipliers)
        for name in ("level_sizes", "fractions"):
            value = getattr(self, name)
            if value is not None and len(value) != t:
                raise ValueError(f"{name} must have one entry per level ({t})")
        if self.level_sizes is not None and any(size < 0 for size in self.level_sizes):
            raise ValueError("level sizes must be non-negative")
        if self.fractions is not None and abs(sum(self.fractions) - 1.0) > 1e-9:
            raise ValueError("fractions must sum to 1")
        if self.multipliers is not None and any(k <= 0 for k in self.multipliers):
            raise ValueError("multipliers must be positive")
        return self

    @property
    def t(self) -> int:
        return len(self.budgets or self.multipliers)

    def budgets_for(self, epsilon_base: Optional[float] = None) -> List[float]:
        if self.budgets is not None:
            return list(self.budgets)
        if epsilon_base is None:
            raise ValueError("multipliers need a base budget")
        return [epsilon_base * k for k in self.multipliers]


class DatasetConfig(BaseModel):
    """Synthetic generator parameters or a transaction file."""
    source: Literal["powerlaw", "uniform", "file"] = "powerlaw"
    n: int = Field(default=100_000, ge=1)
    m: int = Field(default=100, ge=1)
    alpha: float = Field(default=2.0, gt=1.0)
    path: Optional[str] = None
    format: Literal["space", "csv"] = "space"
    single_item: bool = False
    name: Optional[str] = None

    @model_validator(mode="after")
    def check_path(self):
        if self.source == "file" and not self.path:
            raise ValueError("file datasets need a path")
        return self


class ExperimentConfig(BaseModel):
    """Mechanisms, base budgets and metrics for a simulation run."""
    mechanisms: List[str] = ["RAPPOR", "OUE", "IDUE"]
    epsilons: List[float] = [1.0, 2.0, 3.0, 4.0]
    repeats: int = Field(default=10, ge=1)
    k: List[int] = [10, 20]
    padded_len: Optional[int] = Field(default=None, ge=1)
    profile_path: Optional[str] = None

    @field_validator("epsilons", mode="before")
    @classmethod
    def parse_epsilons(cls, value):
        return [parse_budget(v) for v in value]

    @field_validator("mechanisms")
    @classmethod
    def normalize_mechanisms(cls, value):
        return [name.upper() for name in value]


class AuditConfig(BaseModel):
    """Small-domain brute-force settings."""
    items: int = Field(default=4, ge=2)
    itemset_items: int = Field(default=3, ge=1, le=4)
    padded_lens: List[int] = [1, 2]
    prior: Optional[List[float]] = None
    profile_path: Optional[str] = None
    enumeration_cap: int = Field(default=ENUMERATION_CAP, ge=1)


class OutputConfig(BaseModel):
    path: Optional[str] = None


class WorkbenchConfig(BaseModel):
    """One experiment file; every section is optional."""
    model: Optional[ModelConfig] = None
    solver: SolverOptions = Field(default_factory=SolverOptions)
    dataset: DatasetConfig = Field(default_factory=DatasetConfig)
    experiment: ExperimentConfig = Field(default_factory=ExperimentConfig)
    audit: AuditConfig = Field(default_factory=AuditConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    seed: int = DEFAULT_SEED
    threads: int = Field(default=DEFAULT_THREADS, ge=1)


# ==================== DOCUMENT SCHEMAS ====================

class CheckResult(BaseModel):
    """One audited claim."""
    check: str
    passed: bool
    max_ratio: float
    bound: float
    slack: float
    worst_pair: List[str]
    pairs_checked: int = 0
    detail: str = ""

    @classmethod
    def from_report(cls, report: AuditReport) -> "CheckResult":
        return cls(
            check=report.check,
            passed=report.passed,
            max_ratio=report.max_ratio,
            bound=report.bound,
            slack=report.slack,
            worst_pair=[str(side) for side in report.worst_pair],
            pairs_checked=report.pairs_checked,
            detail=report.detail,
        )

    class Config:
        from_attributes = True


class ProfileDocument(BaseModel):
    """Flat serialized profile with its privacy model and solver metadata."""
    a: List[float]
    b: List[float]
    dummy_a: Optional[float] = None
    dummy_b: Optional[float] = None
    budgets: List[float]
    level_sizes: List[int]
    r_kind: RKind = RKind.MIN
    model_name: str
    objective: Optional[float] = None
    seed: Optional[int] = None
    restarts_succeeded: Optional[int] = None
    audit: Optional[CheckResult] = None

    @field_validator("budgets", mode="before")
    @classmethod
    def parse_budgets(cls, value):
        return [parse_budget(v) for v in value]

    @classmethod
    def from_profile(cls, profile: PerturbationProfile, model: PrivacyModel, model_name: str,
                     **metadata: Any) -> "ProfileDocument":
        return cls(
            a=list(profile.a),
            b=list(profile.b),
            dummy_a=profile.dummy_a,
            dummy_b=profile.dummy_b,
            budgets=list(model.budgets),
            level_sizes=list(model.level_sizes),
            r_kind=model.r_kind,
            model_name=model_name,
            **metadata,
        )

    def to_profile(self) -> PerturbationProfile:
        return PerturbationProfile(tuple(self.a), tuple(self.b), self.dummy_a, self.dummy_b)

    def to_model(self) -> PrivacyModel:
        return PrivacyModel.from_level_sizes(self.budgets, self.level_sizes, self.r_kind)

    class Config:
        from_attributes = True
        protected_namespaces = ()


class AuditDocument(BaseModel):
    """Every check run by one audit, plus the symbolic leakage-bound table."""
    config: Dict[str, Any]
    profile: ProfileDocument
    checks: List[CheckResult]
    passed: bool
    leakage_table: Dict[str, List[str]] = {}


class DatasetSummary(BaseModel):
    """Size figures of a transaction dataset."""
    name: Optional[str] = None
    users: int
    items: int
    records: int
    mean_size: float
    p90_size: float
    max_size: int
