from datetime import datetime
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, computed_field, conint

from config.constants import (
    DensityRule,
    EvaluatorKind,
    MAX_PASSWORD_BITS,
    PAPER_SIZES,
    PAPER_WIDTHS,
    WorkloadFamily,
)

RuleId = Literal["R1", "R2", "R3", "R4", "R5", "R6"]


class Violation(BaseModel):
    index: int | None = None
    rule: RuleId
    message: str


class ValidationReport(BaseModel):
    violations: List[Violation] = Field(default_factory=list)
    warnings: List[Violation] = Field(
        default_factory=list,
        description=(
            "Findings that do not make the program invalid in the current mode. "
            "Level completeness (R5) lands here unless strict mode is requested."
        ),
    )

    @computed_field
    @property
    def ok(self) -> bool:
        return not self.violations


class EvaluationResult(BaseModel):
    outputs: List[int]
    gates_executed: int
    levels_completed: int


class WorkloadSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    family: WorkloadFamily
    n: conint(ge=1)
    w: conint(ge=1)
    d: Optional[float] = Field(
        default=None,
        gt=0,
        le=1,
        description="COPY density, RANDOM_NAND only. Must be 1/(2^m w).",
    )
    seed: conint(ge=0, lt=2**64) = 0

    @property
    def k(self) -> int:
        return min(self.w, MAX_PASSWORD_BITS)

    @property
    def period(self) -> int | None:
        """Number of NAND2 gates between two COPYs (1/d), when d is set."""
        if self.d is None:
            return None
        return round(1 / self.d)


class GridSpec(BaseModel):
    widths: List[conint(ge=1)] = Field(default_factory=lambda: list(PAPER_WIDTHS))
    sizes: List[conint(ge=1)] = Field(default_factory=lambda: list(PAPER_SIZES))
    density_rule: DensityRule = DensityRule.HALVING
    scale_cap: Optional[conint(ge=1)] = None
    families: List[WorkloadFamily] = Field(
        default_factory=lambda: [WorkloadFamily.RANDOM_NAND, WorkloadFamily.PASSWORD]
    )
    seed: conint(ge=0, lt=2**64) = 0


class Measurement(BaseModel):
    family: Optional[WorkloadFamily] = None
    n: conint(ge=1)
    w: conint(ge=1)
    d: Optional[float] = None
    seed: Optional[int] = None
    evaluator: EvaluatorKind
    repeat: conint(ge=0) = 0
    runtime_s: float = Field(gt=0, description="Wall time of the evaluation only.")

    @computed_field
    @property
    def gate_rate(self) -> float:
        return self.n / self.runtime_s


class MeasurementOut(Measurement):
    id: int
    created_at: datetime

    class Config:
        from_attributes = True


class CostFit(BaseModel):
    alpha: float
    c: float
    r_squared: float = Field(ge=0, le=1)
    speedup_ratio: float = Field(
        description="Per-gate time at the widest width over the narrowest (R)."
    )
    widths: List[int]
    linearity: Dict[int, float] = Field(
        default_factory=dict,
        description="Per-width R² of runtime against n, when two or more sizes exist.",
    )


class HypothesisThresholds(BaseModel):
    linearity_r2: float = Field(default=0.98, ge=0, le=1)
    monotonic_tolerance: float = Field(default=0.10, ge=0)
    separation_bounds: Optional[Tuple[float, float]] = Field(
        default=None,
        description=(
            "Explicit (lo, hi) for the separation factor. When unset the bounds "
            "scale with the widths: sqrt(w_max/w_min) divided and multiplied by 10."
        ),
    )
    widths: Optional[List[int]] = Field(
        default=None,
        description="Configured grid widths; defaults to the measured widths.",
    )
    cv_threshold: float = Field(default=0.5, ge=0)


class HypothesisOutcome(BaseModel):
    id: Literal["H1", "H2"]
    accepted: bool
    statistics: Dict[str, Any] = Field(default_factory=dict)
    thresholds: Dict[str, Any] = Field(default_factory=dict)
    note: str = ""


class FitReport(BaseModel):
    fit: Optional[CostFit] = None
    hypotheses: List[HypothesisOutcome] = Field(default_factory=list)
    errors: List[str] = Field(default_factory=list)


class ProgramSummary(BaseModel):
    w: int
    n: int
    a: int
    b: int
    levels: int


class ValidationResponse(BaseModel):
    program: ProgramSummary
    report: ValidationReport


class RunResponse(BaseModel):
    outputs: str = Field(description="Outputs rendered as hex, lowest-indexed bits first.")
    gates_executed: int
    levels_completed: int
    evaluator: EvaluatorKind
    oracle_agrees: Optional[bool] = None
