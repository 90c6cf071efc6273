from datetime import datetime

from sqlalchemy import (
    BigInteger,
    DateTime,
    Enum as SqlEnum,
    Float,
    Index,
    Integer,
    String,
    func,
)
from sqlalchemy.orm import Mapped, mapped_column

from config.constants import EvaluatorKind, WorkloadFamily
from config.db import Base


class MeasurementRecord(Base):
    __tablename__ = "measurements"
    __table_args__ = (
        Index("ix_measurements_family_evaluator_w", "family", "evaluator", "w"),
    )

    id: Mapped[int] = mapped_column(primary_key=True)
    family: Mapped[WorkloadFamily | None] = mapped_column(
        SqlEnum(WorkloadFamily), nullable=True
    )
    n: Mapped[int] = mapped_column(BigInteger, nullable=False)
    w: Mapped[int] = mapped_column(Integer, nullable=False)
    d: Mapped[float | None] = mapped_column(Float, nullable=True)
    # seeds span the full unsigned 64-bit range
    seed: Mapped[str | None] = mapped_column(String(20), nullable=True)
    evaluator: Mapped[EvaluatorKind] = mapped_column(SqlEnum(EvaluatorKind), nullable=False)
    repeat: Mapped[int] = mapped_column(Integer, default=0)
    runtime_s: Mapped[float] = mapped_column(Float, nullable=False)
    gate_rate: Mapped[float] = mapped_column(Float, nullable=False)
    created_at: Mapped[datetime] = mapped_column(
        DateTime(timezone=True), server_default=func.now()
    )
