"""Persistence of benchmark measurements in the results database."""

from __future__ import annotations

import logging
from typing import Sequence

from sqlalchemy import select
from sqlalchemy.orm import Session

from config.constants import EvaluatorKind, WorkloadFamily
from models import MeasurementRecord
from schemas import Measurement

LOGGER = logging.getLogger(__name__)


def store_measurements(db: Session, measurements: Sequence[Measurement]) -> list[MeasurementRecord]:
    records = [
        MeasurementRecord(
            family=measurement.family,
            n=measurement.n,
            w=measurement.w,
            d=measurement.d,
            seed=None if measurement.seed is None else str(measurement.seed),
            evaluator=measurement.evaluator,
            repeat=measurement.repeat,
            runtime_s=measurement.runtime_s,
            gate_rate=measurement.gate_rate,
        )
        for measurement in measurements
    ]
    db.add_all(records)
    db.commit()
    for record in records:
        db.refresh(record)
    LOGGER.info("Stored %s measurements", len(records))
    return records


def list_measurements(
    db: Session,
    *,
    family: WorkloadFamily | None = None,
    evaluator: EvaluatorKind | None = None,
    limit: int | None = None,
) -> list[MeasurementRecord]:
    stmt = select(MeasurementRecord).order_by(MeasurementRecord.id.asc())
    if family is not None:
        stmt = stmt.where(MeasurementRecord.family == family)
    if evaluator is not None:
        stmt = stmt.where(MeasurementRecord.evaluator == evaluator)
    if limit is not None:
        stmt = stmt.limit(limit)
    return list(db.scalars(stmt).all())


def stored_measurements(
    db: Session,
    *,
    family: WorkloadFamily | None = None,
    evaluator: EvaluatorKind | None = None,
) -> list[Measurement]:
    return [
        Measurement.model_validate(record, from_attributes=True)
        for record in list_measurements(db, family=family, evaluator=evaluator)
    ]
