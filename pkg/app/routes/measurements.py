import io
from typing import List, Optional

from fastapi import APIRouter, Depends, HTTPException, Query, status
from fastapi.responses import Response
from sqlalchemy.orm import Session

from config.constants import EvaluatorKind, ExportFormat, WorkloadFamily
from config.db import get_db
from schemas import FitReport, HypothesisThresholds, Measurement, MeasurementOut
from services.bench import analyze, export
from services.results import list_measurements, store_measurements, stored_measurements

router = APIRouter(prefix="/measurements")

MEDIA_TYPES = {
    ExportFormat.CSV: "text/csv",
    ExportFormat.JSON: "application/json",
}


@router.post("", response_model=List[MeasurementOut])
def ingest_measurements(payload: List[Measurement], db: Session = Depends(get_db)):
    if not payload:
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail="No se recibieron mediciones",
        )
    return store_measurements(db, payload)


@router.get("", response_model=List[MeasurementOut])
def get_measurements(
    family: Optional[WorkloadFamily] = None,
    evaluator: Optional[EvaluatorKind] = None,
    limit: Optional[int] = Query(None, ge=1),
    db: Session = Depends(get_db),
):
    return list_measurements(db, family=family, evaluator=evaluator, limit=limit)


@router.get("/fit", response_model=FitReport)
def fit_measurements(
    family: Optional[WorkloadFamily] = None,
    evaluator: Optional[EvaluatorKind] = None,
    linearity_r2: float = Query(0.98, ge=0, le=1),
    cv_threshold: float = Query(0.5, ge=0),
    db: Session = Depends(get_db),
):
    measurements = stored_measurements(db, family=family, evaluator=evaluator)
    if not measurements:
        raise HTTPException(
            status_code=status.HTTP_404_NOT_FOUND,
            detail="No hay mediciones para ajustar",
        )
    thresholds = HypothesisThresholds(linearity_r2=linearity_r2, cv_threshold=cv_threshold)
    return analyze(measurements, thresholds)


@router.get("/export")
def export_measurements(
    format: ExportFormat = Query(ExportFormat.CSV),
    family: Optional[WorkloadFamily] = None,
    evaluator: Optional[EvaluatorKind] = None,
    db: Session = Depends(get_db),
):
    buffer = io.StringIO()
    export(stored_measurements(db, family=family, evaluator=evaluator), format, buffer)
    return Response(
        content=buffer.getvalue(),
        media_type=MEDIA_TYPES[format],
        headers={"Content-Disposition": f'attachment; filename="measurements.{format.value}"'},
    )
