import os
from typing import List, Optional

from fastapi import APIRouter, HTTPException, Query, status
from fastapi.responses import Response

from errors import WorkloadError
from schemas import GridSpec, WorkloadSpec
from services.bpw_format import serialize
from services.workloads import generate, parameter_grid, program_filename

router = APIRouter(prefix="/workloads")


@router.post("/generate")
def generate_workload(spec: WorkloadSpec):
    try:
        program = generate(spec)
    except WorkloadError as exc:
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail=f"Carga de trabajo inválida: {exc}",
        ) from exc
    return Response(
        content=serialize(program),
        media_type="application/octet-stream",
        headers={
            "X-BPW-N": str(program.header.n),
            "Content-Disposition": f'attachment; filename="{program_filename(spec)}"',
        },
    )


@router.get("/grid", response_model=GridSpec)
def default_grid(
    scale_cap: Optional[int] = Query(None, ge=1),
    seed: Optional[int] = Query(None, ge=0),
):
    if seed is None:
        seed = int(os.getenv("BPW_SEED", "0"))
    return GridSpec(scale_cap=scale_cap, seed=seed)


@router.post("/grid/expand", response_model=List[WorkloadSpec])
def expand_grid(grid: GridSpec):
    return parameter_grid(grid)
