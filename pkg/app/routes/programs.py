import os
from typing import Optional

from fastapi import APIRouter, File, Form, HTTPException, UploadFile, status
from fastapi.responses import PlainTextResponse

from config.constants import EvaluatorKind
from errors import FormatError, VMError
from schemas import ProgramSummary, RunResponse, ValidationResponse
from services.bpw_format import Program, disassemble, parse, validate
from services.vm import bits_from_hex, bits_to_hex, reference_eval, run

router = APIRouter(prefix="/programs")


def strict_by_default() -> bool:
    return os.getenv("BPW_STRICT", "false").lower() == "true"


async def load_program(upload: UploadFile) -> Program:
    data = await upload.read()
    try:
        return parse(data)
    except FormatError as exc:
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail=f"Archivo BPW inválido: {exc}",
        ) from exc


def summarize(program: Program) -> ProgramSummary:
    header = program.header
    return ProgramSummary(
        w=header.w, n=header.n, a=header.a, b=header.b, levels=program.levels
    )


@router.post("/validate", response_model=ValidationResponse)
async def validate_program(
    file: UploadFile = File(...),
    strict: Optional[bool] = Form(None),
):
    program = await load_program(file)
    if strict is None:
        strict = strict_by_default()
    return ValidationResponse(
        program=summarize(program), report=validate(program, strict=strict)
    )


@router.post("/run", response_model=RunResponse)
async def run_program(
    file: UploadFile = File(...),
    inputs: str = Form(""),
    evaluator: EvaluatorKind = Form(EvaluatorKind.BYTEWISE),
    oracle: bool = Form(False),
):
    program = await load_program(file)
    report = validate(program)
    if not report.ok:
        first = report.violations[0]
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            detail=f"El programa no es válido ({first.rule}): {first.message}",
        )
    try:
        bits = bits_from_hex(inputs, program.header.a)
    except ValueError as exc:
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail=f"Entrada inválida: {exc}",
        ) from exc
    try:
        result = run(program, bits, evaluator)
        agrees = reference_eval(program, bits) == result.outputs if oracle else None
    except VMError as exc:
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            detail=f"Error de ejecución: {exc}",
        ) from exc
    return RunResponse(
        outputs=bits_to_hex(result.outputs),
        gates_executed=result.gates_executed,
        levels_completed=result.levels_completed,
        evaluator=evaluator,
        oracle_agrees=agrees,
    )


@router.post("/dump", response_class=PlainTextResponse)
async def dump_program(
    file: UploadFile = File(...),
    limit: Optional[int] = Form(None, ge=0),
):
    program = await load_program(file)
    return disassemble(program, limit)
