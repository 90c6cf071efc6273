"""Command-line surface: gen, validate, run, bench, fit, dump and grid.

Exit status is 0 on success, 1 on a runtime or validation failure and 2 on
a usage or parse error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile
from contextlib import nullcontext
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from dotenv import load_dotenv
from pydantic import ValidationError

from config.constants import (
    DESK_SIZES,
    DESK_WIDTHS,
    DensityRule,
    EvaluatorKind,
    ExportFormat,
    WorkloadFamily,
)
from errors import BenchError, FormatError, InputLengthMismatch, VMError, WorkloadError
from schemas import GridSpec, HypothesisThresholds, WorkloadSpec
from services.bench import (
    DEFAULT_REPEATS,
    analyze,
    append_measurements,
    export,
    load_measurements,
    run_grid,
)
from services.bpw_format import Program, disassemble, parse, serialize, validate
from services.vm import bits_from_file, bits_from_hex, bits_to_hex, reference_eval, run
from services.workloads import generate, parameter_grid, program_filename, read_grid, write_grid

LOGGER = logging.getLogger("bpw")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def fail(code: int, message: str) -> int:
    print(f"bpw: error: {message}", file=sys.stderr)
    return code


def density(text: str) -> float:
    """Accept ``1/50`` as well as ``0.02``."""
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a density: {text!r}") from exc
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError(f"density must lie in (0, 1], got {text}")
    return float(value)


def read_program(path: Path) -> Program:
    return parse(Path(path).read_bytes())


def open_program(path: Path) -> tuple[Program | None, int]:
    try:
        return read_program(path), EXIT_OK
    except OSError as exc:
        return None, fail(EXIT_FAILURE, f"cannot read {path}: {exc.strerror or exc}")
    except FormatError as exc:
        return None, fail(EXIT_USAGE, f"{path}: {exc}")


def cmd_gen(args: argparse.Namespace) -> int:
    d = args.d
    if args.family is WorkloadFamily.PASSWORD and d is not None:
        return fail(EXIT_USAGE, "--d applies to random_nand only")
    if args.family is WorkloadFamily.RANDOM_NAND and d is None:
        d = 1 / args.w
    try:
        spec = WorkloadSpec(family=args.family, n=args.n, w=args.w, d=d, seed=args.seed)
        program = generate(spec)
    except (ValidationError, WorkloadError) as exc:
        return fail(EXIT_USAGE, str(exc))

    out = args.out or Path(program_filename(spec))
    try:
        out.write_bytes(serialize(program))
    except OSError as exc:
        return fail(EXIT_FAILURE, f"cannot write {out}: {exc.strerror or exc}")
    header = program.header
    print(f"{out}: w={header.w} n={header.n} a={header.a} b={header.b}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    program, code = open_program(args.path)
    if program is None:
        return code
    report = validate(program, strict=args.strict)
    for violation in report.violations:
        where = f" @{violation.index}" if violation.index is not None else ""
        print(f"{violation.rule}{where}: {violation.message}")
    for warning in report.warnings:
        print(f"warning {warning.rule}: {warning.message}")
    if report.ok:
        print("ok")
        return EXIT_OK
    print(f"invalid: {len(report.violations)} violation(s)")
    return EXIT_FAILURE


def read_inputs(args: argparse.Namespace, a: int) -> list[int]:
    if args.input_file is not None:
        return bits_from_file(args.input_file, a)
    if args.input is not None:
        return bits_from_hex(args.input, a)
    if a:
        raise ValueError(f"program takes {a} input bits; pass --input or --input-file")
    return []


def cmd_run(args: argparse.Namespace) -> int:
    program, code = open_program(args.path)
    if program is None:
        return code
    try:
        bits = read_inputs(args, program.header.a)
    except OSError as exc:
        return fail(EXIT_FAILURE, f"cannot read {args.input_file}: {exc.strerror or exc}")
    except (ValueError, InputLengthMismatch) as exc:
        return fail(EXIT_USAGE, str(exc))

    report = validate(program)
    if not report.ok:
        first = report.violations[0]
        return fail(EXIT_FAILURE, f"{args.path} does not validate: {first.rule} {first.message}")

    try:
        result = run(program, bits, args.evaluator)
    except VMError as exc:
        return fail(EXIT_FAILURE, str(exc))
    print(bits_to_hex(result.outputs))

    if args.oracle:
        try:
            expected = reference_eval(program, bits)
        except VMError as exc:
            return fail(EXIT_FAILURE, f"reference evaluator: {exc}")
        if expected != result.outputs:
            differing = [
                position
                for position, (got, want) in enumerate(zip(result.outputs, expected))
                if got != want
            ]
            print(
                f"oracle mismatch at output bit(s) {differing[:16]}: "
                f"{args.evaluator.value}={bits_to_hex(result.outputs)} "
                f"reference={bits_to_hex(expected)}",
                file=sys.stderr,
            )
            return EXIT_FAILURE
        print("oracle: agree")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    try:
        if args.grid is not None:
            grid = read_grid(args.grid)
        else:
            grid = GridSpec(widths=list(DESK_WIDTHS), sizes=list(DESK_SIZES), seed=args.seed)
    except OSError as exc:
        return fail(EXIT_FAILURE, f"cannot read {args.grid}: {exc.strerror or exc}")
    except ValueError as exc:
        return fail(EXIT_USAGE, f"invalid grid: {exc}")
    if args.families:
        grid = grid.model_copy(update={"families": args.families})

    specs = parameter_grid(grid)
    if not specs:
        return fail(EXIT_USAGE, "grid holds no feasible cell")
    evaluators = args.evaluators or list(EvaluatorKind)

    session = None
    if args.store:
        from config.db import SessionLocal, init_db
        from services.results import store_measurements

        init_db()
        session = SessionLocal()

    written = 0
    workdir = nullcontext(args.workdir) if args.workdir else tempfile.TemporaryDirectory()
    try:
        args.out.write_text("", encoding="utf-8")
        with workdir as directory:
            Path(directory).mkdir(parents=True, exist_ok=True)
            for batch in run_grid(specs, evaluators, args.repeats, Path(directory)):
                append_measurements(args.out, batch)
                if session is not None:
                    store_measurements(session, batch)
                written += len(batch)
    except WorkloadError as exc:
        return fail(EXIT_USAGE, str(exc))
    except (BenchError, VMError) as exc:
        return fail(EXIT_FAILURE, str(exc))
    except OSError as exc:
        return fail(EXIT_FAILURE, f"cannot write results: {exc.strerror or exc}")
    finally:
        if session is not None:
            session.close()

    print(f"{written} measurements from {len(specs)} cells written to {args.out}")
    return EXIT_OK


def cmd_fit(args: argparse.Namespace) -> int:
    try:
        measurements = load_measurements(args.input)
    except BenchError as exc:
        return fail(EXIT_FAILURE, str(exc))
    except ValueError as exc:
        return fail(EXIT_USAGE, f"invalid measurements in {args.input}: {exc}")

    try:
        thresholds = HypothesisThresholds(
            linearity_r2=args.linearity_r2,
            cv_threshold=args.cv_threshold,
            widths=args.widths,
        )
    except ValidationError as exc:
        return fail(EXIT_USAGE, str(exc))
    report = analyze(measurements, thresholds)

    if report.fit is not None:
        fit = report.fit
        print(f"alpha={fit.alpha:.3f}")
        print(f"c={fit.c:.6g}")
        print(f"r_squared={fit.r_squared:.4f}")
        print(f"R={fit.speedup_ratio:.3f} (w={fit.widths[-1]} over w={fit.widths[0]})")
    for outcome in report.hypotheses:
        print(f"{outcome.id}: {'accepted' if outcome.accepted else 'rejected'}")
        if outcome.id == "H1":
            for group, stats in outcome.statistics.items():
                lo, hi = stats["separation_bounds"]
                print(
                    f"  {group}: S={stats['separation']:.3f} bounds=[{lo:.3f}, {hi:.3f}] "
                    f"linear={stats['linear']} nondecreasing={stats['nondecreasing']}"
                )
        else:
            print(f"  cv={outcome.statistics['coefficient_of_variation']:.3f}")
    for error in report.errors:
        print(f"skipped {error}", file=sys.stderr)

    if args.out is not None:
        try:
            export(report, ExportFormat.JSON, args.out)
        except BenchError as exc:
            return fail(EXIT_FAILURE, str(exc))
    return EXIT_OK if report.fit is not None else EXIT_FAILURE


def cmd_dump(args: argparse.Namespace) -> int:
    program, code = open_program(args.path)
    if program is None:
        return code
    text = disassemble(program, args.limit)
    if text:
        print(text)
    return EXIT_OK


def cmd_grid(args: argparse.Namespace) -> int:
    grid = GridSpec(density_rule=args.density_rule, scale_cap=args.scale_cap, seed=args.seed)
    if args.desk:
        grid = grid.model_copy(update={"widths": list(DESK_WIDTHS), "sizes": list(DESK_SIZES)})
    if args.out is None:
        print(grid.model_dump_json(indent=2))
        return EXIT_OK
    try:
        write_grid(grid, args.out)
    except OSError as exc:
        return fail(EXIT_FAILURE, f"cannot write {args.out}: {exc.strerror or exc}")
    print(f"grid with {len(parameter_grid(grid))} cells written to {args.out}")
    return EXIT_OK


def log_level(verbose: bool) -> str:
    """INFO with -v, otherwise BPW_LOG_LEVEL (WARNING when unset)."""
    if verbose:
        return "INFO"
    return os.getenv("BPW_LOG_LEVEL", "WARNING").upper()


def build_parser(default_seed: int = 0) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bpw", description="BPW program toolkit")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    commands = parser.add_subparsers(dest="command", required=True)

    evaluator_names = "{" + ",".join(kind.value for kind in EvaluatorKind) + "}"
    family_names = "{" + ",".join(family.value for family in WorkloadFamily) + "}"

    gen = commands.add_parser("gen", help="generate a benchmark program")
    gen.add_argument("--family", type=WorkloadFamily, required=True, metavar=family_names)
    gen.add_argument("--n", type=int, required=True, help="requested instruction count")
    gen.add_argument("--w", type=int, required=True, help="level width")
    gen.add_argument("--d", type=density, help="COPY density, e.g. 1/50 (random_nand, default 1/w)")
    gen.add_argument("--seed", type=int, default=default_seed)
    gen.add_argument("--out", type=Path)
    gen.set_defaults(handler=cmd_gen)

    check = commands.add_parser("validate", help="check a program against the register rules")
    check.add_argument("path", type=Path)
    check.add_argument("--strict", action="store_true", help="report incomplete levels as violations")
    check.set_defaults(handler=cmd_validate)

    execute = commands.add_parser("run", help="evaluate a program")
    execute.add_argument("path", type=Path)
    source = execute.add_mutually_exclusive_group()
    source.add_argument("--input", help="input bits as hex, first bit most significant")
    source.add_argument("--input-file", type=Path, help="raw file holding the input bits")
    execute.add_argument(
        "--evaluator", type=EvaluatorKind, default=EvaluatorKind.BYTEWISE, metavar=evaluator_names
    )
    execute.add_argument("--oracle", action="store_true", help="cross-check with the reference evaluator")
    execute.set_defaults(handler=cmd_run)

    bench = commands.add_parser("bench", help="time generated programs over a grid")
    bench.add_argument("--grid", type=Path, help="grid JSON (default: desk-scale grid)")
    bench.add_argument("--families", type=WorkloadFamily, nargs="+", metavar=family_names)
    bench.add_argument("--evaluators", type=EvaluatorKind, nargs="+", metavar=evaluator_names)
    bench.add_argument("--repeats", type=int, default=DEFAULT_REPEATS)
    bench.add_argument("--out", type=Path, required=True, help="CSV written as cells complete")
    bench.add_argument("--workdir", type=Path, help="keep generated programs here")
    bench.add_argument("--seed", type=int, default=default_seed)
    bench.add_argument("--store", action="store_true", help="also persist to DATABASE_URL")
    bench.set_defaults(handler=cmd_bench)

    fit = commands.add_parser("fit", help="fit alpha and test the hypotheses")
    fit.add_argument("--in", dest="input", type=Path, required=True)
    fit.add_argument("--out", type=Path, help="write the fit report as JSON")
    fit.add_argument("--linearity-r2", type=float, default=0.98)
    fit.add_argument("--cv-threshold", type=float, default=0.5)
    fit.add_argument("--widths", type=int, nargs="+", help="configured grid widths for the bounds")
    fit.set_defaults(handler=cmd_fit)

    dump = commands.add_parser("dump", help="disassemble a program")
    dump.add_argument("path", type=Path)
    dump.add_argument("--limit", type=int)
    dump.set_defaults(handler=cmd_dump)

    grid = commands.add_parser("grid", help="emit the default parameter grid as JSON")
    grid.add_argument("--scale-cap", type=int)
    grid.add_argument("--density-rule", type=DensityRule, default=DensityRule.HALVING)
    grid.add_argument("--desk", action="store_true", help="desk-scale widths and sizes")
    grid.add_argument("--seed", type=int, default=default_seed)
    grid.add_argument("--out", type=Path)
    grid.set_defaults(handler=cmd_grid)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    load_dotenv()
    try:
        default_seed = int(os.getenv("BPW_SEED", "0"))
    except ValueError:
        return fail(EXIT_USAGE, "BPW_SEED must be an integer")

    parser = build_parser(default_seed)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    level = log_level(args.verbose)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    LOGGER.debug("Running %s", args.command)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
