"""Timing harness, n*w^alpha cost-model fitting and hypothesis checks."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Callable, Iterable, Iterator, Sequence

import numpy as np

from config.constants import EvaluatorKind, ExportFormat, MEASUREMENT_COLUMNS
from errors import BenchError, ClockUnavailable, InsufficientSpan, IoFailure
from schemas import (
    CostFit,
    FitReport,
    HypothesisOutcome,
    HypothesisThresholds,
    Measurement,
    WorkloadSpec,
)
from services.bpw_format import Program, parse, validate
from services.vm import execute, init, load, random_inputs
from services.workloads import parse_program_filename, write_program

LOGGER = logging.getLogger(__name__)

DEFAULT_REPEATS = 5
CV_NOTE = (
    "coefficient-of-variation threshold stands in for a significance test; "
    "no test is named for 'not significantly affected'"
)


def cost_metric(n: int, w: int, alpha: float = 0.5) -> float:
    """Predicted relative runtime n * w**alpha (alpha=1 is the power-limited n*w model)."""
    if n < 1 or w < 1:
        raise ValueError("n and w must be at least 1")
    return n * w**alpha


def energy_ratio(joules: float, n: int, w: int) -> float:
    """Externally measured energy over n*w."""
    return joules / cost_metric(n, w, alpha=1.0)


def _clock_resolution() -> float:
    info = time.get_clock_info("perf_counter")
    if not info.monotonic:
        raise ClockUnavailable("perf_counter is not monotonic on this platform")
    return info.resolution


def time_run(
    path: Path,
    evaluator: EvaluatorKind,
    repeats: int = DEFAULT_REPEATS,
    *,
    inputs: Sequence[int] | None = None,
    seed: int | None = None,
    workload: WorkloadSpec | None = None,
    parser: Callable[[bytes], Program] = parse,
    checked: bool | None = None,
) -> list[Measurement]:
    """Time evaluation of the program stored at ``path``.

    The file is read, parsed, validated and loaded once, and each repeat's
    machine state is initialised, before its timer starts; only ``execute``
    is timed. Without explicit ``inputs`` every repeat draws fresh input
    bits from a generator seeded with ``seed`` (or the workload seed).
    BITPACKED loads skip the register checks unless ``checked`` says
    otherwise.
    """
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    resolution = _clock_resolution()
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    program = parser(data)
    report = validate(program)
    if not report.ok:
        raise BenchError(f"{path} fails validation with {len(report.violations)} violations")

    evaluator = EvaluatorKind(evaluator)
    if workload is None:
        workload = parse_program_filename(path.name)
    if seed is None:
        seed = workload.seed if workload else 0
    if checked is None:
        checked = evaluator is EvaluatorKind.BYTEWISE
    rng = np.random.default_rng(seed)
    header = program.header
    loaded = load(program, evaluator, checked=checked)

    measurements = []
    for repeat in range(repeats):
        bits = list(inputs) if inputs is not None else random_inputs(header.a, rng)
        state = init(program, bits, evaluator, checked=checked)
        started = time.perf_counter()
        execute(loaded, state)
        elapsed = max(time.perf_counter() - started, resolution)
        measurement = Measurement(
            family=workload.family if workload else None,
            n=header.n,
            w=header.w,
            d=workload.d if workload else None,
            seed=seed,
            evaluator=evaluator,
            repeat=repeat,
            runtime_s=elapsed,
        )
        LOGGER.info(
            "Timed %s w=%s n=%s repeat=%s: %.6fs (%.0f gates/s)",
            evaluator.value, header.w, header.n, repeat, elapsed, measurement.gate_rate,
        )
        measurements.append(measurement)
    return measurements


def run_grid(
    specs: Iterable[WorkloadSpec],
    evaluators: Sequence[EvaluatorKind],
    repeats: int,
    workdir: Path,
) -> Iterator[list[Measurement]]:
    """Generate and time every cell, one evaluation at a time."""
    for spec in specs:
        path, _ = write_program(spec, workdir)
        for evaluator in evaluators:
            yield time_run(path, evaluator, repeats, workload=spec)


def size_class(n: int) -> int:
    """n rounded to two significant figures, so nearby actual sizes share a cell."""
    return int(float(f"{n:.2g}"))


@dataclass(frozen=True)
class Cell:
    w: int
    size: int
    n: float
    runtime: float

    @property
    def per_gate(self) -> float:
        return self.runtime / self.n


def _cells(measurements: Iterable[Measurement]) -> dict[tuple[int, int], Cell]:
    grouped: dict[tuple[int, int], list[Measurement]] = defaultdict(list)
    for measurement in measurements:
        grouped[(measurement.w, size_class(measurement.n))].append(measurement)
    return {
        key: Cell(
            w=key[0],
            size=key[1],
            n=float(np.median([m.n for m in group])),
            runtime=float(np.median([m.runtime_s for m in group])),
        )
        for key, group in grouped.items()
    }


def _sizes_by_width(cells: dict[tuple[int, int], Cell]) -> dict[int, set[int]]:
    sizes: dict[int, set[int]] = defaultdict(set)
    for w, size in cells:
        sizes[w].add(size)
    return dict(sorted(sizes.items()))


def _r_squared(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares line through (x, y): slope, intercept, R²."""
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    ss_res = float(np.sum(residual**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    scale = float(np.sum(y**2)) or 1.0
    if ss_tot <= 1e-24 * scale:
        return float(slope), float(intercept), 1.0
    return float(slope), float(intercept), min(1.0, max(0.0, 1.0 - ss_res / ss_tot))


def _linearity(cells: dict[tuple[int, int], Cell]) -> dict[int, float]:
    result = {}
    for w, sizes in _sizes_by_width(cells).items():
        if len(sizes) < 2:
            continue
        points = [cells[(w, size)] for size in sorted(sizes)]
        ns = np.array([cell.n for cell in points])
        ts = np.array([cell.runtime for cell in points])
        result[w] = _r_squared(ns, ts)[2]
    return result


def _separation(cells: dict[tuple[int, int], Cell], narrow: int, wide: int) -> float:
    sizes = _sizes_by_width(cells)
    common = sorted(sizes.get(narrow, set()) & sizes.get(wide, set()))
    if not common:
        raise InsufficientSpan(f"no common n between w={narrow} and w={wide}")
    ratios = [cells[(wide, size)].per_gate / cells[(narrow, size)].per_gate for size in common]
    return float(np.mean(ratios))


def fit_alpha(measurements: Sequence[Measurement]) -> CostFit:
    """Fit t ~ c * n * w**alpha by least squares on log(t/n) against log w."""
    cells = _cells(measurements)
    sizes = _sizes_by_width(cells)
    widths = list(sizes)
    common = set.intersection(*sizes.values()) if sizes else set()
    if len(widths) < 3 or not common:
        raise InsufficientSpan(
            f"need at least 3 widths sharing one n, got widths {widths} with common sizes {sorted(common)}"
        )
    x = np.log(np.array(widths, dtype=float))
    y = np.array(
        [np.mean([math.log(cells[(w, size)].per_gate) for size in sorted(common)]) for w in widths]
    )
    alpha, intercept, r_squared = _r_squared(x, y)
    return CostFit(
        alpha=alpha,
        c=math.exp(intercept),
        r_squared=r_squared,
        speedup_ratio=_separation(cells, widths[0], widths[-1]),
        widths=widths,
        linearity=_linearity(cells),
    )


def _group_key(measurement: Measurement) -> str:
    family = measurement.family.value if measurement.family else "unknown"
    return f"{family}/{measurement.evaluator.value}"


def _groups(measurements: Iterable[Measurement]) -> dict[str, list[Measurement]]:
    groups: dict[str, list[Measurement]] = defaultdict(list)
    for measurement in measurements:
        groups[_group_key(measurement)].append(measurement)
    return dict(sorted(groups.items()))


def separation_bounds(thresholds: HypothesisThresholds, widths: Sequence[int]) -> tuple[float, float]:
    if thresholds.separation_bounds is not None:
        return thresholds.separation_bounds
    configured = thresholds.widths or widths
    expected = math.sqrt(max(configured) / min(configured))
    return expected / 10, expected * 10


def hypothesis1(
    measurements: Sequence[Measurement],
    thresholds: HypothesisThresholds | None = None,
) -> HypothesisOutcome:
    """Runtime linear in n, nondecreasing in w, separation S within bounds; per group."""
    thresholds = thresholds or HypothesisThresholds()
    groups = _groups(measurements)
    if not groups:
        raise InsufficientSpan("no measurements")

    statistics = {}
    used_bounds = None
    accepted = True
    for key, group in groups.items():
        cells = _cells(group)
        sizes = _sizes_by_width(cells)
        widths = list(sizes)
        if len(widths) < 2:
            raise InsufficientSpan(f"{key}: need at least 2 widths, got {widths}")
        thin = [w for w, found in sizes.items() if len(found) < 2]
        if thin:
            raise InsufficientSpan(f"{key}: widths {thin} have fewer than 2 sizes")
        if thresholds.widths:
            missing = {min(thresholds.widths), max(thresholds.widths)} - set(widths)
            if missing:
                raise InsufficientSpan(f"{key}: extreme grid widths {sorted(missing)} not measured")

        linearity = _linearity(cells)
        linear = all(value >= thresholds.linearity_r2 for value in linearity.values())
        per_gate = [
            float(np.mean([cells[(w, size)].per_gate for size in sizes[w]])) for w in widths
        ]
        monotone = all(
            later >= earlier * (1 - thresholds.monotonic_tolerance)
            for earlier, later in zip(per_gate, per_gate[1:])
        )
        separation = _separation(cells, widths[0], widths[-1])
        lo, hi = separation_bounds(thresholds, widths)
        used_bounds = (lo, hi)
        within = lo <= separation <= hi
        group_ok = linear and monotone and within
        accepted = accepted and group_ok
        statistics[key] = {
            "separation": separation,
            "separation_bounds": [lo, hi],
            "linearity": {str(w): value for w, value in linearity.items()},
            "linear": linear,
            "nondecreasing": monotone,
            "accepted": group_ok,
        }

    return HypothesisOutcome(
        id="H1",
        accepted=accepted,
        statistics=statistics,
        thresholds={
            "linearity_r2": thresholds.linearity_r2,
            "monotonic_tolerance": thresholds.monotonic_tolerance,
            "separation_bounds": list(used_bounds) if used_bounds else None,
        },
    )


def hypothesis2(
    measurements: Sequence[Measurement],
    thresholds: HypothesisThresholds | None = None,
) -> HypothesisOutcome:
    """Speedup ratio R stable across (family, evaluator) groups."""
    thresholds = thresholds or HypothesisThresholds()
    groups = _groups(measurements)
    if len(groups) < 2:
        raise InsufficientSpan(f"need at least 2 groups, got {list(groups)}")
    ratios = {}
    for key, group in groups.items():
        cells = _cells(group)
        widths = list(_sizes_by_width(cells))
        if len(widths) < 2:
            raise InsufficientSpan(f"{key}: need at least 2 widths, got {widths}")
        ratios[key] = _separation(cells, widths[0], widths[-1])
    values = np.array(list(ratios.values()))
    cv = float(np.std(values, ddof=1) / np.mean(values))
    return HypothesisOutcome(
        id="H2",
        accepted=cv <= thresholds.cv_threshold,
        statistics={"speedup_ratios": ratios, "coefficient_of_variation": cv},
        thresholds={"cv_threshold": thresholds.cv_threshold},
        note=CV_NOTE,
    )


def analyze(
    measurements: Sequence[Measurement],
    thresholds: HypothesisThresholds | None = None,
) -> FitReport:
    report = FitReport()
    try:
        report.fit = fit_alpha(measurements)
    except InsufficientSpan as exc:
        report.errors.append(f"fit: {exc}")
    for check in (hypothesis1, hypothesis2):
        try:
            report.hypotheses.append(check(measurements, thresholds))
        except InsufficientSpan as exc:
            report.errors.append(f"{check.__name__}: {exc}")
    return report


def _csv_row(measurement: Measurement) -> list:
    record = measurement.model_dump(mode="json")
    return ["" if record[column] is None else record[column] for column in MEASUREMENT_COLUMNS]


def _write(destination: Path | IO[str], text_writer: Callable[[IO[str]], None], *, append: bool = False) -> None:
    if hasattr(destination, "write"):
        text_writer(destination)
        return
    try:
        with open(destination, "a" if append else "w", newline="", encoding="utf-8") as handle:
            text_writer(handle)
    except OSError as exc:
        raise IoFailure(f"cannot write {destination}: {exc}") from exc


def export(
    records: Sequence[Measurement] | FitReport | CostFit | HypothesisOutcome,
    fmt: ExportFormat,
    destination: Path | IO[str],
) -> None:
    fmt = ExportFormat(fmt)
    if isinstance(records, (FitReport, CostFit, HypothesisOutcome)):
        if fmt is not ExportFormat.JSON:
            raise ValueError("fits are exported as JSON")
        _write(destination, lambda handle: handle.write(records.model_dump_json(indent=2)))
        return
    if fmt is ExportFormat.JSON:
        payload = [measurement.model_dump(mode="json") for measurement in records]
        _write(destination, lambda handle: json.dump(payload, handle, indent=2))
        return

    def write_csv(handle: IO[str]) -> None:
        writer = csv.writer(handle)
        writer.writerow(MEASUREMENT_COLUMNS)
        writer.writerows(_csv_row(measurement) for measurement in records)

    _write(destination, write_csv)


def append_measurements(path: Path, measurements: Sequence[Measurement]) -> None:
    """Append CSV rows, writing the header first when the file is new or empty."""
    path = Path(path)
    fresh = not path.exists() or path.stat().st_size == 0

    def write_rows(handle: IO[str]) -> None:
        writer = csv.writer(handle)
        if fresh:
            writer.writerow(MEASUREMENT_COLUMNS)
        writer.writerows(_csv_row(measurement) for measurement in measurements)

    _write(path, write_rows, append=True)


def parse_measurements(text: str, fmt: ExportFormat) -> list[Measurement]:
    if ExportFormat(fmt) is ExportFormat.JSON:
        return [Measurement.model_validate(record) for record in json.loads(text or "[]")]
    rows = csv.DictReader(io.StringIO(text))
    return [
        Measurement.model_validate({key: (value if value != "" else None) for key, value in row.items()})
        for row in rows
    ]


def load_measurements(path: Path) -> list[Measurement]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    fmt = ExportFormat.JSON if path.suffix.lower() == ".json" else ExportFormat.CSV
    return parse_measurements(text, fmt)
