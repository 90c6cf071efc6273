"""Seeded generation of the two benchmark program families and their grid."""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from config.constants import MAX_PASSWORD_BITS, DensityRule, GateKind, WorkloadFamily
from errors import InfeasibleDensity, TooSmallN, WidthTooSmall, WorkloadError
from schemas import GridSpec, WorkloadSpec
from services.bpw_format import (
    Instruction,
    Program,
    RegisterSchedule,
    program_gates,
    serialize,
)
from services.vm import bits_to_int

LOGGER = logging.getLogger(__name__)

RNG_NAME = "numpy.random.PCG64"
RNG_VERSION = 1

_FAMILY_CODES = {WorkloadFamily.RANDOM_NAND: 1, WorkloadFamily.PASSWORD: 2}
_FILENAME = re.compile(
    r"^(?P<family>[a-z_]+)_w(?P<w>\d+)_n(?P<n>\d+)(?:_d(?P<period>\d+))?_s(?P<seed>\d+)\.bpw$"
)


def make_rng(spec: WorkloadSpec) -> np.random.Generator:
    """Independent PCG64 stream per (seed, family, w, n, 1/d)."""
    key = (_FAMILY_CODES[spec.family], spec.w, spec.n, spec.period or 0)
    return np.random.default_rng(np.random.SeedSequence(entropy=spec.seed, spawn_key=key))


def copy_bits(w: int) -> int:
    """Bits written by each generated COPY, floor(sqrt(w)/2)."""
    return math.isqrt(w) // 2


def valid_periods(n: int, w: int) -> list[int]:
    """1/d for every density d = 1/(2^m w), m = 0..floor(lg(n/w))."""
    if n < w:
        return []
    top = (n // w).bit_length() - 1
    return [w << m for m in range(top + 1)]


def valid_densities(n: int, w: int) -> list[float]:
    return [1 / period for period in valid_periods(n, w)]


def repetitions(n: int, period: int) -> int:
    """round(n d / (1 + d)), halves rounded up."""
    return (2 * n + period + 1) // (2 * (period + 1))


def reduction_levels(k: int) -> int:
    """ceil(lg k) AND2 levels fold k match bits into one."""
    return (k - 1).bit_length()


def password_value(k: int) -> int:
    """Low k bits of 0x1555...555."""
    return sum(1 << (2 * i) for i in range((k + 1) // 2))


def password_oracle(k: int, bits: Sequence[int]) -> int:
    if not 1 <= k <= 64:
        raise ValueError("password length must be 1..64 bits")
    if len(bits) != k:
        raise ValueError(f"expected {k} bits, got {len(bits)}")
    return int(bits_to_int(bits) == password_value(k))


@dataclass(frozen=True)
class Permutation:
    """Wire routing of one level: output position i takes input position mapping[i]."""

    mapping: tuple[int, ...]

    @classmethod
    def identity(cls, w: int) -> "Permutation":
        return cls(tuple(range(w)))

    @classmethod
    def random(cls, w: int, rng: np.random.Generator) -> "Permutation":
        return cls(tuple(rng.permutation(w).tolist()))

    def apply(self, values: Sequence) -> list:
        return [values[position] for position in self.mapping]

    def then(self, later: "Permutation") -> "Permutation":
        return Permutation(tuple(self.mapping[position] for position in later.mapping))


def gen_random_nand(spec: WorkloadSpec) -> Program:
    if spec.family is not WorkloadFamily.RANDOM_NAND:
        raise WorkloadError(f"{spec.family.value} is not a random NAND workload")
    w = spec.w
    bits = copy_bits(w)
    if bits == 0:
        raise WidthTooSmall(f"width {w} leaves no bits for COPY (needs w >= 4)")
    period = spec.period
    if (
        period is None
        or period not in valid_periods(spec.n, w)
        or abs(spec.d * period - 1) > 1e-9
    ):
        raise InfeasibleDensity(
            f"d={spec.d} is not 1/(2^m * {w}) with 2^m * {w} <= {spec.n}"
        )
    reps = repetitions(spec.n, period)
    if reps < 1:
        raise TooSmallN(f"n={spec.n} holds no repetition of {period} NAND2 + COPY")

    rng = make_rng(spec)
    schedule = RegisterSchedule(w)
    instructions: list[Instruction] = []
    for _ in range(reps):
        for _ in range(period // w):
            readable = schedule.readable_registers()
            picks = readable[rng.integers(0, readable.size, size=(w, 2))]
            instructions.extend(program_gates(GateKind.NAND2, picks.tolist()))
            for _ in range(w):
                schedule.complete_gate()
        selectors = schedule.prior_selectors()
        selector = selectors[int(rng.integers(0, len(selectors)))]
        start = int(rng.integers(0, w - bits + 1))
        instructions.append(Instruction.copy(selector, bits, start))
        schedule.apply_copy(selector, bits)

    program = Program.build(w, instructions, a=spec.k, b=spec.k)
    LOGGER.info(
        "Generated random NAND program w=%s requested n=%s actual n=%s period=%s seed=%s",
        w, spec.n, program.header.n, period, spec.seed,
    )
    return program


def _previous(w: int, level: int, position: int) -> int:
    """Register holding gate ``position`` of the level before ``level``."""
    return 2 * w + ((level - 1) % 2) * w + position


def password_fits(n: int, w: int) -> bool:
    k = min(w, MAX_PASSWORD_BITS)
    return n // w - 2 - reduction_levels(k) >= 1


def gen_password_recognizer(spec: WorkloadSpec) -> Program:
    if spec.family is not WorkloadFamily.PASSWORD:
        raise WorkloadError(f"{spec.family.value} is not a password workload")
    w, k = spec.w, spec.k
    folds = reduction_levels(k)
    shuffles = spec.n // w - 2 - folds
    if shuffles < 1:
        raise TooSmallN(
            f"n={spec.n} at w={w} leaves no permutation level "
            f"(needs {(3 + folds) * w} gate evaluations)"
        )

    rng = make_rng(spec)
    password = password_value(k)
    first = [position % k for position in range(w)]
    instructions = [Instruction.gate(GateKind.NOT, bit) for bit in first]

    routing = Permutation.identity(w)
    level = 1
    for _ in range(shuffles):
        perm = Permutation.random(w, rng)
        instructions.extend(
            Instruction.gate(GateKind.NOT, _previous(w, level, position)) for position in perm.mapping
        )
        routing = routing.then(perm)
        level += 1

    carrier: dict[int, int] = {}
    for position, bit in enumerate(routing.apply(first)):
        carrier.setdefault(bit, position)
    inverted = (1 + shuffles) % 2 == 1
    for position in range(w):
        bit = position % k
        wire = _previous(w, level, carrier[bit])
        expected = ((password >> (k - 1 - bit)) & 1) == 1
        kind = GateKind.AND2 if expected != inverted else GateKind.NAND2
        instructions.append(Instruction.gate(kind, wire, wire))
    level += 1

    for fold in range(folds):
        stride = 1 << fold
        for position in range(w):
            left = position % k
            right = (left + stride) % k
            instructions.append(
                Instruction.gate(GateKind.AND2, _previous(w, level, left), _previous(w, level, right))
            )
        level += 1

    program = Program.build(w, instructions, a=k, b=1)
    LOGGER.info(
        "Generated password recogniser w=%s k=%s levels=%s actual n=%s seed=%s",
        w, k, level, program.header.n, spec.seed,
    )
    return program


GENERATORS = {
    WorkloadFamily.RANDOM_NAND: gen_random_nand,
    WorkloadFamily.PASSWORD: gen_password_recognizer,
}


def generate(spec: WorkloadSpec) -> Program:
    return GENERATORS[spec.family](spec)


def parameter_grid(grid: GridSpec) -> list[WorkloadSpec]:
    sizes = [n for n in grid.sizes if grid.scale_cap is None or n <= grid.scale_cap]
    specs: list[WorkloadSpec] = []
    for w in grid.widths:
        for n in sizes:
            for family in grid.families:
                if family is WorkloadFamily.RANDOM_NAND:
                    if copy_bits(w) == 0:
                        continue
                    periods = valid_periods(n, w)
                    if grid.density_rule is DensityRule.WIDTH_ONLY:
                        periods = periods[:1]
                    specs.extend(
                        WorkloadSpec(family=family, n=n, w=w, d=1 / period, seed=grid.seed)
                        for period in periods
                    )
                elif password_fits(n, w):
                    specs.append(WorkloadSpec(family=family, n=n, w=w, seed=grid.seed))
    return specs


def program_filename(spec: WorkloadSpec) -> str:
    density = f"_d{spec.period}" if spec.period is not None else ""
    return f"{spec.family.value}_w{spec.w}_n{spec.n}{density}_s{spec.seed}.bpw"


def parse_program_filename(name: str) -> WorkloadSpec | None:
    match = _FILENAME.match(Path(name).name)
    if not match:
        return None
    try:
        family = WorkloadFamily(match["family"])
    except ValueError:
        return None
    period = match["period"]
    return WorkloadSpec(
        family=family,
        n=int(match["n"]),
        w=int(match["w"]),
        d=1 / int(period) if period else None,
        seed=int(match["seed"]),
    )


def write_program(spec: WorkloadSpec, directory: Path) -> tuple[Path, Program]:
    program = generate(spec)
    path = Path(directory) / program_filename(spec)
    path.write_bytes(serialize(program))
    return path, program


def write_grid(grid: GridSpec, path: Path) -> None:
    Path(path).write_text(grid.model_dump_json(indent=2), encoding="utf-8")


def read_grid(path: Path) -> GridSpec:
    return GridSpec.model_validate_json(Path(path).read_text(encoding="utf-8"))
