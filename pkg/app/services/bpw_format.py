"""Reading, writing, validation and disassembly of BPW version 0x01 files.

File layout::

    bytes 0-2   magic 0x42 0x50 0x57 ("BPW")
    byte  3     version, 0x01
    bytes 4-35  w, n, a, b as unsigned 64-bit little-endian integers
    bytes 36-   nibble stream, high nibble of each byte first

Each gate-descriptor is one type nibble followed by ``arity`` operands of
``specifier_nibble_length(w)`` nibbles each, most significant nibble first.
An odd nibble count is padded with a single 0x0 nibble.
"""

from __future__ import annotations

import logging
import math
import struct
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from config.constants import (
    GATE_ARITY,
    GateKind,
    HEADER_SIZE,
    MAGIC,
    RESERVED_NIBBLE,
    VERSION,
)
from errors import (
    BadMagic,
    HeaderBoundViolation,
    OperandOutOfRange,
    ReservedGateKind,
    TrailingData,
    Truncated,
    UnsupportedVersion,
)
from schemas import ValidationReport, Violation

LOGGER = logging.getLogger(__name__)

HEADER_FORMAT = struct.Struct("<3sB4Q")
UNWRITTEN = -1

_KINDS_BY_NIBBLE = {int(kind): kind for kind in GateKind}


def specifier_nibble_length(w: int) -> int:
    """Whole nibbles needed to address the 4w registers."""
    if w < 1:
        raise ValueError("width must be at least 1")
    bits = (4 * w - 1).bit_length()
    return -(-bits // 4)


def copy_latency(w: int) -> int:
    """COPY latency in levels, ceil(sqrt(w))."""
    root = math.isqrt(w)
    return root if root * root == w else root + 1


@dataclass(frozen=True)
class Header:
    w: int
    n: int
    a: int
    b: int

    def check(self) -> None:
        if self.w < 1:
            raise HeaderBoundViolation("width w must be at least 1")
        if self.n < 1:
            raise HeaderBoundViolation("program must hold at least one instruction")
        if self.a > self.w * self.w:
            raise HeaderBoundViolation(f"a={self.a} exceeds w^2={self.w * self.w}")
        if self.b > self.w * self.w:
            raise HeaderBoundViolation(f"b={self.b} exceeds w^2={self.w * self.w}")

    def encode(self) -> bytes:
        return HEADER_FORMAT.pack(MAGIC, VERSION, self.w, self.n, self.a, self.b)


class Instruction(NamedTuple):
    kind: GateKind
    operands: tuple[int, ...]

    @classmethod
    def gate(cls, kind: GateKind, *operands: int) -> "Instruction":
        return cls(kind, tuple(operands))

    @classmethod
    def copy(cls, selector: int, count: int, start: int) -> "Instruction":
        return cls(GateKind.COPY, (selector, count, start))


@dataclass(frozen=True)
class Program:
    header: Header
    instructions: tuple[Instruction, ...]

    @classmethod
    def build(
        cls, w: int, instructions: Iterable[Instruction], *, a: int, b: int
    ) -> "Program":
        body = tuple(instructions)
        return cls(Header(w=w, n=len(body), a=a, b=b), body)

    @property
    def width(self) -> int:
        return self.header.w

    @property
    def gate_count(self) -> int:
        """Non-COPY instructions."""
        return sum(1 for ins in self.instructions if ins.kind is not GateKind.COPY)

    @property
    def levels(self) -> int:
        """Completed levels; a trailing partial group is not counted."""
        return self.gate_count // self.header.w


def check_instruction(ins: Instruction, w: int, index: int | None = None) -> None:
    kind = ins.kind
    ops = ins.operands
    if len(ops) != GATE_ARITY[kind]:
        raise OperandOutOfRange(
            f"{kind.name} takes {GATE_ARITY[kind]} operands, got {len(ops)}", index=index
        )
    if kind is GateKind.COPY:
        selector, count, start = ops
        if not 0 <= selector < 2 * w:
            raise OperandOutOfRange(f"COPY word selector {selector} not in 0..{2 * w - 1}", index=index)
        if not 1 <= count <= w:
            raise OperandOutOfRange(f"COPY bit count {count} not in 1..{w}", index=index)
        if not 0 <= start < w or start + count > w:
            raise OperandOutOfRange(
                f"COPY reads bits {start}..{start + count - 1} outside a {w}-bit word", index=index
            )
        return
    for register in ops:
        if not 0 <= register < 4 * w:
            raise OperandOutOfRange(f"register {register} not in 0..{4 * w - 1}", index=index)


def parse(data: bytes) -> Program:
    if len(data) >= 3 and data[:3] != MAGIC:
        raise BadMagic(f"bad magic bytes {data[:3].hex(' ')}")
    if len(data) < HEADER_SIZE:
        raise Truncated(f"file holds {len(data)} bytes, header needs {HEADER_SIZE}")
    _, version, w, n, a, b = HEADER_FORMAT.unpack_from(data)
    if version != VERSION:
        raise UnsupportedVersion(f"version 0x{version:02x} is not supported")
    header = Header(w=w, n=n, a=a, b=b)
    header.check()
    LOGGER.debug("Parsing BPW program w=%s n=%s a=%s b=%s", w, n, a, b)

    body = np.frombuffer(data, dtype=np.uint8, offset=HEADER_SIZE)
    stream = np.empty(body.size * 2, dtype=np.uint8)
    stream[0::2] = body >> 4
    stream[1::2] = body & 0x0F
    nibbles = stream.tolist()
    total = len(nibbles)

    width = specifier_nibble_length(w)
    instructions: list[Instruction] = []
    pos = 0
    for index in range(n):
        if pos >= total:
            raise Truncated(f"body ends after {index} of {n} gate-descriptors")
        code = nibbles[pos]
        if code == RESERVED_NIBBLE:
            raise ReservedGateKind("gate type 0xF is reserved", index=index)
        kind = _KINDS_BY_NIBBLE[code]
        pos += 1
        end = pos + GATE_ARITY[kind] * width
        if end > total:
            raise Truncated(f"body ends inside gate-descriptor {index} of {n}")
        operands = []
        while pos < end:
            value = 0
            for nibble in nibbles[pos:pos + width]:
                value = (value << 4) | nibble
            operands.append(value)
            pos += width
        ins = Instruction(kind, tuple(operands))
        check_instruction(ins, w, index)
        instructions.append(ins)

    if total - pos > pos % 2:
        raise TrailingData(f"{total - pos} nibbles follow the last gate-descriptor")
    return Program(header, tuple(instructions))


def serialize(program: Program) -> bytes:
    header = program.header
    header.check()
    if header.n != len(program.instructions):
        raise HeaderBoundViolation(
            f"header declares n={header.n} but the program holds {len(program.instructions)}"
        )
    w = header.w
    width = specifier_nibble_length(w)
    shifts = tuple(range(4 * (width - 1), -1, -4))
    nibbles = bytearray()
    for index, ins in enumerate(program.instructions):
        check_instruction(ins, w, index)
        nibbles.append(ins.kind)
        for value in ins.operands:
            nibbles.extend((value >> shift) & 0x0F for shift in shifts)
    if len(nibbles) % 2:
        nibbles.append(0)
    stream = np.frombuffer(bytes(nibbles), dtype=np.uint8)
    body = (stream[0::2] << 4) | stream[1::2]
    return header.encode() + body.tobytes()


def body_nibbles(program: Program) -> int:
    width = specifier_nibble_length(program.header.w)
    return sum(1 + GATE_ARITY[ins.kind] * width for ins in program.instructions)


def instruction_levels(program: Program) -> list[int]:
    """Level of every instruction: non-COPY instructions before it, divided by w."""
    w = program.header.w
    levels = []
    gates = 0
    for ins in program.instructions:
        levels.append(gates // w)
        if ins.kind is not GateKind.COPY:
            gates += 1
    return levels


class ReadFault(Enum):
    LOCKED = ("R3", "is locked while the current level writes it")
    UNINITIALIZED = ("R3", "has never been written")
    NOT_READY = ("R2", "is still waiting on COPY latency")
    PRIOR_UNDERFLOW = ("R4", "reaches before level 0")

    def __init__(self, rule: str, reason: str) -> None:
        self.rule = rule
        self.reason = reason


class RegisterSchedule:
    """Level, cursor and latency bookkeeping of the 4w-register machine.

    The validator, the evaluators and the generators all advance one of
    these so they agree on which registers are readable at each point.
    Queue registers (0..2w-1) carry the level from which they may be read,
    ``UNWRITTEN`` when they hold nothing; result registers are classified
    from the level parity alone.
    """

    def __init__(self, w: int) -> None:
        self.w = w
        self.latency = copy_latency(w)
        self.level = 0
        self.gates_in_level = 0
        self.pi = 0
        self.pc = 0
        self.pr = 0
        # implicit COPY(0, w, 0) loads the whole input queue, readable at once
        self.ready_at = [0] * w + [UNWRITTEN] * w

    def read_fault(self, register: int) -> ReadFault | None:
        w = self.w
        if register < 2 * w:
            ready = self.ready_at[register]
            if ready == UNWRITTEN:
                return ReadFault.UNINITIALIZED
            if ready > self.level:
                return ReadFault.NOT_READY
            return None
        half = (register - 2 * w) // w
        if half == self.level % 2:
            return ReadFault.LOCKED
        if self.level == 0:
            return ReadFault.UNINITIALIZED
        return None

    def result_register(self) -> int:
        return 2 * self.w + self.pr

    def complete_gate(self) -> bool:
        """Advance PR; True when this gate completed a level."""
        self.pr = (self.pr + 1) % (2 * self.w)
        self.gates_in_level += 1
        if self.gates_in_level == self.w:
            self.gates_in_level = 0
            self.level += 1
            return True
        return False

    def prior_depth(self, selector: int) -> int:
        """How many levels back a prior-result COPY reaches (1 = previous level)."""
        return selector - self.w + 1

    def copy_fault(self, selector: int) -> ReadFault | None:
        if selector >= self.w and self.prior_depth(selector) > self.level:
            return ReadFault.PRIOR_UNDERFLOW
        return None

    def apply_copy(self, selector: int, count: int) -> list[int]:
        """Claim the destination registers of a COPY and advance its cursor."""
        w = self.w
        if selector < w:
            base, cursor = 0, self.pi
            self.pi = (self.pi + count) % w
        else:
            base, cursor = w, self.pc
            self.pc = (self.pc + count) % w
        ready = self.level + self.latency
        targets = [base + (cursor + offset) % w for offset in range(count)]
        for register in targets:
            self.ready_at[register] = ready
        return targets

    def readable_registers(self) -> np.ndarray:
        """Indexes of every register a gate could read right now."""
        w = self.w
        queues = np.asarray(self.ready_at, dtype=np.int64)
        mask = np.zeros(4 * w, dtype=bool)
        mask[: 2 * w] = (queues != UNWRITTEN) & (queues <= self.level)
        if self.level > 0:
            start = 2 * w + (1 - self.level % 2) * w
            mask[start:start + w] = True
        return np.flatnonzero(mask)

    def prior_selectors(self) -> range:
        """COPY word selectors that address an already completed level."""
        return range(self.w, self.w + min(self.level, self.w))


def validate(program: Program, *, strict: bool = False) -> ValidationReport:
    w = program.header.w
    schedule = RegisterSchedule(w)
    violations: list[Violation] = []
    warnings: list[Violation] = []
    last_copy: int | None = None

    for index, ins in enumerate(program.instructions):
        if ins.kind is GateKind.COPY:
            if last_copy is not None and index - last_copy < w:
                violations.append(
                    Violation(
                        index=index,
                        rule="R1",
                        message=f"second COPY within {w} instructions (previous at {last_copy})",
                    )
                )
            last_copy = index
            selector, count, _ = ins.operands
            fault = schedule.copy_fault(selector)
            if fault is not None:
                violations.append(
                    Violation(
                        index=index,
                        rule=fault.rule,
                        message=(
                            f"prior-result COPY {schedule.prior_depth(selector)} levels back "
                            f"at level {schedule.level} {fault.reason}"
                        ),
                    )
                )
            schedule.apply_copy(selector, count)
            continue
        for register in ins.operands:
            fault = schedule.read_fault(register)
            if fault is not None:
                violations.append(
                    Violation(
                        index=index,
                        rule=fault.rule,
                        message=f"register {register} at level {schedule.level} {fault.reason}",
                    )
                )
        schedule.complete_gate()

    gates = program.gate_count
    if gates == 0 or gates % w:
        finding = Violation(
            rule="R5",
            message=f"{gates} gate evaluations do not fill whole levels of {w}",
        )
        (violations if strict else warnings).append(finding)

    needed = -(-program.header.b // w)
    if needed > schedule.level:
        violations.append(
            Violation(
                rule="R6",
                message=f"{program.header.b} outputs need {needed} completed levels, program has {schedule.level}",
            )
        )

    report = ValidationReport(violations=violations, warnings=warnings)
    if not report.ok:
        LOGGER.warning("BPW program failed validation with %s violations", len(violations))
    return report


def describe_copy(ins: Instruction, w: int) -> str:
    selector, count, start = ins.operands
    bits = "bit" if count == 1 else "bits"
    if selector < w:
        return f"extended-input word {selector}, {count} {bits} from offset {start}"
    depth = selector - w + 1
    return f"prior-result level -{depth}, {count} {bits} from offset {start}"


def disassemble(program: Program, limit: int | None = None) -> str:
    w = program.header.w
    lines = []
    for index, (ins, level) in enumerate(zip(program.instructions, instruction_levels(program))):
        if limit is not None and index >= limit:
            break
        operands = " ".join(str(value) for value in ins.operands)
        line = f"{index} L{level} {ins.kind.name} {operands}"
        if ins.kind is GateKind.COPY:
            line = f"{line} ; {describe_copy(ins, w)}"
        lines.append(line)
    return "\n".join(lines)


def program_gates(kind: GateKind, operand_rows: Sequence[Sequence[int]]) -> list[Instruction]:
    """Instructions of one kind from rows of operands."""
    return [Instruction(kind, tuple(int(value) for value in row)) for row in operand_rows]
