"""BPW virtual machine.

The machine keeps 4w bits of register state:

* ``0..w-1``   input queue, filled by extended-input COPYs at cursor PI
* ``w..2w-1``  copy queue, filled by prior-result COPYs at cursor PC
* ``2w..4w-1`` result queue, gate outputs written at cursor PR

Results of a level land in one half of the result queue while the other
half, holding the previous level, stays readable. Every completed level is
appended to main memory as one packed w-bit word (bit p is gate p of the
level).

Within a level no gate can observe another gate's output, and a COPY only
makes its registers readable levels later, so ``execute`` evaluates each
level w-way in one vectorised pass: operand registers are gathered with
fancy indexing, one gather per gate kind, and the COPYs issued during the
level are applied once its gates are done. ``step`` is the one-instruction
path of the same machine.

Two register-file layouts are interchangeable: one ``uint8`` per bit
(``EvaluatorKind.BYTEWISE``) or bits packed eight to a byte
(``EvaluatorKind.BITPACKED``).
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from config.constants import GATE_ARITY, EvaluatorKind, GateKind
from errors import (
    InputLengthMismatch,
    LockedRegisterRead,
    NotReadyRead,
    OutputUnderflow,
    PriorLevelUnderflow,
    UninitializedRead,
    VMError,
)
from schemas import EvaluationResult
from services.bpw_format import Instruction, Program, ReadFault, RegisterSchedule, copy_latency

LOGGER = logging.getLogger(__name__)


def _and(values: np.ndarray) -> np.ndarray:
    return np.bitwise_and.reduce(values, axis=1)


def _or(values: np.ndarray) -> np.ndarray:
    return np.bitwise_or.reduce(values, axis=1)


def _xor(values: np.ndarray) -> np.ndarray:
    return np.bitwise_xor.reduce(values, axis=1)


def _mux(values: np.ndarray) -> np.ndarray:
    return np.where(values[:, 2] == 1, values[:, 1], values[:, 0])


# each takes an (m, arity) uint8 array of operand bits, one row per gate
VECTOR_GATES: dict[GateKind, Callable[[np.ndarray], np.ndarray]] = {
    GateKind.NOT: lambda values: values[:, 0] ^ 1,
    GateKind.AND2: _and,
    GateKind.OR2: _or,
    GateKind.NAND2: lambda values: _and(values) ^ 1,
    GateKind.NOR2: lambda values: _or(values) ^ 1,
    GateKind.XOR2: _xor,
    GateKind.XNOR2: lambda values: _xor(values) ^ 1,
    GateKind.AND3: _and,
    GateKind.OR3: _or,
    GateKind.NAND3: lambda values: _and(values) ^ 1,
    GateKind.NOR3: lambda values: _or(values) ^ 1,
    GateKind.XOR3: _xor,
    GateKind.XNOR3: lambda values: _xor(values) ^ 1,
    GateKind.MUX3: _mux,
}

_FAULT_ERRORS: dict[ReadFault, type[VMError]] = {
    ReadFault.LOCKED: LockedRegisterRead,
    ReadFault.UNINITIALIZED: UninitializedRead,
    ReadFault.NOT_READY: NotReadyRead,
    ReadFault.PRIOR_UNDERFLOW: PriorLevelUnderflow,
}

_KINDS = {int(kind): kind for kind in GateKind}
_ARITY = np.zeros(16, dtype=np.int64)
for _kind, _arity in GATE_ARITY.items():
    _ARITY[_kind] = _arity


def eval_gate(kind: GateKind, in_bits: Sequence[int]) -> int:
    if kind is GateKind.COPY:
        raise ValueError("COPY is not a logic gate")
    if len(in_bits) != kind.arity:
        raise ValueError(f"{kind.name} takes {kind.arity} inputs, got {len(in_bits)}")
    values = np.asarray([in_bits], dtype=np.uint8) & 1
    return int(VECTOR_GATES[kind](values)[0])


class ByteRegisters:
    """One addressable byte per state bit."""

    kind = EvaluatorKind.BYTEWISE

    def __init__(self, size: int) -> None:
        self.size = size
        self.cells = np.zeros(size, dtype=np.uint8)

    @property
    def nbytes(self) -> int:
        return self.cells.nbytes

    def get(self, register: int) -> int:
        return int(self.cells[register])

    def set(self, register: int, bit: int) -> None:
        self.cells[register] = bit

    def bits(self, start: int, count: int) -> np.ndarray:
        return self.cells[start:start + count].copy()

    def write(self, start: int, bits: np.ndarray) -> None:
        self.cells[start:start + len(bits)] = bits

    def scatter(self, registers: np.ndarray, bits: np.ndarray) -> None:
        self.cells[registers] = bits

    @staticmethod
    def address(operands: np.ndarray) -> np.ndarray:
        return operands

    def gather(self, address: np.ndarray, lo: int, hi: int, arity: int) -> np.ndarray:
        return self.cells[address[lo:hi, :arity]]


class PackedRegisters:
    """State bits packed eight to a byte, bit r at byte r // 8, position r % 8."""

    kind = EvaluatorKind.BITPACKED

    def __init__(self, size: int) -> None:
        self.size = size
        self.cells = np.zeros((size + 7) // 8, dtype=np.uint8)

    @property
    def nbytes(self) -> int:
        return self.cells.nbytes

    def get(self, register: int) -> int:
        return int(self.cells[register >> 3] >> (register & 7)) & 1

    def set(self, register: int, bit: int) -> None:
        mask = 1 << (register & 7)
        if bit:
            self.cells[register >> 3] |= np.uint8(mask)
        else:
            self.cells[register >> 3] &= np.uint8(0xFF ^ mask)

    def _span(self, first: int, last: int) -> tuple[int, int, np.ndarray]:
        lo, hi = first >> 3, (last >> 3) + 1
        return lo, hi, np.unpackbits(self.cells[lo:hi], bitorder="little")

    def bits(self, start: int, count: int) -> np.ndarray:
        lo, _, span = self._span(start, start + count - 1)
        offset = start - 8 * lo
        return span[offset:offset + count]

    def write(self, start: int, bits: np.ndarray) -> None:
        if not len(bits):
            return
        lo, hi, span = self._span(start, start + len(bits) - 1)
        offset = start - 8 * lo
        span[offset:offset + len(bits)] = bits
        self.cells[lo:hi] = np.packbits(span, bitorder="little")

    def scatter(self, registers: np.ndarray, bits: np.ndarray) -> None:
        if not registers.size:
            return
        lo, hi, span = self._span(int(registers.min()), int(registers.max()))
        span[registers - 8 * lo] = bits
        self.cells[lo:hi] = np.packbits(span, bitorder="little")

    @staticmethod
    def address(operands: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return operands >> 3, (operands & 7).astype(np.uint8)

    def gather(self, address: tuple[np.ndarray, np.ndarray], lo: int, hi: int, arity: int) -> np.ndarray:
        byte, shift = address
        return (self.cells[byte[lo:hi, :arity]] >> shift[lo:hi, :arity]) & 1


REGISTER_FILES = {
    EvaluatorKind.BYTEWISE: ByteRegisters,
    EvaluatorKind.BITPACKED: PackedRegisters,
}


def pack_words(bits: Sequence[int], w: int) -> np.ndarray:
    """Pack bits w per word, bit p of row q holding bits[q*w + p]."""
    words = -(-len(bits) // w)
    padded = np.zeros(words * w, dtype=np.uint8)
    padded[: len(bits)] = np.asarray(bits, dtype=np.uint8) & 1
    return np.packbits(padded.reshape(words, w), axis=1, bitorder="little")


def word_bits(memory: np.ndarray, row: int, w: int) -> np.ndarray:
    """The w bits of main-memory word ``row``; a negative row reads as zeros."""
    if row < 0:
        return np.zeros(w, dtype=np.uint8)
    return np.unpackbits(memory[row], count=w, bitorder="little")


@dataclass
class MachineState:
    w: int
    registers: ByteRegisters | PackedRegisters
    schedule: RegisterSchedule
    memory: np.ndarray
    input_words: int
    instruction_index: int = 0
    checked: bool = True
    gates_executed: int = 0

    @property
    def pi(self) -> int:
        return self.schedule.pi

    @property
    def pc(self) -> int:
        return self.schedule.pc

    @property
    def pr(self) -> int:
        return self.schedule.pr

    @property
    def level(self) -> int:
        return self.schedule.level

    @property
    def ready_at(self) -> list[int]:
        return self.schedule.ready_at

    @property
    def main_memory(self) -> np.ndarray:
        """Input words followed by one word per completed level."""
        return self.memory[: self.input_words + self.level]

    def word(self, row: int) -> list[int]:
        return word_bits(self.memory, row, self.w).tolist()

    @property
    def input_queue(self) -> list[int]:
        return self.registers.bits(0, self.w).tolist()

    @property
    def copy_queue(self) -> list[int]:
        return self.registers.bits(self.w, self.w).tolist()

    @property
    def result_queue(self) -> list[int]:
        return self.registers.bits(2 * self.w, 2 * self.w).tolist()


def init(
    program: Program,
    inputs: Sequence[int],
    evaluator: EvaluatorKind = EvaluatorKind.BYTEWISE,
    *,
    checked: bool = True,
) -> MachineState:
    header = program.header
    if len(inputs) != header.a:
        raise InputLengthMismatch(f"program takes {header.a} input bits, got {len(inputs)}")
    w = header.w
    words = pack_words(inputs, w)
    input_words = len(words)
    # room for every level the instruction count allows
    memory = np.zeros((input_words + header.n // w, (w + 7) // 8), dtype=np.uint8)
    memory[:input_words] = words
    registers = REGISTER_FILES[EvaluatorKind(evaluator)](4 * w)
    registers.write(0, word_bits(memory, 0 if input_words else -1, w))
    return MachineState(
        w=w,
        registers=registers,
        schedule=RegisterSchedule(w),
        memory=memory,
        input_words=input_words,
        checked=checked,
    )


def copy_source(selector: int, level: int, w: int, input_words: int) -> int:
    """Main-memory row a COPY issued at ``level`` reads; -1 past the input."""
    if selector < w:
        return selector if selector < input_words else -1
    return input_words + level - (selector - w + 1)


def _read(state: MachineState, register: int) -> int:
    if state.checked:
        fault = state.schedule.read_fault(register)
        if fault is not None:
            raise _FAULT_ERRORS[fault](
                f"register {register} at level {state.level} {fault.reason}",
                index=state.instruction_index,
            )
    return state.registers.get(register)


def _copy(state: MachineState, instr: Instruction) -> None:
    selector, count, start = instr.operands
    schedule = state.schedule
    if schedule.copy_fault(selector) is not None:
        raise PriorLevelUnderflow(
            f"COPY reaches {schedule.prior_depth(selector)} levels back from level {schedule.level}",
            index=state.instruction_index,
        )
    row = copy_source(selector, schedule.level, state.w, state.input_words)
    bits = word_bits(state.memory, row, state.w)[start:start + count]
    state.registers.scatter(np.asarray(schedule.apply_copy(selector, count), dtype=np.int64), bits)


def step(state: MachineState, instr: Instruction) -> MachineState:
    if instr.kind is GateKind.COPY:
        _copy(state, instr)
    else:
        values = [_read(state, register) for register in instr.operands]
        schedule = state.schedule
        level = schedule.level
        state.registers.set(schedule.result_register(), eval_gate(instr.kind, values))
        if schedule.complete_gate():
            half = 2 * state.w + (level % 2) * state.w
            state.memory[state.input_words + level] = np.packbits(
                state.registers.bits(half, state.w), bitorder="little"
            )
    state.gates_executed += 1
    state.instruction_index += 1
    return state


@dataclass(frozen=True, slots=True)
class CopyStep:
    row: int
    start: int
    count: int
    targets: np.ndarray


@dataclass(frozen=True, slots=True)
class LevelStep:
    size: int
    runs: tuple[tuple[GateKind, int, int], ...]
    copies: tuple[CopyStep, ...]


@dataclass(frozen=True)
class LoadedProgram:
    """A program arranged for level-at-a-time evaluation by one register layout.

    Gates are sorted by (level, kind); ``runs`` slice the sorted operand
    table and ``positions`` holds each gate's slot in its level.
    """

    program: Program
    evaluator: EvaluatorKind
    steps: tuple[LevelStep, ...]
    addresses: np.ndarray | tuple[np.ndarray, np.ndarray]
    positions: np.ndarray
    levels: int
    final: RegisterSchedule


def _first_read_fault(
    program: Program,
    gate_at: np.ndarray,
    operands: np.ndarray,
    live: np.ndarray,
    writes: tuple[np.ndarray, np.ndarray, np.ndarray],
) -> tuple[int, VMError] | None:
    """Earliest gate operand that reads a locked, unwritten or not-ready register."""
    w = program.header.w
    rows, cols = np.nonzero(live)
    registers = operands[rows, cols].astype(np.int64)
    levels = rows // w

    result = registers >= 2 * w
    locked = result & ((registers - 2 * w) // w == levels % 2)
    unset = result & ~locked & (levels == 0)

    # last COPY into each queue register strictly before the reading gate
    write_regs, write_at, write_ready = writes
    stride = len(program.instructions) + 1
    write_keys = write_regs * stride + write_at + 1
    order = np.argsort(write_keys, kind="stable")
    write_keys, write_regs, write_ready = write_keys[order], write_regs[order], write_ready[order]
    last = np.searchsorted(write_keys, registers * stride + gate_at[rows] + 1) - 1
    safe = np.maximum(last, 0)
    found = (last >= 0) & (write_regs[safe] == registers)
    never = ~result & ~found
    not_ready = ~result & found & (write_ready[safe] > levels)

    hits = np.flatnonzero(locked | unset | never | not_ready)
    if not hits.size:
        return None
    hit = int(hits[0])
    if locked[hit]:
        fault = ReadFault.LOCKED
    elif not_ready[hit]:
        fault = ReadFault.NOT_READY
    else:
        fault = ReadFault.UNINITIALIZED
    index = int(gate_at[rows[hit]])
    message = f"register {int(registers[hit])} at level {int(levels[hit])} {fault.reason}"
    return index, _FAULT_ERRORS[fault](message, index=index)


def load(
    program: Program,
    evaluator: EvaluatorKind = EvaluatorKind.BYTEWISE,
    *,
    checked: bool = True,
) -> LoadedProgram:
    """Check the register schedule once and arrange the gates level by level.

    Register faults depend on the instruction sequence alone, never on input
    values, so a checked load covers every later ``execute``. A COPY reaching
    before level 0 is refused even unchecked.
    """
    evaluator = EvaluatorKind(evaluator)
    header = program.header
    w = header.w
    instructions = program.instructions
    kinds = np.fromiter((ins.kind for ins in instructions), dtype=np.uint8, count=len(instructions))
    is_gate = kinds != GateKind.COPY
    gate_at = np.flatnonzero(is_gate)
    copy_at = np.flatnonzero(~is_gate)
    gates = int(gate_at.size)
    dtype = np.int32 if 4 * w < 2**31 else np.int64
    operands = np.array(
        [(*instructions[index].operands, 0, 0)[:3] for index in gate_at.tolist()],
        dtype=dtype,
    ).reshape(gates, 3)

    input_words = -(-header.a // w)
    latency = copy_latency(w)
    gates_before = np.cumsum(is_gate) - is_gate
    copy_levels = (gates_before[copy_at] // w).tolist()
    schedule = RegisterSchedule(w)
    copies: dict[int, list[CopyStep]] = {}
    written: list[int] = []
    counts: list[int] = []
    underflow: tuple[int, VMError] | None = None
    for index, level in zip(copy_at.tolist(), copy_levels):
        selector, count, start = instructions[index].operands
        schedule.level = level
        if underflow is None and schedule.copy_fault(selector) is not None:
            underflow = index, PriorLevelUnderflow(
                f"COPY reaches {schedule.prior_depth(selector)} levels back from level {level}",
                index=index,
            )
        targets = schedule.apply_copy(selector, count)
        written.extend(targets)
        counts.append(count)
        copies.setdefault(level, []).append(
            CopyStep(copy_source(selector, level, w, input_words), start, count, np.asarray(targets, dtype=np.int64))
        )

    faults = [underflow] if underflow is not None else []
    if checked and gates:
        live = np.arange(3) < _ARITY[kinds[gate_at]][:, None]
        writes = (
            np.concatenate([np.arange(w), np.asarray(written, dtype=np.int64)]),
            np.concatenate([np.full(w, -1), np.repeat(copy_at, counts)]),
            np.concatenate([np.zeros(w, dtype=np.int64), np.repeat(np.asarray(copy_levels, dtype=np.int64) + latency, counts)]),
        )
        read = _first_read_fault(program, gate_at, operands, live, writes)
        if read is not None:
            faults.append(read)
    if faults:
        raise min(faults, key=lambda fault: fault[0])[1]

    runs: dict[int, list[tuple[GateKind, int, int]]] = {}
    if gates:
        gate_levels = np.arange(gates) // w
        gate_kinds = kinds[gate_at]
        order = np.lexsort((gate_kinds, gate_levels))
        operands = operands[order]
        positions = (order % w).astype(dtype)
        sorted_levels, sorted_kinds = gate_levels[order], gate_kinds[order]
        breaks = np.flatnonzero((np.diff(sorted_levels) != 0) | (np.diff(sorted_kinds) != 0)) + 1
        starts = np.concatenate(([0], breaks))
        ends = np.concatenate((breaks, [gates]))
        for level, kind, lo, hi in zip(
            sorted_levels[starts].tolist(), sorted_kinds[starts].tolist(), starts.tolist(), ends.tolist()
        ):
            runs.setdefault(level, []).append((_KINDS[kind], lo, hi))
    else:
        positions = np.zeros(0, dtype=dtype)

    total = max(-(-gates // w), max(copy_levels, default=-1) + 1)
    steps = tuple(
        LevelStep(
            size=min(w, gates - level * w),
            runs=tuple(runs.get(level, ())),
            copies=tuple(copies.get(level, ())),
        )
        for level in range(total)
    )

    schedule.level = gates // w
    schedule.gates_in_level = gates % w
    schedule.pr = gates % (2 * w)
    LOGGER.debug(
        "Loaded program w=%s n=%s into %s level steps for %s", w, header.n, total, evaluator.value
    )
    return LoadedProgram(
        program=program,
        evaluator=evaluator,
        steps=steps,
        addresses=REGISTER_FILES[evaluator].address(operands),
        positions=positions,
        levels=gates // w,
        final=schedule,
    )


def execute(loaded: LoadedProgram, state: MachineState) -> EvaluationResult:
    """Run a loaded program from a freshly initialised state, one level per pass."""
    if state.registers.kind is not loaded.evaluator:
        raise ValueError(
            f"state uses {state.registers.kind.value} registers, program was loaded for {loaded.evaluator.value}"
        )
    w = state.w
    registers, memory, input_words = state.registers, state.memory, state.input_words
    gather, addresses, positions = registers.gather, loaded.addresses, loaded.positions

    for level, level_step in enumerate(loaded.steps):
        if level_step.size:
            if len(level_step.runs) == 1:
                kind, lo, hi = level_step.runs[0]
                bits = VECTOR_GATES[kind](gather(addresses, lo, hi, kind.arity))
            else:
                bits = np.empty(level_step.size, dtype=np.uint8)
                for kind, lo, hi in level_step.runs:
                    bits[positions[lo:hi]] = VECTOR_GATES[kind](gather(addresses, lo, hi, kind.arity))
            registers.write(2 * w + (level % 2) * w, bits)
            if level_step.size == w:
                memory[input_words + level] = np.packbits(bits, bitorder="little")
        for copy_step in level_step.copies:
            source = word_bits(memory, copy_step.row, w)
            registers.scatter(copy_step.targets, source[copy_step.start:copy_step.start + copy_step.count])

    program = loaded.program
    state.schedule = copy.copy(loaded.final)
    state.schedule.ready_at = list(loaded.final.ready_at)
    state.instruction_index = state.gates_executed = program.header.n
    outputs = collect_outputs(memory, input_words, loaded.levels, w, program.header.b)
    return EvaluationResult(
        outputs=outputs,
        gates_executed=program.header.n,
        levels_completed=loaded.levels,
    )


def collect_outputs(memory: np.ndarray, input_words: int, levels: int, w: int, b: int) -> list[int]:
    """First b bits of the last ceil(b/w) level words."""
    needed = -(-b // w)
    if needed > levels:
        raise OutputUnderflow(f"{b} outputs need {needed} completed levels, program completed {levels}")
    if not needed:
        return []
    rows = memory[input_words + levels - needed:input_words + levels]
    return np.unpackbits(rows, axis=1, count=w, bitorder="little").ravel()[:b].tolist()


def run(
    program: Program,
    inputs: Sequence[int],
    evaluator: EvaluatorKind = EvaluatorKind.BYTEWISE,
    *,
    checked: bool = True,
) -> EvaluationResult:
    """Evaluate ``program`` on ``inputs``.

    ``checked=False`` skips the register checks; only use it on a program
    that validated clean.
    """
    state = init(program, inputs, evaluator, checked=checked)
    return execute(load(program, evaluator, checked=checked), state)


_REFERENCE_GATES: dict[GateKind, Callable[[list[int]], int]] = {
    GateKind.NOT: lambda v: int(not v[0]),
    GateKind.AND2: lambda v: int(all(v)),
    GateKind.OR2: lambda v: int(any(v)),
    GateKind.NAND2: lambda v: int(not all(v)),
    GateKind.NOR2: lambda v: int(not any(v)),
    GateKind.XOR2: lambda v: sum(v) % 2,
    GateKind.XNOR2: lambda v: 1 - sum(v) % 2,
    GateKind.AND3: lambda v: int(all(v)),
    GateKind.OR3: lambda v: int(any(v)),
    GateKind.NAND3: lambda v: int(not all(v)),
    GateKind.NOR3: lambda v: int(not any(v)),
    GateKind.XOR3: lambda v: sum(v) % 2,
    GateKind.XNOR3: lambda v: 1 - sum(v) % 2,
    GateKind.MUX3: lambda v: v[1] if v[2] else v[0],
}


def reference_eval(program: Program, inputs: Sequence[int]) -> list[int]:
    """Straightforward oracle evaluator.

    Keeps every level's outputs in a flat trace and resolves result-register
    reads against it; queue registers are a plain list of (bit, ready level)
    slots addressed by how many bits each queue has received so far.
    """
    w, a, b = program.header.w, program.header.a, program.header.b
    if len(inputs) != a:
        raise InputLengthMismatch(f"program takes {a} input bits, got {len(inputs)}")
    latency = copy_latency(w)
    inputs = list(inputs)

    def input_word(q: int) -> list[int]:
        word = inputs[q * w:(q + 1) * w]
        return word + [0] * (w - len(word))

    slots: list[tuple[int, int] | None] = [(bit, 0) for bit in input_word(0)] + [None] * w
    received = [w, 0]
    trace: list[list[int]] = []
    current: list[int] = []

    for index, ins in enumerate(program.instructions):
        level = len(trace)
        if ins.kind is GateKind.COPY:
            selector, count, start = ins.operands
            if selector < w:
                queue, source = 0, input_word(selector)
            else:
                depth = selector - w + 1
                if depth > level:
                    raise PriorLevelUnderflow(
                        f"COPY reaches {depth} levels back from level {level}", index=index
                    )
                queue, source = 1, trace[level - depth]
            for offset in range(count):
                slot = queue * w + (received[queue] + offset) % w
                slots[slot] = (source[start + offset], level + latency)
            received[queue] += count
            continue

        values = []
        for register in ins.operands:
            if register < 2 * w:
                entry = slots[register]
                if entry is None:
                    raise UninitializedRead(f"register {register} has never been written", index=index)
                if entry[1] > level:
                    raise NotReadyRead(f"register {register} is not ready at level {level}", index=index)
                values.append(entry[0])
                continue
            half = (register - 2 * w) // w
            if half == level % 2:
                raise LockedRegisterRead(f"register {register} is locked at level {level}", index=index)
            if level == 0:
                raise UninitializedRead(f"register {register} has never been written", index=index)
            values.append(trace[level - 1][register - 2 * w - half * w])
        current.append(_REFERENCE_GATES[ins.kind](values))
        if len(current) == w:
            trace.append(current)
            current = []

    needed = -(-b // w)
    if needed > len(trace):
        raise OutputUnderflow(f"{b} outputs need {needed} completed levels, program completed {len(trace)}")
    flat = [bit for level_bits in trace[len(trace) - needed:] for bit in level_bits] if needed else []
    return flat[:b]


def bits_from_int(value: int, length: int) -> list[int]:
    """Bit sequence whose first element is the most significant of ``length`` bits."""
    if value < 0 or value >> length:
        raise ValueError(f"value does not fit in {length} bits")
    return [(value >> (length - 1 - position)) & 1 for position in range(length)]


def bits_to_int(bits: Sequence[int]) -> int:
    value = 0
    for bit in bits:
        value = (value << 1) | (bit & 1)
    return value


def bits_from_hex(text: str, length: int) -> list[int]:
    cleaned = text.strip().lower().removeprefix("0x").replace("_", "")
    if not cleaned:
        cleaned = "0"
    try:
        value = int(cleaned, 16)
    except ValueError as exc:
        raise ValueError(f"not a hex string: {text!r}") from exc
    return bits_from_int(value, length)


def bits_to_hex(bits: Sequence[int]) -> str:
    if not bits:
        return ""
    digits = -(-len(bits) // 4)
    return f"{bits_to_int(bits):0{digits}x}"


def bits_from_file(path: Path, length: int) -> list[int]:
    """First ``length`` bits of a raw file, most significant bit of each byte first."""
    data = Path(path).read_bytes()
    if len(data) * 8 < length:
        raise InputLengthMismatch(f"{path} holds {len(data) * 8} bits, program takes {length}")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), count=length)
    return [int(bit) for bit in bits]


def random_inputs(a: int, rng: np.random.Generator) -> list[int]:
    return rng.integers(0, 2, size=a).tolist()


def register_state_bits(state: MachineState) -> int:
    """Size of the mutable register state in bits, as allocated."""
    return state.registers.size
