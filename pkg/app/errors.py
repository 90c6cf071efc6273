"""Exception hierarchy shared by the format, vm, workloads and bench services."""

from __future__ import annotations


class BPWError(Exception):
    """Base class for every error raised by the toolkit."""


class IndexedError(BPWError):
    """An error tied to a position in the instruction sequence."""

    def __init__(self, message: str, *, index: int | None = None) -> None:
        if index is not None:
            message = f"instruction {index}: {message}"
        super().__init__(message)
        self.index = index


# format

class FormatError(BPWError):
    pass


class BadMagic(FormatError):
    pass


class UnsupportedVersion(FormatError):
    pass


class HeaderBoundViolation(FormatError):
    pass


class Truncated(FormatError):
    pass


class TrailingData(FormatError):
    pass


class ReservedGateKind(IndexedError, FormatError):
    pass


class OperandOutOfRange(IndexedError, FormatError):
    pass


# vm

class VMError(IndexedError):
    pass


class InputLengthMismatch(VMError):
    pass


class LockedRegisterRead(VMError):
    pass


class NotReadyRead(VMError):
    pass


class UninitializedRead(VMError):
    pass


class PriorLevelUnderflow(VMError):
    pass


class OutputUnderflow(VMError):
    pass


# workloads

class WorkloadError(BPWError):
    pass


class InfeasibleDensity(WorkloadError):
    pass


class WidthTooSmall(WorkloadError):
    pass


class TooSmallN(WorkloadError):
    pass


# bench

class BenchError(BPWError):
    pass


class InsufficientSpan(BenchError):
    pass


class ClockUnavailable(BenchError):
    pass


class IoFailure(BenchError):
    pass
