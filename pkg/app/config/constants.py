from enum import Enum, IntEnum


MAGIC = b"BPW"
VERSION = 0x01
HEADER_SIZE = 36


class GateKind(IntEnum):
    """Gate-type nibble of a BPW version 0x01 gate-descriptor."""

    NOT = 0x0
    AND2 = 0x1
    OR2 = 0x2
    NAND2 = 0x3
    NOR2 = 0x4
    XOR2 = 0x5
    XNOR2 = 0x6
    AND3 = 0x7
    OR3 = 0x8
    NAND3 = 0x9
    NOR3 = 0xA
    XOR3 = 0xB
    XNOR3 = 0xC
    MUX3 = 0xD
    COPY = 0xE

    @property
    def arity(self) -> int:
        return GATE_ARITY[self]


RESERVED_NIBBLE = 0xF

GATE_ARITY = {
    GateKind.NOT: 1,
    GateKind.AND2: 2,
    GateKind.OR2: 2,
    GateKind.NAND2: 2,
    GateKind.NOR2: 2,
    GateKind.XOR2: 2,
    GateKind.XNOR2: 2,
    GateKind.AND3: 3,
    GateKind.OR3: 3,
    GateKind.NAND3: 3,
    GateKind.NOR3: 3,
    GateKind.XOR3: 3,
    GateKind.XNOR3: 3,
    GateKind.MUX3: 3,
    GateKind.COPY: 3,
}

LOGIC_GATES = tuple(kind for kind in GateKind if kind is not GateKind.COPY)


class EvaluatorKind(str, Enum):
    BYTEWISE = "bytewise"
    BITPACKED = "bitpacked"


class WorkloadFamily(str, Enum):
    RANDOM_NAND = "random_nand"
    PASSWORD = "password"


class DensityRule(str, Enum):
    HALVING = "halving"
    WIDTH_ONLY = "width_only"


class ExportFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


PAPER_WIDTHS = (5, 10, 50, 100, 500, 1000, 5000, 10000, 50000, 100000, 500000)
PAPER_SIZES = (10**6, 10**7, 10**8, 10**9)
DESK_WIDTHS = (5, 10, 50, 100, 500, 1000, 5000)
DESK_SIZES = (10**5, 10**6, 10**7)

MAX_PASSWORD_BITS = 50

MEASUREMENT_COLUMNS = (
    "family",
    "n",
    "w",
    "d",
    "seed",
    "evaluator",
    "repeat",
    "runtime_s",
    "gate_rate",
)
