import numpy as np
import pytest

from config.constants import DensityRule, GateKind, WorkloadFamily
from errors import InfeasibleDensity, TooSmallN, WidthTooSmall, WorkloadError
from schemas import GridSpec, WorkloadSpec
from services.bpw_format import serialize, validate
from services.vm import bits_from_int, run
from services.workloads import (
    Permutation,
    RNG_NAME,
    copy_bits,
    gen_password_recognizer,
    gen_random_nand,
    make_rng,
    parameter_grid,
    parse_program_filename,
    password_oracle,
    password_value,
    program_filename,
    read_grid,
    reduction_levels,
    repetitions,
    valid_periods,
    write_grid,
    write_program,
)

RANDOM = WorkloadFamily.RANDOM_NAND
PASSWORD = WorkloadFamily.PASSWORD


def nand_spec(**overrides) -> WorkloadSpec:
    values = {"family": RANDOM, "n": 400, "w": 16, "d": 1 / 16, "seed": 3}
    values.update(overrides)
    return WorkloadSpec(**values)


def test_valid_periods_halve_the_density() -> None:
    assert valid_periods(10**6, 50) == [50 << m for m in range(15)]
    assert valid_periods(64, 4) == [4, 8, 16, 32, 64]
    assert valid_periods(3, 4) == []


def test_repetitions_round_half_up() -> None:
    assert repetitions(100, 50) == 2
    assert repetitions(3, 1) == 2
    assert repetitions(10**6, 50) == 19608


def test_password_constant() -> None:
    assert password_value(5) == 0b10101
    assert password_value(4) == 0b0101
    assert password_value(1) == 1
    assert reduction_levels(5) == 3
    assert reduction_levels(50) == 6
    assert reduction_levels(1) == 0


def test_password_oracle() -> None:
    assert password_oracle(5, [1, 0, 1, 0, 1]) == 1
    assert password_oracle(5, [1, 0, 1, 0, 0]) == 0
    with pytest.raises(ValueError):
        password_oracle(0, [])
    with pytest.raises(ValueError):
        password_oracle(5, [1, 0])


def test_random_nand_program_shape(nand_program) -> None:
    reps = repetitions(400, 16)
    kinds = [instr.kind for instr in nand_program.instructions]
    copies = [instr for instr in nand_program.instructions if instr.kind is GateKind.COPY]

    assert nand_program.header.n == reps * 17
    assert nand_program.header.a == nand_program.header.b == 16
    assert set(kinds) == {GateKind.NAND2, GateKind.COPY}
    assert len(copies) == reps
    assert all(instr.operands[1] == copy_bits(16) for instr in copies)
    assert all(16 <= instr.operands[0] < 32 for instr in copies)
    assert validate(nand_program, strict=True).ok


def test_random_nand_is_deterministic_per_seed() -> None:
    first = serialize(gen_random_nand(nand_spec()))
    again = serialize(gen_random_nand(nand_spec()))
    other = serialize(gen_random_nand(nand_spec(seed=4)))

    assert first == again
    assert first != other


@pytest.mark.parametrize(
    "overrides, error",
    [
        ({"d": 1 / 30}, InfeasibleDensity),
        ({"d": 1 / 512}, InfeasibleDensity),
        ({"d": None}, InfeasibleDensity),
        ({"n": 10}, InfeasibleDensity),
        ({"w": 3, "d": 1 / 3}, WidthTooSmall),
        ({"family": PASSWORD}, WorkloadError),
    ],
)
def test_random_nand_rejects_bad_parameters(overrides, error) -> None:
    with pytest.raises(error):
        gen_random_nand(nand_spec(**overrides))


def test_password_program_shape(password_program) -> None:
    header = password_program.header
    assert (header.w, header.n, header.a, header.b) == (5, 100, 5, 1)
    assert password_program.levels == 20
    assert validate(password_program, strict=True).ok


def test_password_rounds_n_down_to_whole_levels() -> None:
    program = gen_password_recognizer(WorkloadSpec(family=PASSWORD, n=103, w=5, seed=7))
    assert program.header.n == 100


def test_password_needs_room_for_a_permutation_level() -> None:
    with pytest.raises(TooSmallN):
        gen_password_recognizer(WorkloadSpec(family=PASSWORD, n=25, w=5))


def test_wide_password_caps_at_fifty_bits() -> None:
    program = gen_password_recognizer(WorkloadSpec(family=PASSWORD, n=600, w=60, seed=2))
    password = bits_from_int(password_value(50), 50)
    flipped = list(password)
    flipped[17] ^= 1

    assert program.header.a == 50
    assert run(program, password).outputs == [1]
    assert run(program, flipped).outputs == [0]


def test_permutation_composition() -> None:
    rng = np.random.default_rng(0)
    first = Permutation.random(6, rng)
    second = Permutation.random(6, rng)
    values = list("abcdef")

    assert first.then(second).apply(values) == second.apply(first.apply(values))
    assert Permutation.identity(6).apply(values) == values
    assert sorted(first.mapping) == list(range(6))


def test_rng_streams_are_keyed_by_workload() -> None:
    base = make_rng(nand_spec()).integers(0, 2**32, size=4).tolist()
    assert base == make_rng(nand_spec()).integers(0, 2**32, size=4).tolist()
    assert base != make_rng(nand_spec(w=32, d=1 / 32)).integers(0, 2**32, size=4).tolist()
    assert RNG_NAME == "numpy.random.PCG64"


def test_parameter_grid_enumerates_feasible_cells() -> None:
    grid = GridSpec(widths=[4, 8], sizes=[64], families=[RANDOM])

    specs = parameter_grid(grid)

    assert [(spec.w, spec.period) for spec in specs] == [
        (4, 4), (4, 8), (4, 16), (4, 32), (4, 64),
        (8, 8), (8, 16), (8, 32), (8, 64),
    ]
    width_only = parameter_grid(grid.model_copy(update={"density_rule": DensityRule.WIDTH_ONLY}))
    assert [(spec.w, spec.period) for spec in width_only] == [(4, 4), (8, 8)]


def test_parameter_grid_applies_scale_cap_and_skips_small_cells() -> None:
    grid = GridSpec(widths=[2, 5], sizes=[20, 100, 1000], families=[RANDOM, PASSWORD], scale_cap=100)

    specs = parameter_grid(grid)

    assert all(spec.n <= 100 for spec in specs)
    # w=2 leaves no COPY bits; n=20 cannot hold a w=5 recogniser
    assert {spec.w for spec in specs if spec.family is RANDOM} == {5}
    assert [(spec.w, spec.n) for spec in specs if spec.family is PASSWORD] == [(2, 20), (2, 100), (5, 100)]


def test_program_filenames_identify_the_workload(tmp_path) -> None:
    spec = nand_spec(d=1 / 32)

    path, program = write_program(spec, tmp_path)

    assert path.name == "random_nand_w16_n400_d32_s3.bpw" == program_filename(spec)
    assert path.read_bytes() == serialize(program)
    assert parse_program_filename(path.name) == spec
    assert parse_program_filename("password_w5_n100_s7.bpw") == WorkloadSpec(
        family=PASSWORD, n=100, w=5, seed=7
    )
    assert parse_program_filename("notes.txt") is None


def test_grid_json_round_trip(tmp_path) -> None:
    grid = GridSpec(widths=[5, 10], sizes=[1000], scale_cap=500, seed=9)
    path = tmp_path / "grid.json"

    write_grid(grid, path)

    assert read_grid(path) == grid
