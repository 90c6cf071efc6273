import csv
import json
from pathlib import Path

import pytest

import cli
from config.constants import EvaluatorKind, ExportFormat, GateKind, WorkloadFamily
from config.db import SessionLocal
from factories import synthetic_measurements
from models import MeasurementRecord
from schemas import GridSpec
from services.bench import export
from services.bpw_format import Instruction, Program, parse, serialize
from services.workloads import write_grid


def gen_password(tmp_path: Path, name: str = "p.bpw") -> Path:
    out = tmp_path / name
    code = cli.main(["gen", "--family", "password", "--w", "5", "--n", "100", "--seed", "7", "--out", str(out)])
    assert code == 0
    return out


def small_grid(tmp_path: Path) -> Path:
    path = tmp_path / "desk.json"
    write_grid(
        GridSpec(widths=[4, 8], sizes=[64], families=[WorkloadFamily.RANDOM_NAND], density_rule="width_only"),
        path,
    )
    return path


def test_gen_writes_a_password_recogniser(tmp_path, capsys) -> None:
    out = gen_password(tmp_path)

    header = parse(out.read_bytes()).header
    assert (header.a, header.b) == (5, 1)
    assert "n=100" in capsys.readouterr().out


def test_gen_is_deterministic(tmp_path) -> None:
    first = gen_password(tmp_path, "a.bpw")
    second = gen_password(tmp_path, "b.bpw")
    assert first.read_bytes() == second.read_bytes()


def test_gen_prints_the_actual_instruction_count(tmp_path, capsys) -> None:
    out = tmp_path / "r.bpw"
    code = cli.main(["gen", "--family", "random_nand", "--w", "16", "--n", "400", "--d", "1/16", "--out", str(out)])

    assert code == 0
    assert "n=408" in capsys.readouterr().out
    assert parse(out.read_bytes()).header.n == 408


def test_gen_uses_the_seed_from_the_environment(tmp_path, monkeypatch, capsys) -> None:
    monkeypatch.setenv("BPW_SEED", "42")
    monkeypatch.chdir(tmp_path)

    assert cli.main(["gen", "--family", "password", "--w", "5", "--n", "100"]) == 0
    assert (tmp_path / "password_w5_n100_s42.bpw").exists()


def test_gen_without_width_is_a_usage_error(capsys) -> None:
    code = cli.main(["gen", "--family", "password", "--n", "100"])

    assert code == 2
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["gen", "--family", "random_nand", "--w", "16", "--n", "400", "--d", "1/30"],
        ["gen", "--family", "random_nand", "--w", "16", "--n", "400", "--d", "2"],
        ["gen", "--family", "password", "--w", "5", "--n", "100", "--d", "1/5"],
        ["gen", "--family", "password", "--w", "5", "--n", "20"],
        ["gen", "--family", "triangles", "--w", "5", "--n", "100"],
    ],
)
def test_gen_rejects_invalid_workloads(argv, tmp_path, monkeypatch) -> None:
    monkeypatch.chdir(tmp_path)
    assert cli.main(argv) == 2
    assert list(tmp_path.iterdir()) == []


def test_validate_generator_output(tmp_path, capsys) -> None:
    out = gen_password(tmp_path)
    capsys.readouterr()

    assert cli.main(["validate", str(out), "--strict"]) == 0
    assert capsys.readouterr().out.strip().endswith("ok")


def test_validate_corrupted_magic(tmp_path) -> None:
    out = gen_password(tmp_path)
    data = bytearray(out.read_bytes())
    data[0] = 0x41
    out.write_bytes(bytes(data))

    assert cli.main(["validate", str(out)]) == 2


def test_validate_reports_rule_ids(tmp_path, capsys) -> None:
    instructions = [Instruction.copy(1, 1, 0), Instruction.gate(GateKind.NOT, 2), Instruction.copy(2, 1, 0)]
    instructions += [Instruction.gate(GateKind.NOT, 3)] * 3
    path = tmp_path / "r1.bpw"
    path.write_bytes(serialize(Program.build(4, instructions, a=4, b=0)))

    assert cli.main(["validate", str(path)]) == 1
    assert "R1 @2" in capsys.readouterr().out


def test_validate_missing_file(tmp_path) -> None:
    assert cli.main(["validate", str(tmp_path / "nope.bpw")]) == 1


@pytest.mark.parametrize("evaluator", ["bytewise", "bitpacked"])
def test_run_password(tmp_path, capsys, evaluator) -> None:
    out = gen_password(tmp_path)
    capsys.readouterr()

    assert cli.main(["run", str(out), "--input", "15", "--evaluator", evaluator]) == 0
    assert capsys.readouterr().out.strip() == "1"
    assert cli.main(["run", str(out), "--input", "14", "--evaluator", evaluator]) == 0
    assert capsys.readouterr().out.strip() == "0"


def test_run_reads_input_bits_from_a_file(tmp_path, capsys) -> None:
    out = gen_password(tmp_path)
    raw = tmp_path / "input.bin"
    raw.write_bytes(bytes([0b10101000]))
    capsys.readouterr()

    assert cli.main(["run", str(out), "--input-file", str(raw)]) == 0
    assert capsys.readouterr().out.strip() == "1"


def test_run_with_oracle_reports_agreement(tmp_path, capsys) -> None:
    out = gen_password(tmp_path)
    capsys.readouterr()

    assert cli.main(["run", str(out), "--input", "15", "--oracle"]) == 0
    assert capsys.readouterr().out.splitlines() == ["1", "oracle: agree"]


def test_run_with_oracle_reports_disagreement(tmp_path, capsys, monkeypatch) -> None:
    out = gen_password(tmp_path)
    monkeypatch.setattr(cli, "reference_eval", lambda program, bits: [0])
    capsys.readouterr()

    assert cli.main(["run", str(out), "--input", "15", "--oracle"]) == 1
    assert "oracle mismatch at output bit(s) [0]" in capsys.readouterr().err


def test_run_needs_inputs(tmp_path) -> None:
    out = gen_password(tmp_path)
    assert cli.main(["run", str(out)]) == 2
    assert cli.main(["run", str(out), "--input", "zz"]) == 2


def test_run_refuses_invalid_programs(tmp_path) -> None:
    path = tmp_path / "locked.bpw"
    path.write_bytes(serialize(Program.build(4, [Instruction.gate(GateKind.NOT, 8)] * 4, a=4, b=0)))
    assert cli.main(["run", str(path), "--input", "0"]) == 1


def test_bench_writes_one_row_per_timed_evaluation(tmp_path, capsys) -> None:
    out = tmp_path / "results.csv"

    code = cli.main(["bench", "--grid", str(small_grid(tmp_path)), "--repeats", "3", "--out", str(out)])

    assert code == 0
    with out.open(newline="") as handle:
        rows = list(csv.DictReader(handle))
    # 2 cells x 2 evaluators x 3 repeats
    assert len(rows) == 12
    assert {row["evaluator"] for row in rows} == {"bytewise", "bitpacked"}
    assert "12 measurements" in capsys.readouterr().out


def test_bench_can_store_results(tmp_path) -> None:
    out = tmp_path / "results.csv"
    argv = [
        "bench", "--grid", str(small_grid(tmp_path)), "--repeats", "1",
        "--evaluators", "bitpacked", "--out", str(out), "--workdir", str(tmp_path / "programs"), "--store",
    ]

    assert cli.main(argv) == 0
    with SessionLocal() as db:
        assert db.query(MeasurementRecord).count() == 2
    assert len(list((tmp_path / "programs").iterdir())) == 2


def test_bench_rejects_a_broken_grid(tmp_path) -> None:
    grid = tmp_path / "grid.json"
    grid.write_text('{"widths": "many"}')
    assert cli.main(["bench", "--grid", str(grid), "--out", str(tmp_path / "r.csv")]) == 2


def test_fit_prints_alpha_and_hypotheses(tmp_path, capsys) -> None:
    results = tmp_path / "results.csv"
    export(
        synthetic_measurements(0.5) + synthetic_measurements(0.5, evaluator=EvaluatorKind.BITPACKED, c=4e-9),
        ExportFormat.CSV,
        results,
    )
    report = tmp_path / "fit.json"

    code = cli.main(["fit", "--in", str(results), "--out", str(report)])

    out = capsys.readouterr().out
    assert code == 0
    assert "alpha=0.500" in out
    assert "R=10.000" in out
    assert "H1: accepted" in out
    assert "H2: accepted" in out
    assert json.loads(report.read_text())["fit"]["alpha"] == pytest.approx(0.5)


def test_fit_without_enough_widths_fails(tmp_path) -> None:
    results = tmp_path / "results.json"
    export(synthetic_measurements(0.5, widths=[5, 10]), ExportFormat.JSON, results)
    assert cli.main(["fit", "--in", str(results)]) == 1


def test_fit_rejects_malformed_measurements(tmp_path) -> None:
    results = tmp_path / "results.csv"
    results.write_text("family,n,w\nrandom_nand,abc,5\n")
    assert cli.main(["fit", "--in", str(results)]) == 2


def test_dump_limits_lines(tmp_path, capsys) -> None:
    out = gen_password(tmp_path)
    capsys.readouterr()

    assert cli.main(["dump", str(out), "--limit", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines == ["0 L0 NOT 0", "1 L0 NOT 1", "2 L0 NOT 2"]


def test_grid_emits_the_default_grid(capsys) -> None:
    assert cli.main(["grid", "--scale-cap", "10000000"]) == 0

    grid = GridSpec.model_validate_json(capsys.readouterr().out)
    assert grid.scale_cap == 10**7
    assert grid.widths[0] == 5 and grid.widths[-1] == 500000
    assert grid.sizes == [10**6, 10**7, 10**8, 10**9]


def test_grid_writes_desk_grid(tmp_path) -> None:
    path = tmp_path / "desk.json"
    assert cli.main(["grid", "--desk", "--out", str(path)]) == 0
    assert GridSpec.model_validate_json(path.read_text()).sizes == [10**5, 10**6, 10**7]


def test_verbose_flag_selects_info_logging(monkeypatch) -> None:
    monkeypatch.setenv("BPW_LOG_LEVEL", "error")

    assert cli.log_level(True) == "INFO"
    assert cli.log_level(False) == "ERROR"
    monkeypatch.delenv("BPW_LOG_LEVEL")
    assert cli.log_level(False) == "WARNING"
    assert "INFO" in cli.build_parser().format_help()
