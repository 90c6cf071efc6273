from fastapi.testclient import TestClient

from config.constants import EvaluatorKind
from factories import synthetic_measurements
from services.bpw_format import parse, serialize


def _upload(program) -> dict:
    return {"file": ("program.bpw", serialize(program), "application/octet-stream")}


def test_health(client: TestClient) -> None:
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"ok": True, "format_version": 1}


def test_generate_returns_program_bytes(client: TestClient) -> None:
    response = client.post(
        "/workloads/generate",
        json={"family": "random_nand", "n": 400, "w": 16, "d": 0.0625, "seed": 3},
    )

    assert response.status_code == 200, response.text
    program = parse(response.content)
    assert program.header.n == int(response.headers["x-bpw-n"]) == 408
    assert "random_nand_w16_n400_d16_s3.bpw" in response.headers["content-disposition"]


def test_generate_rejects_infeasible_density(client: TestClient) -> None:
    response = client.post(
        "/workloads/generate",
        json={"family": "random_nand", "n": 400, "w": 16, "d": 0.03, "seed": 3},
    )
    assert response.status_code == 400
    assert "inválida" in response.json()["detail"]


def test_default_grid_and_expansion(client: TestClient) -> None:
    grid = client.get("/workloads/grid", params={"scale_cap": 10**7, "seed": 5})
    assert grid.status_code == 200
    assert grid.json()["scale_cap"] == 10**7
    assert grid.json()["seed"] == 5

    expanded = client.post(
        "/workloads/grid/expand",
        json={"widths": [4, 8], "sizes": [64], "families": ["random_nand"], "density_rule": "width_only"},
    )
    assert expanded.status_code == 200
    assert [(spec["w"], spec["d"]) for spec in expanded.json()] == [(4, 0.25), (8, 0.125)]


def test_validate_upload(client: TestClient, password_program) -> None:
    response = client.post("/programs/validate", files=_upload(password_program), data={"strict": "true"})

    assert response.status_code == 200, response.text
    body = response.json()
    assert body["program"] == {"w": 5, "n": 100, "a": 5, "b": 1, "levels": 20}
    assert body["report"]["ok"] is True


def test_validate_rejects_bad_magic(client: TestClient) -> None:
    response = client.post(
        "/programs/validate",
        files={"file": ("broken.bpw", b"APW\x01" + bytes(40), "application/octet-stream")},
    )
    assert response.status_code == 400
    assert response.json()["detail"].startswith("Archivo BPW inválido")


def test_run_upload_with_oracle(client: TestClient, password_program) -> None:
    response = client.post(
        "/programs/run",
        files=_upload(password_program),
        data={"inputs": "15", "evaluator": "bitpacked", "oracle": "true"},
    )

    assert response.status_code == 200, response.text
    assert response.json() == {
        "outputs": "1",
        "gates_executed": 100,
        "levels_completed": 20,
        "evaluator": "bitpacked",
        "oracle_agrees": True,
    }


def test_run_rejects_bad_inputs(client: TestClient, password_program) -> None:
    response = client.post("/programs/run", files=_upload(password_program), data={"inputs": "ff"})
    assert response.status_code == 400


def test_dump_upload(client: TestClient, password_program) -> None:
    response = client.post("/programs/dump", files=_upload(password_program), data={"limit": "2"})
    assert response.status_code == 200
    assert response.text.splitlines() == ["0 L0 NOT 0", "1 L0 NOT 1"]


def test_measurements_store_filter_and_fit(client: TestClient) -> None:
    bytewise = synthetic_measurements(0.5)
    bitpacked = synthetic_measurements(0.5, c=4e-9, evaluator=EvaluatorKind.BITPACKED)
    payload = [m.model_dump(mode="json") for m in bytewise + bitpacked]

    stored = client.post("/measurements", json=payload)
    assert stored.status_code == 200, stored.text
    assert len(stored.json()) == 20
    assert all(row["id"] for row in stored.json())

    only_bitpacked = client.get("/measurements", params={"evaluator": "bitpacked"})
    assert {row["evaluator"] for row in only_bitpacked.json()} == {"bitpacked"}
    assert len(only_bitpacked.json()) == 10

    fit = client.get("/measurements/fit", params={"evaluator": "bytewise"})
    assert fit.status_code == 200, fit.text
    assert abs(fit.json()["fit"]["alpha"] - 0.5) < 1e-9

    exported = client.get("/measurements/export", params={"format": "csv"})
    assert exported.status_code == 200
    lines = exported.text.splitlines()
    assert lines[0] == "family,n,w,d,seed,evaluator,repeat,runtime_s,gate_rate"
    assert len(lines) == 21


def test_fit_without_measurements(client: TestClient) -> None:
    assert client.get("/measurements/fit").status_code == 404
    assert client.post("/measurements", json=[]).status_code == 400
