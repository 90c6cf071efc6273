import os
import sys
from pathlib import Path
from typing import Generator

import pytest
from fastapi.testclient import TestClient

ROOT_DIR = Path(__file__).resolve().parents[1]
APP_DIR = ROOT_DIR / "app"
TESTS_DIR = Path(__file__).resolve().parent
for directory in (ROOT_DIR, APP_DIR, TESTS_DIR):
    if str(directory) not in sys.path:
        sys.path.insert(0, str(directory))

TEST_DB_PATH = ROOT_DIR / "test.db"
if TEST_DB_PATH.exists():
    TEST_DB_PATH.unlink()

os.environ.setdefault("DATABASE_URL", f"sqlite+pysqlite:///{TEST_DB_PATH}")
os.environ.setdefault("DB_SCHEMA", "main")
os.environ.setdefault("BPW_SEED", "0")
os.environ.pop("BPW_STRICT", None)

import models  # noqa: E402,F401  # pylint: disable=wrong-import-position
from config.db import Base, SessionLocal, engine, get_db  # noqa: E402
from schemas import WorkloadSpec  # noqa: E402
from config.constants import WorkloadFamily  # noqa: E402
from services.workloads import generate  # noqa: E402


@pytest.fixture(scope="session", autouse=True)
def initialize_database() -> Generator[None, None, None]:
    Base.metadata.drop_all(bind=engine)
    Base.metadata.create_all(bind=engine)
    yield
    Base.metadata.drop_all(bind=engine)
    db_path = getattr(engine.url, "database", None)
    if db_path:
        path = Path(db_path)
        if path.exists():
            path.unlink()


@pytest.fixture(autouse=True)
def clean_database() -> Generator[None, None, None]:
    Base.metadata.drop_all(bind=engine)
    Base.metadata.create_all(bind=engine)
    yield


@pytest.fixture
def db_session() -> Generator:
    with SessionLocal() as db:
        yield db


@pytest.fixture
def client() -> Generator[TestClient, None, None]:
    from app.main import app  # local import so the env above is in place first

    def override_get_db() -> Generator:
        db = SessionLocal()
        try:
            yield db
        finally:
            db.close()

    app.dependency_overrides[get_db] = override_get_db

    with TestClient(app) as test_client:
        yield test_client

    app.dependency_overrides.clear()


@pytest.fixture
def password_program():
    """Five-bit recogniser; the accepted input is 0b10101."""
    return generate(WorkloadSpec(family=WorkloadFamily.PASSWORD, n=100, w=5, seed=7))


@pytest.fixture
def nand_program():
    return generate(WorkloadSpec(family=WorkloadFamily.RANDOM_NAND, n=400, w=16, d=1 / 16, seed=3))
