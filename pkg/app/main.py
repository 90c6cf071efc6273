import logging
import os

from dotenv import load_dotenv

load_dotenv()

from fastapi import FastAPI  # noqa: E402

from config.db import init_db  # noqa: E402
from routes.health import router as health_router  # noqa: E402
from routes.measurements import router as measurements_router  # noqa: E402
from routes.programs import router as programs_router  # noqa: E402
from routes.workloads import router as workloads_router  # noqa: E402

logging.basicConfig(level=os.getenv("BPW_LOG_LEVEL", "INFO").upper())


app = FastAPI(title="BPW")


@app.on_event("startup")
def on_startup() -> None:
    init_db()


app.include_router(health_router)
app.include_router(programs_router)
app.include_router(workloads_router)
app.include_router(measurements_router)
