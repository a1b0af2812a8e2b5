"""FastAPI application wrapping the compiler core."""

from __future__ import annotations

from fastapi import FastAPI

from .. import __version__
from . import routes
from .models import (
    CompareResponse,
    ConvertResponse,
    HealthResponse,
    MetaResponse,
    PredictResponse,
    SimulateResponse,
    SweepResponse,
    ValidateResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(
        title="tablewright",
        version=__version__,
        description="Converts trained ML models into match/action pipeline "
                    "programs, emits P4-style source and entry files, and "
                    "verifies programs with a deterministic simulator.",
    )
    app.get("/v1/health", response_model=HealthResponse)(routes.health)
    app.get("/v1/meta", response_model=MetaResponse)(routes.meta)
    app.post("/v1/validate", response_model=ValidateResponse)(routes.validate)
    app.post("/v1/predict", response_model=PredictResponse)(routes.predict)
    app.post("/v1/convert", response_model=ConvertResponse)(routes.convert)
    app.post("/v1/simulate", response_model=SimulateResponse)(routes.simulate)
    app.post("/v1/compare", response_model=CompareResponse)(routes.compare)
    app.post("/v1/sweep", response_model=SweepResponse)(routes.sweep)
    return app


__all__ = ["create_app"]
