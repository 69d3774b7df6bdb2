"""FastAPI service: submit an experiment config, get the run record back.

The service is a thin wrapper over :func:`vrjplab.experiments.run_experiment`;
computation is synchronous and results are returned in the response body, so
clients (including the package CLI) can render reports locally.  Server-side
artifact persistence only happens when the submitted config carries an
``output_dir``.
"""

from __future__ import annotations

from typing import Literal, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict

from .. import __version__
from ..errors import CapacityError, VrjplabError
from ..experiments import RunRecord, default_config, run_experiment
from ..experiments.config import EXPERIMENT_NAMES, ExperimentConfig, ExperimentName


class RunRequest(BaseModel):
    """Partial experiment config: omitted fields take the experiment's defaults."""

    model_config = ConfigDict(extra="forbid")

    experiment: ExperimentName
    rho: Optional[float] = None
    wbar: Optional[float] = None
    n: Optional[int] = None
    s: Optional[float] = None
    replicas: Optional[int] = None
    seed: Optional[int] = None
    method: Optional[Literal["sequential", "gibbs"]] = None
    q_exponent: Optional[int] = None
    workers: Optional[int] = None
    output_dir: Optional[str] = None

    def to_config(self):
        overrides = {
            k: v for k, v in self.model_dump().items() if k != "experiment" and v is not None
        }
        return default_config(self.experiment, **overrides)


class HealthResponse(BaseModel):
    status: str
    version: str


class ExperimentInfo(BaseModel):
    name: str
    defaults: dict


def create_app() -> FastAPI:
    app = FastAPI(title="vrjplab", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.get("/experiments", response_model=list[ExperimentInfo])
    def experiments() -> list[ExperimentInfo]:
        return [
            ExperimentInfo(name=name, defaults=default_config(name).model_dump())
            for name in EXPERIMENT_NAMES
        ]

    @app.post("/run", response_model=RunRecord)
    def run(request: RunRequest) -> RunRecord:
        try:
            config = request.to_config()
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        try:
            return run_experiment(config)
        except CapacityError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except VrjplabError as exc:
            raise HTTPException(status_code=500, detail=f"numerical failure: {exc}") from exc

    return app


# the request model must mirror the config schema field for field
assert set(RunRequest.model_fields) == set(ExperimentConfig.model_fields), (
    "RunRequest drifted from ExperimentConfig"
)
