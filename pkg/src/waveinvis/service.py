"""HTTP service exposing the solver, the differential and the design loop.

Each endpoint accepts a JSON body carrying the same structure as the YAML
run configuration.  Heavy work runs synchronously in the request; results
come back as JSON and artifacts are written server-side under the run's
output directory.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import __version__
from .config import RunConfig
from .errors import (ConfigError, CutoffError, DegenerateSeedError,
                     DimensionError, DivergenceError, EvanescentSlabError,
                     ResolutionError, SingularGramError, SolverError,
                     WaveinvisError, ZeroAreaCellError)
from . import runs

_STATUS = {
    ConfigError: 422,
    CutoffError: 422,
    ResolutionError: 422,
    DimensionError: 422,
    ZeroAreaCellError: 422,
    EvanescentSlabError: 422,
    DivergenceError: 409,
    DegenerateSeedError: 409,
    SingularGramError: 500,
    SolverError: 500,
}


class ModesRequest(BaseModel):
    k: float | str
    cutoff_margin: float = 1e-3
    terms: int = 10


class ConfigRequest(BaseModel):
    config: RunConfig


class DifferentialRequest(BaseModel):
    config: RunConfig
    fd_step: float | None = 1e-3


class OracleRequest(BaseModel):
    k: float | str
    rho: float
    a: float = -1.0
    b: float = 1.0


def create_app() -> FastAPI:
    app = FastAPI(title="waveinvis", version=__version__,
                  description="Invisible-obstacle design in a 2D acoustic waveguide")

    @app.exception_handler(WaveinvisError)
    async def waveinvis_error(request: Request, exc: WaveinvisError):
        status = 500
        for cls, code in _STATUS.items():
            if isinstance(exc, cls):
                status = code
                break
        return JSONResponse(status_code=status,
                            content={"error": type(exc).__name__,
                                     "message": str(exc)})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "version": __version__}

    @app.post("/modes")
    def modes(req: ModesRequest):
        return runs.run_modes(req.k, req.cutoff_margin, req.terms)

    @app.post("/scatter")
    def scatter(req: ConfigRequest):
        return runs.run_scatter(req.config)

    @app.post("/differential")
    def differential(req: DifferentialRequest):
        return runs.run_differential(req.config, req.fd_step)

    @app.post("/cloak")
    def cloak(req: ConfigRequest):
        return runs.run_cloak(req.config)

    @app.post("/verify")
    def verify(req: ConfigRequest):
        return runs.run_verify(req.config)

    @app.post("/oracle")
    def oracle(req: OracleRequest):
        return runs.run_oracle(req.k, req.rho, req.a, req.b)

    return app


app = create_app()
