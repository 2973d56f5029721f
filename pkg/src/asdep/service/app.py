"""HTTP facade over the experiment drivers.

Each endpoint validates a :class:`RunConfig`, runs the corresponding driver
and returns the full :class:`RunResult` (summary, CSV text, resolved config).
Clients write artifacts themselves; the service holds no state.
"""
from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, experiments
from ..errors import InvalidInputError, NumericError
from ..schemas import FunctionInfo, HealthResponse, RunConfig, RunResult


def create_app() -> FastAPI:
    app = FastAPI(title="asdep", version=__version__)

    @app.exception_handler(InvalidInputError)
    async def _invalid(request: Request, exc: InvalidInputError):
        return JSONResponse(
            status_code=422, content={"detail": str(exc), "kind": "invalid-input"}
        )

    @app.exception_handler(NumericError)
    async def _numeric(request: Request, exc: NumericError):
        return JSONResponse(
            status_code=500, content={"detail": str(exc), "kind": "numeric"}
        )

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.get("/functions", response_model=list[FunctionInfo])
    def functions():
        return [
            FunctionInfo(
                name=info["name"],
                dimension=info["dimension"],
                params=info["params"],
                input_law=info["input_law"],
                analytic_gradient=info["analytic_gradient"],
                references=info["references"],
            )
            for info in experiments.functions_info()
        ]

    def _register(kind: str):
        @app.post(f"/run/{kind}", response_model=RunResult, name=f"run_{kind}")
        def runner(cfg: RunConfig) -> RunResult:
            return experiments.run(kind, cfg)

        return runner

    for kind in experiments.RUNNERS:
        _register(kind)

    return app


app = create_app()
