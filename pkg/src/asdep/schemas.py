"""Pydantic request/response models shared by the HTTP service and the CLI."""
from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

Method = Literal[
    "cprime-plugin",
    "cprime-direct",
    "sigma-tot",
    "d-sigma-tot",
    "shapley-db",
    "shapley-var",
    "bounds",
]


class StencilSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    beta: list[float] = Field(min_length=2)


class RunConfig(BaseModel):
    """One experiment run.  Unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    function: str | None = None
    params: dict[str, float] = Field(default_factory=dict)
    method: Method | None = None
    gradients: Literal["analytic", "estimated"] = "analytic"
    n: int = Field(default=10000, validation_alias="N", ge=1)
    n_inner: int | None = Field(default=None, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    h: float | None = Field(default=None, gt=0)
    sigma2: float | None = Field(default=None, gt=0)
    tau: float | None = Field(default=None, gt=0.25, lt=1.0)
    k0: float | None = Field(default=None, validation_alias="K0")
    m2: float = Field(default=1.0, validation_alias="M2", gt=0)
    stencil: StencilSpec | None = None
    mean: list[float] | None = None
    cov: list[list[float]] | None = None
    ell_sweep: list[int] | None = None
    ns: int = Field(default=100, ge=1)
    order: Literal[2, 3] = 2
    figure: Literal[1, 2, 3] | None = None
    threads: int = Field(default=1, ge=1)
    out: str | None = None

    def resolved(self) -> dict:
        return self.model_dump(mode="json", exclude_none=True)


class RunResult(BaseModel):
    kind: str
    summary: dict
    csv: str
    extras: dict[str, str] = Field(default_factory=dict)
    resolved_config: dict
    version: str
    n_model_evals: int | None = None


class FunctionInfo(BaseModel):
    name: str
    dimension: int
    params: dict
    input_law: dict
    analytic_gradient: bool
    references: list[str]


class HealthResponse(BaseModel):
    status: str
    version: str


class ErrorBody(BaseModel):
    detail: str
    kind: str
