"""HTTP service exposing the library over JSON.

Run with `uvicorn spherevort.service:app`.  Every endpoint wraps the same
handler used by the CLI; file payloads travel as CSV text in the response.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import handlers
from .errors import SphereVortError

app = FastAPI(
    title="spherevort",
    description=(
        "Exact solutions, Lie symmetries, residual verification and a "
        "pseudo-spectral benchmark solver for the barotropic vorticity "
        "equation on the rotating sphere."
    ),
)


class SolutionSpec(BaseModel):
    """Flat solution spec: family plus family-specific parameters."""

    family: str
    omega: float = 0.0
    n: Optional[int] = None
    m: Optional[int] = None
    amplitude: Optional[float] = None
    modes: Optional[list[str]] = None   # entries "m:amplitude:delta"
    a: Optional[str] = None             # number or "rh-classic"
    g: Optional[str] = None
    f: Optional[str] = None
    h: Optional[str] = None
    w: Optional[str] = None
    W: Optional[str] = None
    delta: Optional[float] = None
    c1: Optional[float] = None
    c2: Optional[float] = None
    nu: Optional[float] = None
    r0: Optional[float] = None
    H: Optional[str] = None


class GenerateRequest(SolutionSpec):
    t: float = 0.0
    nlat: Optional[int] = None
    nlon: Optional[int] = None


class FieldResponse(BaseModel):
    family: str
    label: str
    nlat: int
    nlon: int
    time: float
    csv: str


class VerifyRequest(SolutionSpec):
    tol: float = 1e-8
    mode: str = "analytic"
    n_points: int = 200
    seed: int = 0


class ResidualSummary(BaseModel):
    n_points: int
    max_abs: float
    rms: float
    scale: float
    relative_max: float
    mode: str


class VerifyResponse(BaseModel):
    family: str
    tol: float
    passed: bool
    report: ResidualSummary


class AlgebraTableResponse(BaseModel):
    labels: list[str]
    closed: bool
    max_pair_residual: float
    jacobi_residual: float
    csv: str
    text: str


class AlgebraCheckRequest(BaseModel):
    class_id: str
    params: dict = Field(default_factory=dict)
    tol: float = 1e-8


class AlgebraCheckResponse(BaseModel):
    class_id: str
    passed: bool
    max_residual: float
    csv: str
    text: str


class AdjointRequest(BaseModel):
    x: str
    eps: float
    y: str


class AdjointResponse(BaseModel):
    x: str
    eps: float
    y: str
    coefficients: dict[str, float]
    misfit: float
    display: Optional[str] = None


class TransformRequest(GenerateRequest):
    platzman: Optional[list[str]] = None   # "to_rest" / "to_rotating"
    rotate: Optional[list[str]] = None     # "J2:eps"
    discrete: Optional[list[str]] = None   # "time_reversal" / "mirror"


class BenchRequest(SolutionSpec):
    truncation: int = 42
    dt: float = 1e-3
    steps: int = 0
    stride: int = 1
    track: Optional[str] = None            # "n:m"
    hyper_nu: float = 0.0
    hyper_order: int = 1
    nlat: Optional[int] = None
    nlon: Optional[int] = None


class BenchResponse(BaseModel):
    csv: str
    summary: dict


def _run(handler, params):
    try:
        return handler(params)
    except SphereVortError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/generate", response_model=FieldResponse)
def generate(req: GenerateRequest):
    return _run(handlers.handle_generate, req.model_dump(exclude_none=True))


@app.post("/verify", response_model=VerifyResponse)
def verify(req: VerifyRequest):
    return _run(handlers.handle_verify, req.model_dump(exclude_none=True))


@app.get("/algebra/table", response_model=AlgebraTableResponse)
def algebra_table():
    return _run(handlers.handle_algebra_table, {})


@app.post("/algebra/check", response_model=AlgebraCheckResponse)
def algebra_check(req: AlgebraCheckRequest):
    return _run(handlers.handle_algebra_check, req.model_dump())


@app.post("/algebra/adjoint", response_model=AdjointResponse)
def algebra_adjoint(req: AdjointRequest):
    return _run(handlers.handle_algebra_adjoint, req.model_dump())


@app.post("/transform", response_model=FieldResponse)
def transform(req: TransformRequest):
    return _run(handlers.handle_transform, req.model_dump(exclude_none=True))


@app.post("/bench", response_model=BenchResponse)
def bench(req: BenchRequest):
    return _run(handlers.handle_bench, req.model_dump(exclude_none=True))
