"""FastAPI front end over the run pipeline.

Endpoints mirror the CLI subcommands one-to-one: /simulate, /estimate,
/sweep and /oracle-check. Typed package errors map onto HTTP statuses
(400 configuration, 422 physics or estimation) with a JSON body naming
the error class, so clients can branch on them the way CLI callers
branch on exit codes.
"""

import math

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..errors import ConfigError, EstimationError, JcprobeError, PhysicsError
from ..dynamics import ModeSpec
from ..pipeline import (
    EstimateOptions,
    SimulationConfig,
    run_estimate,
    run_oracle_check,
    run_simulate,
    run_sweep,
)
from ..states import CavityStateSpec
from ..tomography import NoiseSpec
from .schemas import (
    EstimateReportModel,
    EstimateRequest,
    OracleCheckRequest,
    OracleCheckResponse,
    RecordModel,
    SimulateRequest,
    SweepRequest,
    SweepResponse,
    SweepRowModel,
)

app = FastAPI(
    title="jcprobe",
    description="Qubit-cavity simulation and parameter recovery from qubit tomography",
    version="0.1.0",
)


def _status_for(exc: JcprobeError) -> int:
    if isinstance(exc, ConfigError):
        return 400
    if isinstance(exc, (PhysicsError, EstimationError)):
        return 422
    return 500


def _category_for(exc: JcprobeError) -> str:
    if isinstance(exc, ConfigError):
        return "config"
    if isinstance(exc, EstimationError):
        return "estimation"
    if isinstance(exc, PhysicsError):
        return "physics"
    return "internal"


@app.exception_handler(JcprobeError)
async def jcprobe_error_handler(request: Request, exc: JcprobeError) -> JSONResponse:
    return JSONResponse(
        status_code=_status_for(exc),
        content={
            "error": type(exc).__name__,
            "category": _category_for(exc),
            "message": str(exc),
            "exit_code": exc.exit_code,
        },
    )


def _config_from(req: SimulateRequest) -> SimulationConfig:
    if req.modes:
        kind = "multimode"
        modes = tuple(ModeSpec(omega=m.omega, g=m.g, dim=m.dim) for m in req.modes)
    else:
        kind = "dispersive" if req.dispersive else "jc"
        modes = ()
    noise = (
        NoiseSpec.gaussian(req.noise_sigma, req.seed)
        if req.noise_sigma > 0
        else NoiseSpec()
    )
    return SimulationConfig(
        kind=kind,
        a=req.a,
        omega=req.omega,
        g=req.g,
        dim=req.dim,
        modes=modes,
        cavity=CavityStateSpec.parse(req.cavity),
        delta=req.delta,
        steps=req.steps,
        include_negative=req.include_negative_times,
        noise=noise,
    )


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": app.version}


@app.post("/simulate", response_model=RecordModel)
def simulate(req: SimulateRequest) -> RecordModel:
    record = run_simulate(_config_from(req))
    return RecordModel.from_record(record)


@app.post("/estimate", response_model=EstimateReportModel)
def estimate(req: EstimateRequest) -> EstimateReportModel:
    record = req.record.to_record()
    options = EstimateOptions(
        stencil=req.stencil,
        delta=req.delta,
        dispersive=req.dispersive,
        known_a=req.known_a,
        known_g=req.known_g,
        known_omega=req.known_omega,
    )
    return EstimateReportModel.from_report(run_estimate(record, options))


@app.post("/sweep", response_model=SweepResponse)
def sweep(req: SweepRequest) -> SweepResponse:
    result = run_sweep(
        _config_from(req),
        req.deltas,
        stencil=req.stencil,
        subsample=req.subsample,
        workers=req.workers,
    )

    def clean(x: float) -> float | None:
        return None if x is None or math.isnan(x) else x

    rows = [
        SweepRowModel(
            delta=row.delta,
            status=row.status,
            reason=row.reason,
            report=EstimateReportModel.from_report(row.report) if row.report else None,
            errors={k: clean(v) for k, v in row.errors_against(result.truth).items()},
        )
        for row in result.rows
    ]
    return SweepResponse(truth=result.truth.to_json_dict(), rows=rows)


@app.post("/oracle-check", response_model=OracleCheckResponse)
def oracle_check(req: OracleCheckRequest) -> OracleCheckResponse:
    result = run_oracle_check(
        _config_from(req), delta=req.delta, stencil=req.stencil
    )
    return OracleCheckResponse(**result.to_json_dict())
