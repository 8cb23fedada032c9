"""Pydantic request/response models for the HTTP service.

The record payload mirrors the JSON file format exactly (``times``,
``series``, ``meta``), so a file written by the CLI can be posted to
``/estimate`` unchanged and a ``/simulate`` response can be saved to disk
as a valid record file.
"""

from pydantic import BaseModel, Field, field_validator

from ..estimator import EstimateReport
from ..tomography import TomographyRecord


class RecordModel(BaseModel):
    times: list[float]
    series: list[list[list[float]]]
    meta: dict = Field(default_factory=dict)

    @field_validator("series")
    @classmethod
    def _series_shape(cls, v):
        if len(v) != 3 or any(len(row) != 3 for row in v):
            raise ValueError("series must be a 3x3 nested list of time series")
        return v

    @classmethod
    def from_record(cls, record: TomographyRecord) -> "RecordModel":
        return cls(**record.to_json_dict())

    def to_record(self) -> TomographyRecord:
        return TomographyRecord.from_json_dict(self.model_dump())


class ModeModel(BaseModel):
    omega: float
    g: float = Field(ge=0)
    dim: int = Field(ge=2)


class SimulateRequest(BaseModel):
    a: float = 1.0
    omega: float = 1.0
    g: float = 1.0
    dim: int = Field(default=400, ge=2)
    cavity: str = "coherent:1"
    delta: float = Field(default=0.01, gt=0)
    steps: int = Field(default=8, ge=1)
    include_negative_times: bool = False
    dispersive: bool = False
    modes: list[ModeModel] | None = None
    noise_sigma: float = Field(default=0.0, ge=0)
    seed: int = 0


class ResidualModel(BaseModel):
    name: str
    value: float


class EstimateReportModel(BaseModel):
    a_hat: float | None = None
    g_hat: float | None = None
    omega_hat: float | None = None
    x_mean: float | None = None
    p_mean: float | None = None
    v_xx: float | None = None
    v_pp: float | None = None
    v_xp: float | None = None
    n_mean: float | None = None
    n_var: float | None = None
    residuals: list[ResidualModel] = Field(default_factory=list)
    warnings: list[str] = Field(default_factory=list)
    stencil: str = "forward2"
    delta: float = 0.0

    @classmethod
    def from_report(cls, report: EstimateReport) -> "EstimateReportModel":
        return cls(**report.to_json_dict())


class EstimateRequest(BaseModel):
    record: RecordModel
    stencil: str = "forward2"
    delta: float | None = Field(default=None, gt=0)
    dispersive: bool = False
    known_a: float | None = None
    known_g: float | None = None
    known_omega: float | None = None


class SweepRowModel(BaseModel):
    delta: float
    status: str
    reason: str = ""
    report: EstimateReportModel | None = None
    errors: dict[str, float | None] = Field(default_factory=dict)


class SweepRequest(SimulateRequest):
    deltas: list[float]
    stencil: str = "forward2"
    subsample: bool = False
    workers: int = Field(default=1, ge=1)


class SweepResponse(BaseModel):
    truth: dict[str, float | None]
    rows: list[SweepRowModel]


class OracleCheckRequest(SimulateRequest):
    stencil: str = "forward2"


class OracleCheckResponse(BaseModel):
    delta: float
    stencil: str
    d1_exact: list[list[float]]
    d2_exact: list[list[float]]
    d1_fd: list[list[float]]
    d2_fd: list[list[float]]
    max_dev_d1: float
    max_dev_d2: float
    bound_d1: float
    bound_d2: float
    passed: bool


class ErrorBody(BaseModel):
    error: str
    category: str
    message: str
    exit_code: int
