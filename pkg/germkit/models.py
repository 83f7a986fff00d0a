"""Pydantic request/response schemas shared by the CLI and the HTTP API."""

from pydantic import BaseModel, ConfigDict, Field


# Shared base

class Report(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    command: str
    germ: str
    order: int
    claim: str
    notes: list[str] = Field(default_factory=list)


class RigidFields(BaseModel):
    rigid_class: int | None = None
    components: list[str] = Field(default_factory=list)
    p: int | None = None
    M: list[list[int]] | None = None
    trace_zero: bool | None = None
    reason: str | None = None


# Reports

class ClassifyReport(Report, RigidFields):
    type: str
    lam: str | None = Field(None, alias="lambda")
    disk_position: str | None = None
    rotation_order: int | None = None


class RatesReport(Report):
    rates: list[int]
    supermultiplicative: bool
    c_infinity: str | None = None
    upper_bound_holds: bool | None = None
    delta: str | None = None


class RigidReport(Report, RigidFields):
    pass


class ExceptionalReport(Report):
    kind: str
    map: str | None = None
    degree: int | None = None
    point: str | None = None


class LiftReport(Report):
    lift: str
    modification: dict
    classification: dict | None = None


class RigidifyReport(Report):
    steps: int
    rigid_class: int
    final_germ: str
    modification: dict
    lifts: list[str] = Field(default_factory=list)
    residual_order: int


class PrepareReport(Report):
    prepared: str
    conjugation: dict


class CurvesReport(Report):
    unstable: dict
    stable: dict


class NormalFormReport(Report):
    normal_form: dict
    conjugation: dict
    first_action: dict | None = None
    rigidification_steps: int = 0


class DivergenceReport(Report):
    phi: dict | None = None
    psi: dict | None = None
    formal_only: bool


class EigenReport(Report):
    weights: dict | None = None
    c_infinity: str | None = None
    M: list[list[int]] | None = None
    skewness: str | None = None
    thinness: str | None = None
    iterates: list[dict] = Field(default_factory=list)


class SegmentReport(Report):
    family: str
    pieces: list[list[int]]
    start: str
    breakpoints: list[str] = Field(default_factory=list)
    fixed_points: list[str] = Field(default_factory=list)
    fixed_set: list[list[str]] = Field(default_factory=list)
    certain_up_to: str | None = None
    drift: str
    z_limit: str | None = None


# Request / Response

class AnalysisRequest(BaseModel):
    germ: str = Field(..., min_length=1, max_length=4000, examples=[
        "(w^2, z^3)",
        "(2z*(1+w), z*w)",
        "(z^2+w^2, w^2)",
    ])
    order: int | None = Field(None, ge=4, le=60)
    max_steps: int | None = Field(None, ge=0, le=200)
    steps: str | None = Field(None, examples=["z:0,w:0,w:0"])
    theta: str | None = None
    chart: str | None = Field(None, pattern="^[zw]$")
    n_max: int | None = Field(None, ge=1, le=12)
    family: str | None = Field(None, pattern="^(zw|infinity)$")


class ErrorResponse(BaseModel):
    detail: str
    kind: str


class HealthResponse(BaseModel):
    status: str
    version: str
    truncation: int
