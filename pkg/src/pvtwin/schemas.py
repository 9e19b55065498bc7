"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field, model_validator

from . import config as cfg_mod
from . import model, pso
from .metrics import UpdatePolicy, parse_policy
from .telemetry import Measurement


class PvParamsModel(BaseModel):
    rs: float = Field(gt=0)
    rsh: float = Field(gt=0)
    kd: float = Field(gt=0)
    iph0: float = Field(gt=0)
    is0: float = Field(gt=0)

    @model_validator(mode="after")
    def _rs_below_rsh(self):
        if self.rs >= self.rsh:
            raise ValueError("rs must be smaller than rsh")
        return self

    def to_core(self) -> model.PvParams:
        return model.PvParams(**self.model_dump())

    @classmethod
    def from_core(cls, p: model.PvParams) -> "PvParamsModel":
        return cls(rs=p.rs, rsh=p.rsh, kd=p.kd, iph0=p.iph0, is0=p.is0)


class PlantModel(BaseModel):
    ns: int = Field(default=72, ge=1)
    alpha_isc: float = 0.0005

    def to_core(self) -> model.PlantConstants:
        return model.PlantConstants(ns=self.ns, alpha_isc=self.alpha_isc)


class MeasurementModel(BaseModel):
    ts: float = 0.0
    v: float = Field(ge=0)
    i: float = Field(ge=0)
    t_c: float
    g_meas: float | None = None
    p: float | None = None

    def to_core(self) -> Measurement:
        return Measurement(ts=self.ts, v_meas=self.v, i_meas=self.i,
                           t_meas=self.t_c, g_meas=self.g_meas, p_meas=self.p)


class OperatingPointModel(BaseModel):
    v: float
    i: float
    p: float

    @classmethod
    def from_core(cls, pt: model.OperatingPoint) -> "OperatingPointModel":
        return cls(v=pt.v, i=pt.i, p=pt.p)

    def to_core(self) -> model.OperatingPoint:
        return model.OperatingPoint(v=self.v, i=self.i, p=self.p)


class PsoConfigModel(BaseModel):
    n_particles: int | None = None
    n_iterations: int | None = None
    c1: float | None = None
    c2: float | None = None
    w: float | None = None
    v_max_fraction: float | None = None

    def to_core(self, base: pso.PsoConfig) -> pso.PsoConfig:
        from dataclasses import replace
        out = replace(base)
        for key, value in self.model_dump(exclude_none=True).items():
            setattr(out, key, value)
        return out


class BoundsModel(BaseModel):
    rs: tuple[float, float]
    rsh: tuple[float, float]
    kd: tuple[float, float]
    iph0: tuple[float, float]
    is0: tuple[float, float]

    def to_core(self) -> pso.Bounds:
        return cfg_mod.bounds_from_dict(self.model_dump())

    @classmethod
    def from_core(cls, b: pso.Bounds) -> "BoundsModel":
        return cls(**cfg_mod.bounds_to_dict(b))


# --- endpoint payloads -----------------------------------------------------

class MppRequest(BaseModel):
    params: PvParamsModel
    plant: PlantModel = PlantModel()
    g: float = Field(ge=0)
    t_c: float


class MppResponse(BaseModel):
    point: OperatingPointModel
    omega: float
    degenerate: bool


class IrradianceRequest(BaseModel):
    measurement: MeasurementModel
    params: PvParamsModel
    plant: PlantModel = PlantModel()
    bounds: tuple[float, float] = (0.0, 1000.0)
    pso: PsoConfigModel | None = None
    seed: int = 0


class IrradianceResponse(BaseModel):
    g_equiv: float
    residual: float | None
    status: Literal["converged", "degenerate", "infeasible"]


class CoOptRequest(BaseModel):
    measurement: MeasurementModel
    warm_start: PvParamsModel
    plant: PlantModel = PlantModel()
    x1_bounds: tuple[float, float] = (0.0, 1000.0)
    x2_bounds: BoundsModel | None = None
    outer_iterations: int = 5
    tier_threshold: float = 0.005
    convergence_tol: float = 1e-3
    nested: bool = False
    stage1_pso: PsoConfigModel | None = None
    stage2_pso: PsoConfigModel | None = None
    seed: int = 0


class CoOptResponse(BaseModel):
    g_equiv: float
    params: PvParamsModel
    f2_value: float
    tier_used: int
    outer_iters_run: int
    predicted: OperatingPointModel
    status: str


class ShouldUpdateRequest(BaseModel):
    policy: str = "event:0.005"
    now: float
    last_update: float
    measurement: MeasurementModel
    predicted: OperatingPointModel

    def to_policy(self) -> UpdatePolicy:
        return parse_policy(self.policy)


class ShouldUpdateResponse(BaseModel):
    update: bool
    err_i: float
    err_v: float


class ErrorReportRequest(BaseModel):
    pairs: list[tuple[MeasurementModel, OperatingPointModel]]


class ChannelStatsModel(BaseModel):
    mean: float
    min: float
    max: float


class ErrorReportResponse(BaseModel):
    mape_i: float
    mape_v: float
    mape_p: float
    rmse_i: float
    rmse_v: float
    rmse_p: float
    ape_i: ChannelStatsModel
    ape_v: ChannelStatsModel
    ape_p: ChannelStatsModel
    n_samples: int


class TriRequest(BaseModel):
    window: list[float]
    ss_tail_fraction: float = 0.2


class TriResponse(BaseModel):
    tri_percent: float


class CurvePointModel(BaseModel):
    v: float = Field(ge=0)
    i: float = Field(ge=0)
    g: float = 1000.0
    t_c: float = 25.0


class DatasheetFitRequest(BaseModel):
    points: list[CurvePointModel] | None = None
    curve_csv: str | None = None
    plant: PlantModel = PlantModel()
    bounds: BoundsModel | None = None
    pso: PsoConfigModel | None = None
    seed: int = 0
    n_starts: int = 5
    polish: bool = True

    @model_validator(mode="after")
    def _one_source(self):
        if (self.points is None) == (self.curve_csv is None):
            raise ValueError("provide exactly one of points or curve_csv")
        return self


class DatasheetFitResponse(BaseModel):
    params: PvParamsModel
    rmse_a: float


class SynthRequest(BaseModel):
    scenario: Literal["clear", "cloudy", "overcast"] = "cloudy"
    params: PvParamsModel
    plant: PlantModel = PlantModel()
    duration_s: float = Field(gt=0)
    noise: float = Field(default=0.005, ge=0)
    seed: int = 0
    tracker: bool = False
    tracker_step_v: float = 0.5
    gmeas_mode: Literal["none", "true", "proxy"] = "none"
    g_peak: float = 950.0
    params_end: PvParamsModel | None = None
    step_at_s: float | None = None
    params_step: PvParamsModel | None = None
    start_ts: float = 0.0


class SynthResponse(BaseModel):
    telemetry_csv: str
    truth_csv: str
    n_samples: int


class RunConfigModel(BaseModel):
    """JSON-facing mirror of the replay run configuration."""

    plant: PlantModel = PlantModel()
    initial_params: PvParamsModel
    x1_bounds: tuple[float, float] = (0.0, 1000.0)
    x2_bounds: BoundsModel | None = None
    policy: str = "event:0.005"
    method: Literal["base", "method1", "method2", "proposed"] = "proposed"
    resample_s: float = 10.0
    seed: int = 0
    dark_v: float = 1.0
    dark_i: float = 0.5
    stage1_pso: PsoConfigModel | None = None
    stage2_pso: PsoConfigModel | None = None
    outer_iterations: int = 5
    tier_threshold: float = 0.005
    convergence_tol: float = 1e-3
    nested: bool = False
    normalize_objective: bool = False
    daylight_window: tuple[float, float] | None = None

    def to_core(self) -> cfg_mod.RunConfig:
        run = cfg_mod.RunConfig(initial_params=self.initial_params.to_core())
        run.plant = self.plant.to_core()
        run.x1_bounds = self.x1_bounds
        if self.x2_bounds is not None:
            run.x2_bounds = self.x2_bounds.to_core()
        run.policy = parse_policy(self.policy)
        run.method = self.method
        run.resample_s = self.resample_s
        run.seed = self.seed
        run.dark_v = self.dark_v
        run.dark_i = self.dark_i
        if self.stage1_pso is not None:
            run.stage1_cfg = self.stage1_pso.to_core(run.stage1_cfg)
        if self.stage2_pso is not None:
            run.stage2_cfg = self.stage2_pso.to_core(run.stage2_cfg)
        run.outer_iterations = self.outer_iterations
        run.tier_threshold = self.tier_threshold
        run.convergence_tol = self.convergence_tol
        run.nested = self.nested
        run.normalize_objective = self.normalize_objective
        run.daylight_window = self.daylight_window
        return run


class ReplayRequest(BaseModel):
    config: RunConfigModel
    telemetry_csv: str


class ChannelSummary(BaseModel):
    mean: float
    min: float
    max: float


class MapeSummary(BaseModel):
    i: ChannelSummary
    v: ChannelSummary
    p: ChannelSummary


class RmseSummary(BaseModel):
    i: float
    v: float
    p: float


class ReplaySummary(BaseModel):
    """Mirrors the summary JSON written next to the records."""

    method: str
    policy: str
    n_steps: int
    n_daylight: int
    update_count: int
    mape: MapeSummary | None
    rmse: RmseSummary | None


class ReplayResponse(BaseModel):
    summary: ReplaySummary
    files: dict[str, str]
    empty: bool


class SweepRequest(BaseModel):
    config: RunConfigModel
    telemetry_csv: str
    event_threshold: float | None = None


class StudyResponse(BaseModel):
    summaries: dict[str, ReplaySummary]
    files: dict[str, str]


class CompareRequest(BaseModel):
    config: RunConfigModel
    telemetry_csv: str
    methods: list[Literal["base", "method1", "method2", "proposed"]] = [
        "base", "method1", "method2", "proposed"]
