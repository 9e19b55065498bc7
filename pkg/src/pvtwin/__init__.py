"""Real-time single-diode PV digital-twin parameterization toolkit."""

from .config import (DATASHEET_X2_OPT, DEMO_PARAMS, DEMO_PLANT, DEMO_X2_BOUNDS,
                     RunConfig)
from .coopt import CoOptConfig, CoOptResult, co_optimize, stage2_objective
from .datasheet import CurvePoint, fit_datasheet
from .errors import PvTwinError
from .irradiance import IrradianceEstimate, estimate_equivalent_irradiance
from .metrics import UpdateEvent, UpdatePolicy, compute_error_report, should_update, tri
from .model import (EnvInputs, OperatingPoint, PlantConstants, PvParams,
                    current_at_voltage, derive_quantities, kcl_residual,
                    lambert_w0, mpp_point)
from .pso import Bounds, PsoConfig, minimize
from .replay import compare_methods, replay, report_emit, sweep_policies
from .synth import synth_plant
from .telemetry import Measurement, load_telemetry, resample

__version__ = "0.1.0"

__all__ = [
    "Bounds", "CoOptConfig", "CoOptResult", "CurvePoint", "DATASHEET_X2_OPT",
    "DEMO_PARAMS", "DEMO_PLANT", "DEMO_X2_BOUNDS", "EnvInputs",
    "IrradianceEstimate", "Measurement", "OperatingPoint", "PlantConstants",
    "PsoConfig", "PvParams", "PvTwinError", "RunConfig", "UpdateEvent",
    "UpdatePolicy", "co_optimize", "compare_methods", "compute_error_report",
    "current_at_voltage", "derive_quantities", "estimate_equivalent_irradiance",
    "fit_datasheet", "kcl_residual", "lambert_w0", "load_telemetry", "minimize",
    "mpp_point", "replay", "report_emit", "resample", "should_update",
    "stage2_objective", "sweep_policies", "synth_plant", "tri",
]
