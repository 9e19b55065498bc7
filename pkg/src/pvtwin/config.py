"""Run configuration: JSON config file, bounds file, and demo constants."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import pso
from .coopt import DEFAULT_X2_BOUNDS, CoOptConfig
from .errors import ConfigError, ParseError, SchemaError
from .irradiance import DEFAULT_G_BOUNDS, DEFAULT_STAGE1_CFG
from .coopt import DEFAULT_STAGE2_CFG
from .metrics import UpdatePolicy, parse_policy
from .model import PARAM_NAMES, PlantConstants, PvParams
from .telemetry import DARK_I_FLOOR, DARK_V_FLOOR

METHODS = ("base", "method1", "method2", "proposed")

# Paper-style datasheet parameter set; the photocurrent coefficient multiplies
# raw W/m^2 irradiance, so this vector describes a lumped block with kA-scale
# currents. The demo set below is its module-scale counterpart, which is the
# regime where the closed-form MPP is an accurate stand-in for the true curve
# maximum.
DATASHEET_X2_OPT = PvParams(rs=0.279, rsh=216.990, kd=1.086, iph0=11.134, is0=3.405e-10)
DEMO_PARAMS = PvParams(rs=0.279, rsh=216.990, kd=1.086, iph0=0.011134, is0=3.405e-10)
DEMO_PLANT = PlantConstants()

# Module-scale feasible box used by the demo configs and the synthetic tests.
DEMO_X2_BOUNDS = pso.Bounds(
    lower=np.array([1e-3, 10.0, 0.5, 1e-3, 1e-12]),
    upper=np.array([2.0, 5000.0, 2.0, 0.05, 1e-6]),
)


@dataclass
class RunConfig:
    """Everything a replay needs besides the telemetry itself."""

    plant: PlantConstants = field(default_factory=PlantConstants)
    initial_params: PvParams = field(default_factory=lambda: DEMO_PARAMS)
    x1_bounds: tuple[float, float] = DEFAULT_G_BOUNDS
    x2_bounds: pso.Bounds = field(default_factory=lambda: DEFAULT_X2_BOUNDS)
    policy: UpdatePolicy = field(default_factory=lambda: parse_policy("event:0.005"))
    method: str = "proposed"
    resample_s: float = 10.0
    seed: int = 0
    dark_v: float = DARK_V_FLOOR
    dark_i: float = DARK_I_FLOOR
    stage1_cfg: pso.PsoConfig = field(default_factory=lambda: replace(DEFAULT_STAGE1_CFG))
    stage2_cfg: pso.PsoConfig = field(default_factory=lambda: replace(DEFAULT_STAGE2_CFG))
    outer_iterations: int = 5
    tier_threshold: float = 0.005
    convergence_tol: float = 1e-3
    nested: bool = False
    normalize_objective: bool = False
    daylight_window: tuple[float, float] | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.resample_s <= 0:
            raise ConfigError("resample_s must be positive")

    def coopt_config(self) -> CoOptConfig:
        return CoOptConfig(
            x1_bounds=self.x1_bounds, x2_bounds=self.x2_bounds,
            outer_iterations=self.outer_iterations, stage1_cfg=self.stage1_cfg,
            stage2_cfg=self.stage2_cfg, tier_threshold=self.tier_threshold,
            convergence_tol=self.convergence_tol, nested=self.nested,
            normalize_objective=self.normalize_objective,
            dark_v=self.dark_v, dark_i=self.dark_i)


def _pso_from_dict(d: dict, base: pso.PsoConfig) -> pso.PsoConfig:
    cfg = replace(base)
    for key, value in d.items():
        if not hasattr(cfg, key):
            raise ConfigError(f"unknown pso option {key!r}")
        setattr(cfg, key, value)
    return cfg


def bounds_from_dict(d: dict) -> pso.Bounds:
    missing = [n for n in PARAM_NAMES if n not in d]
    if missing:
        raise ConfigError(f"x2_bounds missing {missing}")
    lower = np.array([float(d[n][0]) for n in PARAM_NAMES])
    upper = np.array([float(d[n][1]) for n in PARAM_NAMES])
    return pso.Bounds(lower, upper)


def bounds_to_dict(b: pso.Bounds) -> dict:
    return {n: [float(b.lower[k]), float(b.upper[k])] for k, n in enumerate(PARAM_NAMES)}


def run_config_from_dict(d: dict) -> RunConfig:
    cfg = RunConfig()
    plant_d = d.get("plant", {})
    cfg.plant = PlantConstants(**plant_d) if plant_d else PlantConstants()
    if "initial_params" in d:
        cfg.initial_params = PvParams(**d["initial_params"])
    if "x1_bounds" in d:
        lo, hi = d["x1_bounds"]
        cfg.x1_bounds = (float(lo), float(hi))
    if "x2_bounds" in d:
        cfg.x2_bounds = bounds_from_dict(d["x2_bounds"])
    if "policy" in d:
        cfg.policy = parse_policy(d["policy"])
    if "method" in d:
        cfg.method = d["method"]
    if "stage1_pso" in d:
        cfg.stage1_cfg = _pso_from_dict(d["stage1_pso"], DEFAULT_STAGE1_CFG)
    if "stage2_pso" in d:
        cfg.stage2_cfg = _pso_from_dict(d["stage2_pso"], DEFAULT_STAGE2_CFG)
    for key in ("resample_s", "seed", "dark_v", "dark_i", "outer_iterations",
                "tier_threshold", "convergence_tol", "nested", "normalize_objective"):
        if key in d:
            setattr(cfg, key, d[key])
    if d.get("daylight_window") is not None:
        start, end = d["daylight_window"]
        cfg.daylight_window = (float(start), float(end))
    cfg.__post_init__()
    return cfg


def run_config_to_dict(cfg: RunConfig) -> dict:
    return {
        "plant": {"ns": cfg.plant.ns, "alpha_isc": cfg.plant.alpha_isc},
        "initial_params": params_to_dict(cfg.initial_params),
        "x1_bounds": list(cfg.x1_bounds),
        "x2_bounds": bounds_to_dict(cfg.x2_bounds),
        "policy": cfg.policy.label,
        "method": cfg.method,
        "resample_s": cfg.resample_s,
        "seed": cfg.seed,
        "dark_v": cfg.dark_v,
        "dark_i": cfg.dark_i,
        "stage1_pso": {"n_particles": cfg.stage1_cfg.n_particles,
                       "n_iterations": cfg.stage1_cfg.n_iterations},
        "stage2_pso": {"n_particles": cfg.stage2_cfg.n_particles,
                       "n_iterations": cfg.stage2_cfg.n_iterations},
        "outer_iterations": cfg.outer_iterations,
        "tier_threshold": cfg.tier_threshold,
        "convergence_tol": cfg.convergence_tol,
        "nested": cfg.nested,
        "normalize_objective": cfg.normalize_objective,
        "daylight_window": list(cfg.daylight_window) if cfg.daylight_window else None,
    }


def load_run_config(path: str | Path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid config JSON: {exc}") from exc
    return run_config_from_dict(data)


def params_to_dict(p: PvParams) -> dict:
    return {"rs": p.rs, "rsh": p.rsh, "kd": p.kd, "iph0": p.iph0, "is0": p.is0}


def load_params_json(path: str | Path) -> PvParams:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if "params" in data:
        data = data["params"]
    return PvParams(**{k: float(data[k]) for k in PARAM_NAMES})


def save_params_json(path: str | Path, params: PvParams, rmse: float | None = None):
    payload: dict = {"params": params_to_dict(params)}
    if rmse is not None:
        payload["rmse_a"] = rmse
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def parse_bounds_csv(text: str) -> pso.Bounds:
    """Bounds file: five rows of ``name,lower,upper``."""
    rows = {}
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    start = 1 if lines and lines[0].lower().startswith("name") else 0
    for line_no, line in enumerate(lines[start:], start=start + 1):
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise ParseError(f"expected 'name,lower,upper', got {line!r}", line_no)
        name = parts[0]
        if name not in PARAM_NAMES:
            raise ParseError(f"unknown parameter {name!r}", line_no)
        try:
            rows[name] = (float(parts[1]), float(parts[2]))
        except ValueError as exc:
            raise ParseError(str(exc), line_no) from exc
    missing = [n for n in PARAM_NAMES if n not in rows]
    if missing:
        raise SchemaError(f"bounds file missing rows for {missing}")
    return bounds_from_dict(rows)


def load_bounds_csv(path: str | Path) -> pso.Bounds:
    return parse_bounds_csv(Path(path).read_text(encoding="utf-8"))


def dump_bounds_csv(b: pso.Bounds) -> str:
    lines = ["name,lower,upper"]
    for k, name in enumerate(PARAM_NAMES):
        lines.append(f"{name},{float(b.lower[k])!r},{float(b.upper[k])!r}")
    return "\n".join(lines) + "\n"
