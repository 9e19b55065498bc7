"""Stage-1 estimation of equivalent irradiance from one telemetry sample.

Given a candidate parameter set, finds the irradiance that makes the model's
KCL equation consistent with the measured (voltage, current, temperature) by
minimizing the absolute log-form residual with a small particle swarm. The
pyranometer reading, when present, plays no role here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import model, pso
from .model import PlantConstants, PvParams
from .telemetry import DARK_I_FLOOR, DARK_V_FLOOR, Measurement

INFEASIBLE_PENALTY = 1e12

DEFAULT_G_BOUNDS = (0.0, 1000.0)

# 1-D search over a unimodal |f1|; a small swarm is plenty.
DEFAULT_STAGE1_CFG = pso.PsoConfig(n_particles=20, n_iterations=50)


@dataclass(frozen=True)
class IrradianceEstimate:
    """Equivalent irradiance (W/m^2), |f1| residual at the optimum (V) and a
    ``converged`` / ``degenerate`` / ``infeasible`` status flag."""

    g_equiv: float
    residual: float
    status: str


def stage1_objective(params: PvParams, plant: PlantConstants, meas: Measurement):
    """Batched |f1(g)| objective; log-domain violations get a large penalty."""

    def objective(x: np.ndarray) -> np.ndarray:
        g = x[:, 0]
        f1 = model.kcl_arrays(params.rs, params.rsh, params.kd, params.iph0,
                              params.is0, g, meas.t_meas, meas.v_meas,
                              meas.i_meas, plant)
        return np.where(np.isfinite(f1), np.abs(f1), INFEASIBLE_PENALTY)

    return objective


def kcl_root(params: PvParams, plant: PlantConstants, meas: Measurement) -> float:
    """Closed-form irradiance making the KCL residual vanish at the sample.

    Rearranging the log-form residual for the photocurrent gives the root
    directly; it seeds the swarm so the search never has to discover the
    (often narrow) feasible irradiance window on its own.
    """
    _, a, i_s, _ = model.derived_arrays(params.rs, params.rsh, params.kd,
                                        params.iph0, params.is0, 1.0,
                                        meas.t_meas, plant)
    a, i_s = float(a), float(i_s)
    u = meas.v_meas + meas.i_meas * params.rs
    with np.errstate(over="ignore"):
        need = meas.i_meas + u / params.rsh + i_s * np.expm1(min(u / a, 700.0))
    corr = 1.0 + (meas.t_meas - 25.0) * plant.alpha_isc
    if corr <= 0.0 or not np.isfinite(need):
        return float("inf")
    return float(need / (params.iph0 * corr))


def estimate_equivalent_irradiance(meas: Measurement, params: PvParams,
                                   plant: PlantConstants,
                                   bounds: tuple[float, float] = DEFAULT_G_BOUNDS,
                                   pso_cfg: pso.PsoConfig | None = None,
                                   seed: int | None = None,
                                   dark_v: float = DARK_V_FLOOR,
                                   dark_i: float = DARK_I_FLOOR) -> IrradianceEstimate:
    """Estimate the equivalent irradiance for one sample.

    Always returns: dark samples come back ``degenerate`` pinned at the lower
    bound, and samples whose measured current cannot be reached anywhere in
    ``bounds`` come back ``infeasible`` at the best point found.
    """
    lo, hi = float(bounds[0]), float(bounds[1])
    if meas.is_dark(dark_v, dark_i):
        return IrradianceEstimate(g_equiv=lo, residual=float("nan"), status="degenerate")

    cfg = pso_cfg or DEFAULT_STAGE1_CFG
    box = pso.Bounds(np.array([lo]), np.array([hi]))
    root = kcl_root(params, plant, meas)
    init = np.array([[min(max(root, lo), hi)]]) if np.isfinite(root) else None
    result = pso.minimize(stage1_objective(params, plant, meas), box, cfg,
                          seed=seed, init=init)

    g_equiv = float(result.x[0])
    residual = float(result.fun)
    if residual >= INFEASIBLE_PENALTY / 2:
        return IrradianceEstimate(g_equiv=g_equiv, residual=float("inf"),
                                  status="infeasible")
    # a clear residual at the optimum means the KCL root lies outside bounds
    q = model.derived_arrays(params.rs, params.rsh, params.kd, params.iph0,
                             params.is0, max(g_equiv, 1.0), meas.t_meas, plant)
    a = float(q[1])
    status = "converged" if residual <= 1e-3 * max(1.0, a) else "infeasible"
    return IrradianceEstimate(g_equiv=g_equiv, residual=residual, status=status)
