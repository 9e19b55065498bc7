"""Two-stage co-optimization of equivalent irradiance and model parameters.

Alternates, against one measured sample:

  stage 1  estimate the equivalent irradiance with the incumbent parameters
  stage 2  swarm-fit a parameter subset at that irradiance, minimizing
           ``|i_meas - i_pred| + |v_meas - v_pred|``

Parameter freeing is tiered: the series and shunt resistances move first;
the three diode/panel constants are only freed when the post-fit relative
errors stay above the escalation threshold. The loop exits early once the
stage-2 objective drops below the convergence tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import model, pso
from .errors import DegenerateInput
from .irradiance import (DEFAULT_G_BOUNDS, DEFAULT_STAGE1_CFG, INFEASIBLE_PENALTY,
                         estimate_equivalent_irradiance)
from .model import OperatingPoint, PlantConstants, PvParams
from .telemetry import DARK_I_FLOOR, DARK_V_FLOOR, Measurement

# Feasible box for the five parameters (editable via the bounds file); order
# rs, rsh, kd, iph0, is0.
DEFAULT_X2_BOUNDS = pso.Bounds(
    lower=np.array([1e-3, 10.0, 0.5, 0.1, 1e-12]),
    upper=np.array([10.0, 5000.0, 2.0, 20.0, 1e-6]),
)

# Ranges reported for field-fitted parameters in the literature; excursions
# past these are worth flagging but are not errors.
SANITY_RANGES = {"rs": (0.5, 9.0), "rsh": (500.0, 4000.0), "iph0": (0.8, 5.0)}

TIER1_FREE = (0, 1)  # rs, rsh
LOG_DIMS = (4,)  # is0 spans six decades; searched in log10 space

DEFAULT_STAGE2_CFG = pso.PsoConfig(n_particles=40, n_iterations=60)


@dataclass
class CoOptConfig:
    x1_bounds: tuple[float, float] = DEFAULT_G_BOUNDS
    x2_bounds: pso.Bounds = field(default_factory=lambda: DEFAULT_X2_BOUNDS)
    outer_iterations: int = 5
    stage1_cfg: pso.PsoConfig = field(default_factory=lambda: replace(DEFAULT_STAGE1_CFG))
    stage2_cfg: pso.PsoConfig = field(default_factory=lambda: replace(DEFAULT_STAGE2_CFG))
    tier_threshold: float = 0.005
    convergence_tol: float = 1e-3
    nested: bool = False
    normalize_objective: bool = False
    dark_v: float = DARK_V_FLOOR
    dark_i: float = DARK_I_FLOOR


@dataclass(frozen=True)
class CoOptResult:
    g_equiv: float
    params: PvParams
    f2_value: float
    tier_used: int
    outer_iters_run: int
    predicted: OperatingPoint
    status: str  # converged | max_iters


def _to_search(x2: np.ndarray) -> np.ndarray:
    y = np.array(x2, dtype=float)
    y[..., LOG_DIMS] = np.log10(y[..., LOG_DIMS])
    return y


def _from_search(y: np.ndarray) -> np.ndarray:
    x = np.array(y, dtype=float)
    x[..., LOG_DIMS] = 10.0 ** x[..., LOG_DIMS]
    return x


def _search_bounds(bounds: pso.Bounds) -> pso.Bounds:
    return pso.Bounds(_to_search(bounds.lower), _to_search(bounds.upper))


def stage2_objective(x2: PvParams, g_equiv: float, plant: PlantConstants,
                     meas: Measurement, normalize: bool = False) -> float:
    """Mixed-unit prediction error ``|di| + |dv|`` for one parameter set.

    A degenerate model evaluation returns the infeasibility penalty instead
    of raising.
    """
    vals = _f2_batch(np.asarray(x2.as_array())[None, :], g_equiv, plant, meas,
                     normalize=normalize)
    return float(vals[0])


def _f2_batch(x2_rows: np.ndarray, g_equiv, plant: PlantConstants,
              meas: Measurement, normalize: bool = False) -> np.ndarray:
    rs, rsh, kd, iph0, is0 = (x2_rows[:, j] for j in range(5))
    v, i = model.mpp_arrays(rs, rsh, kd, iph0, is0, g_equiv, meas.t_meas, plant)
    if normalize:
        f2 = (np.abs(meas.i_meas - i) / max(meas.i_meas, DARK_I_FLOOR)
              + np.abs(meas.v_meas - v) / max(meas.v_meas, DARK_V_FLOOR))
    else:
        f2 = np.abs(meas.i_meas - i) + np.abs(meas.v_meas - v)
    return np.where(np.isfinite(f2), f2, INFEASIBLE_PENALTY)


def _rel_errors(x2: np.ndarray, g_equiv: float, plant: PlantConstants,
                meas: Measurement, dark_v: float, dark_i: float) -> tuple[float, float]:
    rs, rsh, kd, iph0, is0 = x2
    v, i = model.mpp_arrays(rs, rsh, kd, iph0, is0, g_equiv, meas.t_meas, plant)
    if not (np.isfinite(v) and np.isfinite(i)):
        return float("inf"), float("inf")
    err_i = abs(meas.i_meas - float(i)) / max(meas.i_meas, dark_i)
    err_v = abs(meas.v_meas - float(v)) / max(meas.v_meas, dark_v)
    return err_i, err_v


def co_optimize(meas: Measurement, warm_start: PvParams, plant: PlantConstants,
                cfg: CoOptConfig | None = None, seed: int | None = None) -> CoOptResult:
    """Co-optimize (equivalent irradiance, parameters) against one sample.

    Runs the alternation first with only the resistances freed (the three
    diode/panel constants stay pinned at the warm start); the five-parameter
    tier is entered only if relative errors above the escalation threshold
    remain after that loop. Every stage-2 swarm is seeded with the warm start
    and the incumbent best, so the result can never be worse than the warm
    start evaluated at its own stage-1 irradiance. The warm start is clipped
    to the parameter box on entry.
    """
    cfg = cfg or CoOptConfig()
    if meas.is_dark(cfg.dark_v, cfg.dark_i):
        raise DegenerateInput(
            f"sample at ts={meas.ts} is dark (v={meas.v_meas}, i={meas.i_meas})")

    ss = np.random.SeedSequence(seed if seed is not None else 0)
    stage_seeds = iter(int(s.generate_state(1)[0]) for s in
                       ss.spawn(4 * cfg.outer_iterations + 8))

    warm = cfg.x2_bounds.clip(warm_start.as_array())
    state = _CoOptState(warm=warm, incumbent=warm.copy())

    outer_run, converged = _alternate(meas, plant, cfg, state, tier=1,
                                      seeds=stage_seeds)
    err_i, err_v = _rel_errors(state.best_x2, state.best_g, plant, meas,
                               cfg.dark_v, cfg.dark_i)
    if not converged and max(err_i, err_v) > cfg.tier_threshold:
        extra, converged = _alternate(meas, plant, cfg, state, tier=2,
                                      seeds=stage_seeds)
        outer_run += extra

    params = PvParams.from_array(state.best_x2)
    env = model.EnvInputs(g=max(state.best_g, 0.0), t_c=meas.t_meas)
    try:
        predicted = model.mpp_point(params, plant, env)
    except model.DegenerateError:
        predicted = model.ZERO_POINT
    return CoOptResult(g_equiv=state.best_g, params=params, f2_value=state.best_f2,
                       tier_used=state.best_tier, outer_iters_run=outer_run,
                       predicted=predicted,
                       status="converged" if converged else "max_iters")


@dataclass
class _CoOptState:
    warm: np.ndarray
    incumbent: np.ndarray
    best_f2: float = float("inf")
    best_x2: np.ndarray | None = None
    best_g: float = float("nan")
    best_tier: int = 1

    def consider(self, x2_row: np.ndarray, g: float, f2: float, tier: int):
        if f2 < self.best_f2:
            self.best_f2 = f2
            self.best_x2 = np.array(x2_row)
            self.best_g = g
            self.best_tier = tier


def _alternate(meas: Measurement, plant: PlantConstants, cfg: CoOptConfig,
               state: _CoOptState, tier: int, seeds) -> tuple[int, bool]:
    """One tier's alternation loop; returns (outer iterations run, converged)."""
    free = TIER1_FREE if tier == 1 else tuple(range(5))
    outer_run = 0
    for _ in range(cfg.outer_iterations):
        outer_run += 1
        inc_params = PvParams.from_array(state.incumbent)
        est = estimate_equivalent_irradiance(
            meas, inc_params, plant, bounds=cfg.x1_bounds, pso_cfg=cfg.stage1_cfg,
            seed=next(seeds), dark_v=cfg.dark_v, dark_i=cfg.dark_i)
        g = est.g_equiv

        # baselines at the fresh irradiance keep their producing tier
        for row, row_tier in ((state.incumbent, state.best_tier), (state.warm, 1)):
            f2 = float(_f2_batch(row[None, :], g, plant, meas,
                                 cfg.normalize_objective)[0])
            state.consider(row, g, f2, row_tier)
        # tier 1 pins kd/iph0/is0 at the warm start; tier 2 frees everything
        template = state.warm if tier == 1 else state.incumbent
        x2_fit, f2_fit = _fit_subset(
            meas, plant, cfg, g, free=free, template=template,
            injections=[state.incumbent, state.warm], seed=next(seeds))
        state.consider(x2_fit, g, f2_fit, tier)

        state.incumbent = state.best_x2.copy()
        if state.best_f2 <= cfg.convergence_tol:
            return outer_run, True
    return outer_run, False


def _fit_subset(meas: Measurement, plant: PlantConstants, cfg: CoOptConfig,
                g_equiv: float, free: tuple[int, ...], template: np.ndarray,
                injections: list[np.ndarray], seed: int) -> tuple[np.ndarray, float]:
    """Swarm-fit the ``free`` parameter dimensions, others pinned to ``template``."""
    free = list(free)
    sb = _search_bounds(cfg.x2_bounds)
    sub_bounds = pso.Bounds(sb.lower[free], sb.upper[free])

    def expand(x_free: np.ndarray) -> np.ndarray:
        # pinned columns stay in natural units, bit-exact
        rows = np.tile(template, (len(x_free), 1))
        for col, dim in enumerate(free):
            rows[:, dim] = 10.0 ** x_free[:, col] if dim in LOG_DIMS else x_free[:, col]
        return rows

    if cfg.nested:
        stage1_seed = seed + 1

        def objective(x_free: np.ndarray) -> np.ndarray:
            rows = expand(x_free)
            out = np.empty(len(rows))
            for k, row in enumerate(rows):
                est = estimate_equivalent_irradiance(
                    meas, PvParams.from_array(row), plant, bounds=cfg.x1_bounds,
                    pso_cfg=cfg.stage1_cfg, seed=stage1_seed,
                    dark_v=cfg.dark_v, dark_i=cfg.dark_i)
                out[k] = _f2_batch(row[None, :], est.g_equiv, plant, meas,
                                   cfg.normalize_objective)[0]
            return out
    else:
        def objective(x_free: np.ndarray) -> np.ndarray:
            return _f2_batch(expand(x_free), g_equiv, plant, meas,
                             cfg.normalize_objective)

    init = np.array([_to_search(row)[free] for row in injections])
    result = pso.minimize(objective, sub_bounds, cfg.stage2_cfg, seed=seed, init=init)
    full = expand(result.x[None, :])[0]
    return full, float(result.fun)
