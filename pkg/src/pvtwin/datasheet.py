"""Offline fit of the five model parameters to manufacturer V-I curve points.

Minimizes the current RMSE between the implicit-curve prediction and the
supplied points. Curve points carry their own irradiance and temperature, so
multi-condition datasheets fit in one call.

The swarm handles the global search (several independent sub-swarms, the
first seeded with curve-feature heuristics); a damped Gauss-Newton polish
then drives the winner to the accuracy datasheet round trips need. ``is0``
is searched in log10 space.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import model, pso
from .coopt import DEFAULT_X2_BOUNDS, _from_search, _search_bounds, _to_search
from .errors import InsufficientData, ParseError, SchemaError
from .model import PlantConstants, PvParams

MIN_POINTS = 5

DEFAULT_FIT_CFG = pso.PsoConfig(n_particles=120, n_iterations=800,
                                c1=1.49445, c2=1.49445, w=0.7298,
                                early_stop_tol=1e-14, early_stop_span=120)
DEFAULT_N_STARTS = 5


@dataclass(frozen=True)
class CurvePoint:
    """One datasheet V-I point with its curve conditions."""

    v: float
    i: float
    g: float = 1000.0
    t_c: float = 25.0

    def __post_init__(self):
        if self.v < 0.0 or self.i < 0.0:
            raise ParseError(f"curve point ({self.v}, {self.i}) must be nonnegative")


def parse_curve_csv(text: str) -> list[CurvePoint]:
    """Parse the datasheet CSV schema ``v,i,g,t_c``."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise SchemaError("empty datasheet file") from None
    for name in ("v", "i", "g", "t_c"):
        if name not in header:
            raise SchemaError(f"missing datasheet column {name!r}")
    idx = {name: header.index(name) for name in ("v", "i", "g", "t_c")}
    points = []
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            points.append(CurvePoint(v=float(row[idx["v"]]), i=float(row[idx["i"]]),
                                     g=float(row[idx["g"]]), t_c=float(row[idx["t_c"]])))
        except (ValueError, IndexError) as exc:
            raise ParseError(str(exc), line_no) from exc
    return points


def load_curve_csv(path: str | Path) -> list[CurvePoint]:
    return parse_curve_csv(Path(path).read_text(encoding="utf-8"))


def _predict_batch(rows: np.ndarray, v: np.ndarray, g: np.ndarray, t: np.ndarray,
                   plant: PlantConstants) -> np.ndarray:
    """Implicit-curve currents, shape (n_rows, n_points)."""
    rs, rsh, kd, iph0, is0 = (rows[:, j][:, None] for j in range(5))
    return model.current_arrays(rs, rsh, kd, iph0, is0, g[None, :], t[None, :],
                                v[None, :], plant)


def _rmse_batch(rows: np.ndarray, v, i, g, t, plant) -> np.ndarray:
    pred = _predict_batch(rows, v, g, t, plant)
    err = pred - i[None, :]
    out = np.sqrt(np.mean(err * err, axis=1))
    return np.where(np.isfinite(out), out, 1e12)


def _feature_seeds(v, i, g, t, plant: PlantConstants,
                   bounds: pso.Bounds) -> np.ndarray:
    """Heuristic starting points from the curve shape.

    Short-circuit current gives the photocurrent scale, the slopes at the two
    curve ends give the resistances, and the open-circuit voltage pins the
    saturation current for a grid of ideality coefficients.
    """
    order = np.argsort(v)
    v_s, i_s_pts = v[order], i[order]
    g_ref = float(np.max(g))
    isc = float(i_s_pts[0])
    voc = float(v_s[-1]) if i_s_pts[-1] < 0.05 * max(isc, 1e-12) else float(v_s[-1]) * 1.05

    def slope(k0, k1):
        dv = v_s[k1] - v_s[k0]
        di = i_s_pts[k1] - i_s_pts[k0]
        return abs(dv / di) if di != 0 else None

    n = len(v_s)
    rs_est = slope(max(n - 4, 0), n - 1) or 0.1
    rsh_est = slope(0, min(3, n - 1)) or 1000.0
    seeds = []
    vth = plant.k_boltzmann * plant.t_stc / plant.q_electron
    for kd in (0.9, 1.0, 1.1, 1.2, 1.3):
        a = kd * vth * plant.ns
        iph0_est = isc / max(g_ref, 1.0)
        is0_est = isc / max(np.expm1(min(voc / a, 500.0)), 1.0)
        seeds.append([rs_est, rsh_est, kd, iph0_est, is0_est])
    seeds = np.array(seeds)
    return np.clip(seeds, bounds.lower, bounds.upper)


def _gauss_newton(x0: np.ndarray, v, i, g, t, plant, bounds: pso.Bounds,
                  iters: int = 80) -> tuple[np.ndarray, float]:
    """Damped Gauss-Newton on the per-point residuals, in search space."""
    sb = _search_bounds(bounds)
    x = np.clip(_to_search(x0), sb.lower, sb.upper)

    def residuals(xs: np.ndarray) -> np.ndarray:
        row = _from_search(xs[None, :])
        return _predict_batch(row, v, g, t, plant)[0] - i

    r = residuals(x)
    cost = float(r @ r)
    lam = 1e-6
    scale = np.maximum(np.abs(x), 1e-3 * sb.span)
    for _ in range(iters):
        J = np.empty((len(r), 5))
        for j in range(5):
            h = 1e-6 * scale[j]
            xp = x.copy(); xp[j] = min(x[j] + h, sb.upper[j])
            xm = x.copy(); xm[j] = max(x[j] - h, sb.lower[j])
            J[:, j] = (residuals(xp) - residuals(xm)) / (xp[j] - xm[j])
        grad = J.T @ r
        hess = J.T @ J
        moved = False
        for _damp in range(25):
            try:
                step = np.linalg.solve(
                    hess + lam * np.diag(np.maximum(np.diag(hess), 1e-14)), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            x_new = np.clip(x + step, sb.lower, sb.upper)
            r_new = residuals(x_new)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new < cost * (1.0 - 1e-14):
                x, r, cost = x_new, r_new, cost_new
                lam = max(lam / 7.0, 1e-13)
                moved = True
                break
            lam *= 10.0
        if not moved:
            break
    return _from_search(x[None, :])[0], float(np.sqrt(cost / len(r)))


def fit_datasheet(points: list[CurvePoint], plant: PlantConstants,
                  bounds: pso.Bounds | None = None,
                  cfg: pso.PsoConfig | None = None,
                  seed: int | None = None,
                  n_starts: int = DEFAULT_N_STARTS,
                  polish: bool = True) -> tuple[PvParams, float]:
    """Fit the five parameters to curve points by current-RMSE minimization.

    Returns the fitted parameters and the achieved RMSE (A). Requires at
    least five points.
    """
    if len(points) < MIN_POINTS:
        raise InsufficientData(f"need >= {MIN_POINTS} curve points, got {len(points)}")
    bounds = bounds or DEFAULT_X2_BOUNDS
    cfg = cfg or replace(DEFAULT_FIT_CFG)

    v = np.array([p.v for p in points])
    i = np.array([p.i for p in points])
    g = np.array([p.g for p in points])
    t = np.array([p.t_c for p in points])

    sb = _search_bounds(bounds)
    seeds_nat = _feature_seeds(v, i, g, t, plant, bounds)

    def objective(x_search: np.ndarray) -> np.ndarray:
        return _rmse_batch(_from_search(x_search), v, i, g, t, plant)

    ss = np.random.SeedSequence(seed if seed is not None else 0)
    best_x, best_rmse = None, float("inf")
    for k, child in enumerate(ss.spawn(max(n_starts, 1))):
        init = _to_search(seeds_nat) if k == 0 else None
        res = pso.minimize(objective, sb, cfg, seed=int(child.generate_state(1)[0]),
                           init=init)
        x_nat = _from_search(res.x[None, :])[0]
        rmse = float(res.fun)
        if polish:
            x_nat, rmse = _gauss_newton(x_nat, v, i, g, t, plant, bounds)
        if rmse < best_rmse:
            best_x, best_rmse = x_nat, rmse

    return PvParams.from_array(best_x), best_rmse


def predict_curve(params: PvParams, points: list[CurvePoint],
                  plant: PlantConstants) -> np.ndarray:
    """Model currents at the curve points (diagnostic for overlay checks)."""
    v = np.array([p.v for p in points])
    g = np.array([p.g for p in points])
    t = np.array([p.t_c for p in points])
    return _predict_batch(params.as_array()[None, :], v, g, t, plant)[0]
