"""Generic bounded particle-swarm minimizer.

One velocity/position rule: ``v <- w*v + c1*r1*(pbest - x) + c2*r2*(gbest - x)``
with fresh uniform r1, r2 per particle per dimension, velocity clamped to a
fraction of each dimension's range, and positions clamped to the box (the
velocity component that hit a wall is zeroed). Used by both optimization
stages and the datasheet fitter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass
class PsoConfig:
    """Swarm size, iteration budget and coefficients.

    The coefficient defaults (c1 = c2 = 0.4, w = 0.5) are the values used by
    the two estimation stages; benchmark-style problems usually want the
    classic constriction values instead.
    """

    n_particles: int = 40
    n_iterations: int = 100
    c1: float = 0.4
    c2: float = 0.4
    w: float = 0.5
    v_max_fraction: float = 0.2
    seed: int | None = None
    early_stop: bool = True
    early_stop_tol: float = 1e-10
    early_stop_span: int = 20

    def validate(self):
        if self.n_particles < 2:
            raise ConfigError("n_particles must be >= 2")
        if self.n_iterations < 1:
            raise ConfigError("n_iterations must be >= 1")
        if self.c1 < 0 or self.c2 < 0:
            raise ConfigError("c1 and c2 must be >= 0")
        if not 0.0 < self.w < 1.0:
            raise ConfigError("inertia weight must satisfy 0 < w < 1")
        if self.v_max_fraction <= 0:
            raise ConfigError("v_max_fraction must be positive")


@dataclass
class Bounds:
    """Per-dimension box ``lower[d] < upper[d]``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ConfigError("lower and upper must be 1-D and the same length")
        if not np.all(self.lower < self.upper):
            raise ConfigError("every lower bound must be below its upper bound")

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


@dataclass
class PsoResult:
    x: np.ndarray
    fun: float
    trace: np.ndarray  # best-ever objective value after each iteration
    n_iterations: int = 0
    stopped_early: bool = False


def minimize(objective, bounds: Bounds, cfg: PsoConfig, seed: int | None = None,
             init: np.ndarray | None = None) -> PsoResult:
    """Minimize a batched objective over a box.

    ``objective`` receives the full particle matrix, shape
    ``(n_particles, dim)``, and must return one finite value per particle
    (use a large penalty for infeasible evaluations). ``init`` optionally
    injects starting positions (for example a warm-start parameter set); the
    remaining particles are drawn uniformly in the box.

    ``seed`` overrides ``cfg.seed``; identical seeds reproduce the run
    exactly.
    """
    cfg.validate()
    if not callable(objective):
        raise ConfigError("objective must be callable")

    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    n, d = cfg.n_particles, bounds.dim

    x = bounds.lower + rng.random((n, d)) * bounds.span
    if init is not None:
        init = np.atleast_2d(np.asarray(init, dtype=float))
        if init.shape[1] != d:
            raise ConfigError(f"init has dimension {init.shape[1]}, expected {d}")
        k = min(len(init), n)
        x[:k] = bounds.clip(init[:k])

    v = np.zeros((n, d))
    v_max = cfg.v_max_fraction * bounds.span

    fx = np.asarray(objective(x), dtype=float)
    if fx.shape != (n,):
        raise ConfigError(f"objective returned shape {fx.shape}, expected ({n},)")
    p_best = x.copy()
    f_best = fx.copy()
    g_idx = int(np.argmin(f_best))
    g_best = p_best[g_idx].copy()
    g_val = float(f_best[g_idx])

    trace = [g_val]
    stall = 0
    it = 0
    stopped_early = False
    for it in range(1, cfg.n_iterations + 1):
        r1 = rng.random((n, d))
        r2 = rng.random((n, d))
        v = cfg.w * v + cfg.c1 * r1 * (p_best - x) + cfg.c2 * r2 * (g_best - x)
        v = np.clip(v, -v_max, v_max)
        x = x + v
        hit = (x < bounds.lower) | (x > bounds.upper)
        x = bounds.clip(x)
        v[hit] = 0.0

        fx = np.asarray(objective(x), dtype=float)
        improved = fx < f_best
        p_best[improved] = x[improved]
        f_best[improved] = fx[improved]
        g_idx = int(np.argmin(f_best))
        if f_best[g_idx] < g_val:
            gain = g_val - float(f_best[g_idx])
            g_best = p_best[g_idx].copy()
            g_val = float(f_best[g_idx])
            stall = 0 if gain > cfg.early_stop_tol else stall + 1
        else:
            stall += 1
        trace.append(g_val)
        if cfg.early_stop and stall >= cfg.early_stop_span:
            stopped_early = True
            break

    return PsoResult(x=g_best, fun=g_val, trace=np.asarray(trace),
                     n_iterations=it, stopped_early=stopped_early)
