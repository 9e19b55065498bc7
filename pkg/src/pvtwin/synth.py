"""Synthetic plant: irradiance scenarios, MPP/tracker sampling, ground truth.

Builds a 1-second irradiance trace (clear arc, cloudy arc with partial-shading
dips, or attenuated overcast arc), samples the electrical operating point
either exactly at the closed-form MPP or through a discrete perturb-and-observe
tracker walking the implicit I-V curve, applies multiplicative measurement
noise, and keeps a ground-truth sidecar for round-trip tests.

Parameters may drift linearly over the run and/or step at a fixed time, which
is how the update-policy studies get their staleness signal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import model
from .model import PlantConstants, PvParams
from .telemetry import Measurement

SCENARIOS = ("clear", "cloudy", "overcast")

TRACKER_STEP_V = 0.5  # volts per perturb-and-observe move at 1 Hz


@dataclass(frozen=True)
class TruthRow:
    """Ground truth for one emitted sample."""

    ts: float
    g: float
    t_c: float
    params: PvParams


@dataclass
class SynthResult:
    measurements: list[Measurement]
    truth: list[TruthRow]

    def truth_csv(self) -> str:
        lines = ["ts,g,t_c,rs,rsh,kd,iph0,is0"]
        for row in self.truth:
            p = row.params
            lines.append(",".join(repr(float(x)) for x in
                                  (row.ts, row.g, row.t_c, p.rs, p.rsh, p.kd,
                                   p.iph0, p.is0)))
        return "\n".join(lines) + "\n"


def _base_arc(tau: np.ndarray, g_peak: float) -> np.ndarray:
    # daylight slice of a solar arc; never fully dark inside the window
    return g_peak * np.sin(np.pi * (0.12 + 0.76 * tau)) ** 1.2


def _irradiance_trace(scenario: str, n: int, g_peak: float,
                      rng: np.random.Generator, dip_every_s: float,
                      dip_depth: tuple[float, float],
                      dip_width_s: tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
    """Returns (true G, undipped proxy arc) at 1-second resolution."""
    tau = np.linspace(0.0, 1.0, n)
    arc = _base_arc(tau, g_peak)
    if scenario == "clear":
        return arc.copy(), arc
    if scenario == "overcast":
        slow = 1.0 + 0.08 * np.sin(2.0 * np.pi * tau * 3.0 + rng.uniform(0, 2 * np.pi))
        return 0.22 * arc * slow, arc
    if scenario == "cloudy":
        factor = np.ones(n)
        n_dips = max(3, int(rng.poisson(n / dip_every_s)))
        t_idx = np.arange(n)
        for _ in range(n_dips):
            center = rng.uniform(0.05, 0.95) * n
            width = rng.uniform(*dip_width_s)
            depth = rng.uniform(*dip_depth)
            factor -= depth * np.exp(-((t_idx - center) / width) ** 2)
        np.clip(factor, 0.15, 1.0, out=factor)
        return arc * factor, arc
    raise ValueError(f"unknown scenario {scenario!r}")


def _temperature_trace(g: np.ndarray, g_peak: float, n: int) -> np.ndarray:
    tau = np.linspace(0.0, 1.0, n)
    return 18.0 + 13.0 * (g / g_peak) + 3.0 * tau


def _params_at(base: PvParams, end: PvParams | None, tau: float,
               step_at_s: float | None, params_step: PvParams | None,
               t_s: float) -> PvParams:
    if step_at_s is not None and params_step is not None and t_s >= step_at_s:
        return params_step
    if end is None:
        return base
    b, e = base.as_array(), end.as_array()
    return PvParams.from_array(b + (e - b) * tau)


def synth_plant(scenario: str, params: PvParams, plant: PlantConstants,
                duration_s: float, noise: float = 0.005, seed: int = 0,
                tracker: bool = False, tracker_step_v: float = TRACKER_STEP_V,
                gmeas_mode: str = "none", g_peak: float = 950.0,
                params_end: PvParams | None = None,
                step_at_s: float | None = None,
                params_step: PvParams | None = None,
                start_ts: float = 0.0,
                dip_every_s: float = 450.0,
                dip_depth: tuple[float, float] = (0.2, 0.65),
                dip_width_s: tuple[float, float] = (25.0, 140.0)) -> SynthResult:
    """Generate a 1-second telemetry stream plus its ground-truth sidecar.

    ``gmeas_mode``: ``none`` omits the pyranometer column, ``true`` reports
    the actual irradiance, ``proxy`` reports the undipped clear-sky arc (a
    sensor that never sees the passing clouds, which decorrelates it from the
    electrical output).
    """
    if scenario not in SCENARIOS:
        raise ValueError(f"scenario must be one of {SCENARIOS}")
    if gmeas_mode not in ("none", "true", "proxy"):
        raise ValueError(f"unknown gmeas_mode {gmeas_mode!r}")
    n = int(duration_s)
    rng = np.random.default_rng(seed)
    g_true, g_proxy = _irradiance_trace(scenario, n, g_peak, rng, dip_every_s,
                                        dip_depth, dip_width_s)
    t_c = _temperature_trace(g_true, g_peak, n)

    measurements: list[Measurement] = []
    truth: list[TruthRow] = []
    v_ref = None
    p_prev = None
    direction = 1.0
    for k in range(n):
        tau = k / max(n - 1, 1)
        t_s = float(k)
        pk = _params_at(params, params_end, tau, step_at_s, params_step, t_s)
        env_g = float(g_true[k])
        env_t = float(t_c[k])
        if env_g < model.DARK_IRRADIANCE:
            v, i = 0.0, 0.0
        elif tracker:
            env = model.EnvInputs(g=env_g, t_c=env_t)
            if v_ref is None:
                v_ref = 0.95 * model.mpp_point(pk, plant, env).v
            i_now = model.current_at_voltage(pk, plant, env, v_ref)
            p_now = v_ref * i_now
            if p_prev is not None and p_now < p_prev:
                direction = -direction
            v_ref = max(v_ref + direction * tracker_step_v, 0.0)
            p_prev = p_now
            v, i = v_ref, model.current_at_voltage(pk, plant, env, v_ref)
        else:
            pt = model.mpp_point(pk, plant, model.EnvInputs(g=env_g, t_c=env_t))
            v, i = pt.v, pt.i
        if noise > 0.0:
            v *= 1.0 + noise * rng.standard_normal()
            i *= 1.0 + noise * rng.standard_normal()
        v = max(v, 0.0)
        i = max(i, 0.0)
        g_meas = None
        if gmeas_mode == "true":
            g_meas = env_g
        elif gmeas_mode == "proxy":
            g_meas = float(g_proxy[k])
        measurements.append(Measurement(ts=start_ts + t_s, v_meas=v, i_meas=i,
                                        t_meas=env_t, g_meas=g_meas))
        truth.append(TruthRow(ts=start_ts + t_s, g=env_g, t_c=env_t, params=pk))
    return SynthResult(measurements=measurements, truth=truth)
