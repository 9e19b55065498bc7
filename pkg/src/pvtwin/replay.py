"""Stream replay of the four prediction methods, plus report emission.

Per resampled daylight step:

  base      fixed initial parameters, pyranometer irradiance as model input
  method1   fixed initial parameters, stage-1 equivalent irradiance
  method2   parameters refit at the measured irradiance when the policy fires
  proposed  two-stage co-optimization, gated by the update policy; steps
            without an update still get a fresh stage-1 irradiance

The loop is sequential (the incumbent parameter set is a serial dependency);
everything else is pure, and per-step randomness is derived from the run seed
and the step index so replays are byte-reproducible.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import model
from .config import RunConfig
from .coopt import CoOptConfig, _fit_subset, co_optimize
from .errors import ConfigError, EmptyInput, IoError
from .irradiance import estimate_equivalent_irradiance
from .metrics import (EVENT_TRIGGER, SWEEP_INTERVALS, ErrorReport, UpdateEvent,
                      UpdatePolicy, compute_error_report, relative_errors,
                      should_update)
from .model import PARAM_NAMES, OperatingPoint, PvParams
from .telemetry import Measurement, resample


@dataclass(frozen=True)
class ReplayRecord:
    """One row per resampled step."""

    ts: float
    v_meas: float
    i_meas: float
    t_meas: float
    g_meas: float | None
    p_meas: float
    g_equiv: float | None
    params: PvParams
    v_pred: float
    i_pred: float
    p_pred: float
    err_i: float
    err_v: float
    err_p: float
    updated: bool
    dark: bool


@dataclass
class ReplayResult:
    records: list[ReplayRecord]
    events: list[UpdateEvent]
    report: ErrorReport | None
    method: str
    policy_label: str

    @property
    def update_count(self) -> int:
        return len(self.events)


def _predict(params: PvParams, g: float, t_c: float, plant) -> OperatingPoint:
    if g is None or g < model.DARK_IRRADIANCE:
        return model.ZERO_POINT
    try:
        return model.mpp_point(params, plant, model.EnvInputs(g=g, t_c=t_c))
    except model.DegenerateError:
        return model.ZERO_POINT


def _fit_all_at_g(meas: Measurement, g: float, warm: PvParams, cfg: CoOptConfig,
                  plant, seed: int) -> PvParams:
    """Method-2 refit: free all five parameters at a fixed irradiance."""
    x2, _ = _fit_subset(meas, plant, cfg, g, free=tuple(range(5)),
                        template=cfg.x2_bounds.clip(warm.as_array()),
                        injections=[cfg.x2_bounds.clip(warm.as_array())], seed=seed)
    return PvParams.from_array(x2)


def replay(cfg: RunConfig, telemetry: list[Measurement]) -> ReplayResult:
    """Replay one method over a resampled telemetry stream."""
    method = cfg.method
    if method in ("base", "method2"):
        missing = [m for m in telemetry if m.g_meas is None]
        if missing:
            raise ConfigError(
                f"method {method!r} needs g_meas on every row; "
                f"{len(missing)} rows lack it")

    stream = resample(telemetry, cfg.resample_s)
    coopt_cfg = cfg.coopt_config()
    params = cfg.x2_bounds.clip(cfg.initial_params.as_array())
    params = PvParams.from_array(params)
    last_update = float("-inf")

    records: list[ReplayRecord] = []
    events: list[UpdateEvent] = []
    for step, meas in enumerate(stream):
        in_window = (cfg.daylight_window is None
                     or cfg.daylight_window[0] <= meas.ts <= cfg.daylight_window[1])
        dark = meas.is_dark(cfg.dark_v, cfg.dark_i) or not in_window
        if dark:
            records.append(ReplayRecord(
                ts=meas.ts, v_meas=meas.v_meas, i_meas=meas.i_meas,
                t_meas=meas.t_meas, g_meas=meas.g_meas, p_meas=meas.p_meas,
                g_equiv=None, params=params, v_pred=0.0, i_pred=0.0, p_pred=0.0,
                err_i=float("nan"), err_v=float("nan"), err_p=float("nan"),
                updated=False, dark=True))
            continue

        seed_est = int(np.random.SeedSequence((cfg.seed, step, 1)).generate_state(1)[0])
        seed_fit = int(np.random.SeedSequence((cfg.seed, step, 2)).generate_state(1)[0])

        g_equiv: float | None = None
        updated = False
        params_used = params
        if method == "base":
            g_input = meas.g_meas
            predicted = _predict(params, g_input, meas.t_meas, cfg.plant)
        elif method == "method1":
            est = estimate_equivalent_irradiance(
                meas, params, cfg.plant, bounds=cfg.x1_bounds,
                pso_cfg=cfg.stage1_cfg, seed=seed_est,
                dark_v=cfg.dark_v, dark_i=cfg.dark_i)
            g_equiv = est.g_equiv
            predicted = _predict(params, g_equiv, meas.t_meas, cfg.plant)
        elif method == "method2":
            predicted = _predict(params, meas.g_meas, meas.t_meas, cfg.plant)
            if should_update(cfg.policy, meas.ts, last_update, meas, predicted):
                err_i, err_v = relative_errors(meas, predicted, cfg.dark_v, cfg.dark_i)
                prev = params
                params = _fit_all_at_g(meas, meas.g_meas, prev, coopt_cfg,
                                       cfg.plant, seed_fit)
                events.append(UpdateEvent(ts=meas.ts, prev_params=prev,
                                          new_params=params, trigger_error_i=err_i,
                                          trigger_error_v=err_v))
                last_update = meas.ts
                updated = True
        else:  # proposed
            est = estimate_equivalent_irradiance(
                meas, params, cfg.plant, bounds=cfg.x1_bounds,
                pso_cfg=cfg.stage1_cfg, seed=seed_est,
                dark_v=cfg.dark_v, dark_i=cfg.dark_i)
            g_equiv = est.g_equiv
            predicted = _predict(params, g_equiv, meas.t_meas, cfg.plant)
            if should_update(cfg.policy, meas.ts, last_update, meas, predicted):
                err_i, err_v = relative_errors(meas, predicted, cfg.dark_v, cfg.dark_i)
                prev = params
                result = co_optimize(meas, params, cfg.plant, coopt_cfg, seed=seed_fit)
                params = result.params
                events.append(UpdateEvent(ts=meas.ts, prev_params=prev,
                                          new_params=params, trigger_error_i=err_i,
                                          trigger_error_v=err_v))
                last_update = meas.ts
                updated = True

        # the record keeps the operational prediction: the one produced by the
        # parameter set in force when the sample arrived. A refit triggered at
        # this step takes effect from the next step on.
        err_i, err_v = relative_errors(meas, predicted, cfg.dark_v, cfg.dark_i)
        err_p = abs(meas.p_meas - predicted.p) / max(meas.p_meas, cfg.dark_v * cfg.dark_i)
        records.append(ReplayRecord(
            ts=meas.ts, v_meas=meas.v_meas, i_meas=meas.i_meas, t_meas=meas.t_meas,
            g_meas=meas.g_meas, p_meas=meas.p_meas, g_equiv=g_equiv,
            params=params_used, v_pred=predicted.v, i_pred=predicted.i,
            p_pred=predicted.p, err_i=err_i, err_v=err_v, err_p=err_p,
            updated=updated, dark=False))

    daylight = [(r, m) for r, m in zip(records, stream) if not r.dark]
    report = None
    if daylight:
        pairs = [(m, OperatingPoint(r.v_pred, r.i_pred, r.p_pred)) for r, m in daylight]
        report = compute_error_report(pairs)
    return ReplayResult(records=records, events=events, report=report,
                        method=method, policy_label=cfg.policy.label)


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------

RECORD_COLUMNS = ("ts", "v_meas", "i_meas", "t_meas", "g_meas", "p_meas", "g_equiv",
                  *PARAM_NAMES, "v_pred", "i_pred", "p_pred", "err_i", "err_v",
                  "err_p", "updated", "dark")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(float(x))
    return str(x)


def records_csv(records: list[ReplayRecord]) -> str:
    lines = [",".join(RECORD_COLUMNS)]
    for r in records:
        p = r.params
        lines.append(",".join(_fmt(x) for x in (
            r.ts, r.v_meas, r.i_meas, r.t_meas, r.g_meas, r.p_meas, r.g_equiv,
            p.rs, p.rsh, p.kd, p.iph0, p.is0, r.v_pred, r.i_pred, r.p_pred,
            r.err_i, r.err_v, r.err_p, r.updated, r.dark)))
    return "\n".join(lines) + "\n"


def events_csv(events: list[UpdateEvent]) -> str:
    header = ["ts", "trigger_error_i", "trigger_error_v"]
    header += [f"prev_{n}" for n in PARAM_NAMES] + [f"new_{n}" for n in PARAM_NAMES]
    lines = [",".join(header)]
    for e in events:
        row = [_fmt(e.ts), _fmt(e.trigger_error_i), _fmt(e.trigger_error_v)]
        row += [_fmt(getattr(e.prev_params, n)) for n in PARAM_NAMES]
        row += [_fmt(getattr(e.new_params, n)) for n in PARAM_NAMES]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def plot_timeseries_csv(records: list[ReplayRecord]) -> str:
    cols = ("ts", "p_meas", "p_pred", "v_meas", "v_pred", "i_meas", "i_pred",
            "g_meas", "g_equiv", "updated")
    lines = [",".join(cols)]
    for r in records:
        lines.append(",".join(_fmt(x) for x in (
            r.ts, r.p_meas, r.p_pred, r.v_meas, r.v_pred, r.i_meas, r.i_pred,
            r.g_meas, r.g_equiv, r.updated)))
    return "\n".join(lines) + "\n"


def plot_params_csv(records: list[ReplayRecord]) -> str:
    lines = [",".join(("ts",) + PARAM_NAMES)]
    for r in records:
        p = r.params
        lines.append(",".join(_fmt(x) for x in (r.ts, p.rs, p.rsh, p.kd, p.iph0, p.is0)))
    return "\n".join(lines) + "\n"


def _channel_dict(stats) -> dict:
    return {"mape": stats.mape, "ape_min": stats.ape_min, "ape_max": stats.ape_max,
            "rmse": stats.rmse}


def summary_dict(result: ReplayResult) -> dict:
    n_daylight = sum(1 for r in result.records if not r.dark)
    out = {
        "method": result.method,
        "policy": result.policy_label,
        "n_steps": len(result.records),
        "n_daylight": n_daylight,
        "update_count": result.update_count,
        "mape": None,
        "rmse": None,
    }
    if result.report is not None:
        rep = result.report
        out["mape"] = {
            "i": {"mean": rep.i.mape, "min": rep.i.ape_min, "max": rep.i.ape_max},
            "v": {"mean": rep.v.mape, "min": rep.v.ape_min, "max": rep.v.ape_max},
            "p": {"mean": rep.p.mape, "min": rep.p.ape_min, "max": rep.p.ape_max},
        }
        out["rmse"] = {"i": rep.i.rmse, "v": rep.v.rmse, "p": rep.p.rmse}
    return out


def summary_json(result: ReplayResult) -> str:
    return json.dumps(summary_dict(result), indent=2, sort_keys=True) + "\n"


def report_emit(result: ReplayResult, out_dir: str | Path,
                prefix: str = "") -> dict[str, str]:
    """Write records/events/summary/plot-data files; returns path -> content."""
    out = {
        f"{prefix}records.csv": records_csv(result.records),
        f"{prefix}events.csv": events_csv(result.events),
        f"{prefix}summary.json": summary_json(result),
        f"{prefix}plot_timeseries.csv": plot_timeseries_csv(result.records),
        f"{prefix}plot_params.csv": plot_params_csv(result.records),
    }
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, content in out.items():
            (out_dir / name).write_text(content, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write results to {out_dir}: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# Studies
# ---------------------------------------------------------------------------

def default_sweep_policies(event_threshold: float = 0.005) -> list[UpdatePolicy]:
    policies = [UpdatePolicy(kind="fixed_interval", interval_s=s) for s in SWEEP_INTERVALS]
    policies.append(UpdatePolicy(kind=EVENT_TRIGGER, threshold=event_threshold))
    return policies


def sweep_policies(cfg: RunConfig, telemetry: list[Measurement],
                   policies: list[UpdatePolicy] | None = None) -> dict[str, ReplayResult]:
    """Replay the configured method once per update policy."""
    if policies is None:
        threshold = cfg.policy.threshold if cfg.policy.kind == EVENT_TRIGGER else 0.005
        policies = default_sweep_policies(threshold)
    results: dict[str, ReplayResult] = {}
    for policy in policies:
        run = copy.deepcopy(cfg)
        run.policy = policy
        results[policy.label] = replay(run, telemetry)
    return results


def compare_methods(cfg: RunConfig, telemetry: list[Measurement],
                    methods: tuple[str, ...] = ("base", "method1", "method2",
                                                "proposed")) -> dict[str, ReplayResult]:
    """Replay every method over the same stream with the same policy."""
    results: dict[str, ReplayResult] = {}
    for method in methods:
        run = copy.deepcopy(cfg)
        run.method = method
        results[method] = replay(run, telemetry)
    return results


def study_summary_json(results: dict[str, ReplayResult]) -> str:
    payload = {key: summary_dict(res) for key, res in results.items()}
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def study_summary_csv(results: dict[str, ReplayResult]) -> str:
    cols = ["key", "method", "policy", "updates", "mape_i", "mape_v", "mape_p",
            "rmse_i", "rmse_v", "rmse_p"]
    lines = [",".join(cols)]
    for key, res in results.items():
        rep = res.report
        row = [key, res.method, res.policy_label, str(res.update_count)]
        if rep is None:
            row += [""] * 6
        else:
            row += [repr(rep.i.mape), repr(rep.v.mape), repr(rep.p.mape),
                    repr(rep.i.rmse), repr(rep.v.rmse), repr(rep.p.rmse)]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
