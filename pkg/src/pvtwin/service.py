"""FastAPI service exposing the digital-twin operations.

The service is stateless: every request carries its own parameters, plant
constants and seed, so concurrent clients cannot interfere with each other.
Heavy batch endpoints (replay, sweeps) accept telemetry CSV content inline
and return the output files as strings; the CLI handles the local file I/O.
"""

from __future__ import annotations

import math

from fastapi import FastAPI, HTTPException

from . import model, schemas
from .coopt import CoOptConfig, co_optimize
from .datasheet import CurvePoint, fit_datasheet, parse_curve_csv
from .errors import PvTwinError
from .irradiance import estimate_equivalent_irradiance
from .metrics import compute_error_report, relative_errors, should_update, tri
from .replay import (compare_methods, default_sweep_policies, events_csv,
                     plot_params_csv, plot_timeseries_csv, records_csv, replay,
                     study_summary_csv, study_summary_json, summary_dict,
                     summary_json, sweep_policies)
from .synth import synth_plant
from .telemetry import measurements_to_csv, parse_telemetry

app = FastAPI(title="pvtwin", version="0.1.0",
              description="Single-diode PV digital-twin parameterization service")


def _bad_request(exc: Exception) -> HTTPException:
    return HTTPException(status_code=422, detail=f"{type(exc).__name__}: {exc}")


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": app.version}


@app.post("/model/mpp", response_model=schemas.MppResponse)
def model_mpp(req: schemas.MppRequest) -> schemas.MppResponse:
    params = req.params.to_core()
    plant = req.plant.to_core()
    try:
        env = model.EnvInputs(g=req.g, t_c=req.t_c)
        quantities = (model.derive_quantities(params, plant, env)
                      if req.g >= model.DARK_IRRADIANCE else None)
        point = model.mpp_point(params, plant, env)
    except model.DegenerateError:
        return schemas.MppResponse(point=schemas.OperatingPointModel(v=0, i=0, p=0),
                                   omega=0.0, degenerate=True)
    except PvTwinError as exc:
        raise _bad_request(exc) from exc
    omega = quantities.omega if quantities else 0.0
    return schemas.MppResponse(point=schemas.OperatingPointModel.from_core(point),
                               omega=omega, degenerate=req.g < model.DARK_IRRADIANCE)


@app.post("/irradiance/estimate", response_model=schemas.IrradianceResponse)
def irradiance_estimate(req: schemas.IrradianceRequest) -> schemas.IrradianceResponse:
    from .irradiance import DEFAULT_STAGE1_CFG
    cfg = req.pso.to_core(DEFAULT_STAGE1_CFG) if req.pso else None
    try:
        est = estimate_equivalent_irradiance(
            req.measurement.to_core(), req.params.to_core(), req.plant.to_core(),
            bounds=req.bounds, pso_cfg=cfg, seed=req.seed)
    except PvTwinError as exc:
        raise _bad_request(exc) from exc
    residual = None if math.isnan(est.residual) else est.residual
    return schemas.IrradianceResponse(g_equiv=est.g_equiv, residual=residual,
                                      status=est.status)


@app.post("/coopt", response_model=schemas.CoOptResponse)
def coopt_endpoint(req: schemas.CoOptRequest) -> schemas.CoOptResponse:
    cfg = CoOptConfig(x1_bounds=req.x1_bounds,
                      outer_iterations=req.outer_iterations,
                      tier_threshold=req.tier_threshold,
                      convergence_tol=req.convergence_tol, nested=req.nested)
    if req.x2_bounds is not None:
        cfg.x2_bounds = req.x2_bounds.to_core()
    if req.stage1_pso is not None:
        cfg.stage1_cfg = req.stage1_pso.to_core(cfg.stage1_cfg)
    if req.stage2_pso is not None:
        cfg.stage2_cfg = req.stage2_pso.to_core(cfg.stage2_cfg)
    try:
        result = co_optimize(req.measurement.to_core(), req.warm_start.to_core(),
                             req.plant.to_core(), cfg, seed=req.seed)
    except PvTwinError as exc:
        raise _bad_request(exc) from exc
    return schemas.CoOptResponse(
        g_equiv=result.g_equiv, params=schemas.PvParamsModel.from_core(result.params),
        f2_value=result.f2_value, tier_used=result.tier_used,
        outer_iters_run=result.outer_iters_run,
        predicted=schemas.OperatingPointModel.from_core(result.predicted),
        status=result.status)


@app.post("/update/should", response_model=schemas.ShouldUpdateResponse)
def update_should(req: schemas.ShouldUpdateRequest) -> schemas.ShouldUpdateResponse:
    try:
        policy = req.to_policy()
        meas = req.measurement.to_core()
        predicted = req.predicted.to_core()
        decision = should_update(policy, req.now, req.last_update, meas, predicted)
        err_i, err_v = relative_errors(meas, predicted)
    except PvTwinError as exc:
        raise _bad_request(exc) from exc
    return schemas.ShouldUpdateResponse(update=decision, err_i=err_i, err_v=err_v)


@app.post("/metrics/error-report", response_model=schemas.ErrorReportResponse)
def metrics_error_report(req: schemas.ErrorReportRequest) -> schemas.ErrorReportResponse:
    try:
        pairs = [(m.to_core(), p.to_core()) for m, p in req.pairs]
        rep = compute_error_report(pairs)
    except PvTwinError as exc:
        raise _bad_request(exc) from exc
    return schemas.ErrorReportResponse(
        mape_i=rep.i.mape, mape_v=rep.v.mape, mape_p=rep.p.mape,
        rmse_i=rep.i.rmse, rmse_v=rep.v.rmse, rmse_p=rep.p.rmse,
        ape_i=schemas.ChannelStatsModel(mean=rep.i.mape, min=rep.i.ape_min, max=rep.i.ape_max),
        ape_v=schemas.ChannelStatsModel(mean=rep.v.mape, min=rep.v.ape_min, max=rep.v.ape_max),
        ape_p=schemas.ChannelStatsModel(mean=rep.p.mape, min=rep.p.ape_min, max=rep.p.ape_max),
        n_samples=rep.n_samples)


@app.post("/metrics/tri", response_model=schemas.TriResponse)
def metrics_tri(req: schemas.TriRequest) -> schemas.TriResponse:
    try:
        value = tri(req.window, ss_tail_fraction=req.ss_tail_fraction)
    except PvTwinError as exc:
        raise _bad_request(exc) from exc
    return schemas.TriResponse(tri_percent=value)


@app.post("/datasheet/fit", response_model=schemas.DatasheetFitResponse)
def datasheet_fit(req: schemas.DatasheetFitRequest) -> schemas.DatasheetFitResponse:
    try:
        if req.curve_csv is not None:
            points = parse_curve_csv(req.curve_csv)
        else:
            points = [CurvePoint(v=p.v, i=p.i, g=p.g, t_c=p.t_c) for p in req.points]
        bounds = req.bounds.to_core() if req.bounds else None
        from .datasheet import DEFAULT_FIT_CFG
        cfg = req.pso.to_core(DEFAULT_FIT_CFG) if req.pso else None
        params, rmse = fit_datasheet(points, req.plant.to_core(), bounds=bounds,
                                     cfg=cfg, seed=req.seed, n_starts=req.n_starts,
                                     polish=req.polish)
    except PvTwinError as exc:
        raise _bad_request(exc) from exc
    return schemas.DatasheetFitResponse(
        params=schemas.PvParamsModel.from_core(params), rmse_a=rmse)


@app.post("/synth", response_model=schemas.SynthResponse)
def synth_endpoint(req: schemas.SynthRequest) -> schemas.SynthResponse:
    try:
        result = synth_plant(
            req.scenario, req.params.to_core(), req.plant.to_core(),
            duration_s=req.duration_s, noise=req.noise, seed=req.seed,
            tracker=req.tracker, tracker_step_v=req.tracker_step_v,
            gmeas_mode=req.gmeas_mode, g_peak=req.g_peak,
            params_end=req.params_end.to_core() if req.params_end else None,
            step_at_s=req.step_at_s,
            params_step=req.params_step.to_core() if req.params_step else None,
            start_ts=req.start_ts)
    except (PvTwinError, ValueError) as exc:
        raise _bad_request(exc) from exc
    include_g = req.gmeas_mode != "none"
    return schemas.SynthResponse(
        telemetry_csv=measurements_to_csv(result.measurements, include_g=include_g),
        truth_csv=result.truth_csv(), n_samples=len(result.measurements))


def _replay_response(result) -> schemas.ReplayResponse:
    files = {
        "records.csv": records_csv(result.records),
        "events.csv": events_csv(result.events),
        "summary.json": summary_json(result),
        "plot_timeseries.csv": plot_timeseries_csv(result.records),
        "plot_params.csv": plot_params_csv(result.records),
    }
    summary = schemas.ReplaySummary(**summary_dict(result))
    return schemas.ReplayResponse(summary=summary, files=files,
                                  empty=result.report is None)


@app.post("/replay", response_model=schemas.ReplayResponse)
def replay_endpoint(req: schemas.ReplayRequest) -> schemas.ReplayResponse:
    try:
        telemetry = parse_telemetry(req.telemetry_csv)
        result = replay(req.config.to_core(), telemetry)
    except PvTwinError as exc:
        raise _bad_request(exc) from exc
    return _replay_response(result)


@app.post("/sweep-policies", response_model=schemas.StudyResponse)
def sweep_endpoint(req: schemas.SweepRequest) -> schemas.StudyResponse:
    try:
        telemetry = parse_telemetry(req.telemetry_csv)
        cfg = req.config.to_core()
        policies = None
        if req.event_threshold is not None:
            policies = default_sweep_policies(req.event_threshold)
        results = sweep_policies(cfg, telemetry, policies=policies)
    except PvTwinError as exc:
        raise _bad_request(exc) from exc
    files = {"sweep_summary.json": study_summary_json(results),
             "sweep_summary.csv": study_summary_csv(results)}
    for label, res in results.items():
        safe = label.replace(":", "_")
        files[f"{safe}_records.csv"] = records_csv(res.records)
        files[f"{safe}_events.csv"] = events_csv(res.events)
        files[f"{safe}_summary.json"] = summary_json(res)
    summaries = {label: schemas.ReplaySummary(**summary_dict(res))
                 for label, res in results.items()}
    return schemas.StudyResponse(summaries=summaries, files=files)


@app.post("/compare-methods", response_model=schemas.StudyResponse)
def compare_endpoint(req: schemas.CompareRequest) -> schemas.StudyResponse:
    try:
        telemetry = parse_telemetry(req.telemetry_csv)
        cfg = req.config.to_core()
        results = compare_methods(cfg, telemetry,
                                             methods=tuple(req.methods))
    except PvTwinError as exc:
        raise _bad_request(exc) from exc
    files = {"comparison_summary.json": study_summary_json(results),
             "comparison_summary.csv": study_summary_csv(results)}
    for method, res in results.items():
        files[f"{method}_records.csv"] = records_csv(res.records)
        files[f"{method}_events.csv"] = events_csv(res.events)
        files[f"{method}_summary.json"] = summary_json(res)
    summaries = {method: schemas.ReplaySummary(**summary_dict(res))
                 for method, res in results.items()}
    return schemas.StudyResponse(summaries=summaries, files=files)
