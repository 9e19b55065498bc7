"""Command-line client for the pvtwin service.

Every subcommand is a thin HTTP client: it reads local files, posts one
request to the service, and writes the response payload back to disk. By
default the requests run against an in-process application instance, so no
server needs to be running; ``--server URL`` points the same commands at a
remote deployment instead.

Exit codes: 0 success, 1 error, 2 empty result (no daylight samples).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx

from .config import PARAM_NAMES, load_params_json, params_to_dict
from .errors import PvTwinError


class ServiceClient:
    """httpx wrapper that talks to a remote server or the in-process app."""

    def __init__(self, server: str | None = None):
        if server:
            self._client = httpx.Client(base_url=server.rstrip("/"), timeout=None)
        else:
            import warnings
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient
            from .service import app
            self._client = TestClient(app)

    def post(self, path: str, payload: dict) -> dict:
        response = self._client.post(path, json=payload)
        if response.status_code != 200:
            try:
                detail = response.json().get("detail", response.text)
            except Exception:
                detail = response.text
            raise click.ClickException(f"{path} failed ({response.status_code}): {detail}")
        return response.json()


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"cannot read {path}: {exc}")


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise click.ClickException(f"cannot read {path}: {exc}")


def _write_files(out_dir: str, files: dict[str, str]):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, content in files.items():
        (out / name).write_text(content, encoding="utf-8")


def _bounds_csv_to_dict(path: str) -> dict:
    from .config import parse_bounds_csv, bounds_to_dict
    return bounds_to_dict(parse_bounds_csv(_read_text(path)))


def _params_payload(path: str) -> dict:
    try:
        return params_to_dict(load_params_json(path))
    except (PvTwinError, OSError, json.JSONDecodeError, KeyError) as exc:
        raise click.ClickException(f"cannot load params from {path}: {exc}")


@click.group()
@click.option("--server", default=None, metavar="URL",
              help="Base URL of a running pvtwin service (default: in-process).")
@click.pass_context
def main(ctx, server):
    """PV digital-twin parameterization toolkit."""
    ctx.obj = ServiceClient(server)


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host, port):
    """Run the HTTP service with uvicorn."""
    import uvicorn
    uvicorn.run("pvtwin.service:app", host=host, port=port)


@main.command("fit-datasheet")
@click.argument("curve_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--bounds", "bounds_csv", type=click.Path(exists=True, dir_okay=False),
              help="Bounds file (name,lower,upper rows).")
@click.option("--out", "out_path", default="params.json", show_default=True)
@click.option("--ns", default=72, show_default=True, type=int,
              help="Series cell count of the lumped unit.")
@click.option("--alpha-isc", default=0.0005, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.pass_obj
def fit_datasheet_cmd(client: ServiceClient, curve_csv, bounds_csv, out_path, ns,
                      alpha_isc, seed):
    """Fit the five model parameters to datasheet V-I curve points."""
    payload = {
        "curve_csv": _read_text(curve_csv),
        "plant": {"ns": ns, "alpha_isc": alpha_isc},
        "seed": seed,
    }
    if bounds_csv:
        payload["bounds"] = _bounds_csv_to_dict(bounds_csv)
    data = client.post("/datasheet/fit", payload)
    Path(out_path).write_text(
        json.dumps({"params": data["params"], "rmse_a": data["rmse_a"]},
                   indent=2, sort_keys=True) + "\n", encoding="utf-8")
    click.echo(f"fit rmse = {data['rmse_a']:.6g} A -> {out_path}")


def _parse_param_assignments(pairs: tuple[str, ...], what: str) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise click.ClickException(f"{what} expects name=value, got {pair!r}")
        name, value = pair.split("=", 1)
        if name not in PARAM_NAMES:
            raise click.ClickException(f"unknown parameter {name!r} in {what}")
        out[name] = float(value)
    return out


@main.command("synth")
@click.option("--scenario", type=click.Choice(["clear", "cloudy", "overcast"]),
              default="cloudy", show_default=True)
@click.option("--params", "params_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Ground-truth parameters JSON (as written by fit-datasheet).")
@click.option("--duration", default=10800.0, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--noise", default=0.005, show_default=True, type=float)
@click.option("--tracker/--no-tracker", default=False, show_default=True,
              help="Sample through a perturb-and-observe tracker instead of the MPP.")
@click.option("--gmeas", type=click.Choice(["none", "true", "proxy"]), default="none",
              show_default=True, help="Pyranometer column mode.")
@click.option("--g-peak", default=950.0, show_default=True, type=float)
@click.option("--ns", default=72, show_default=True, type=int)
@click.option("--drift", multiple=True, metavar="NAME=END",
              help="Linear parameter drift to END value over the run (repeatable).")
@click.option("--step-time", default=None, type=float,
              help="Time (s) of a parameter step change.")
@click.option("--step", multiple=True, metavar="NAME=VALUE",
              help="Parameter values after the step (repeatable).")
@click.option("--start-ts", default=0.0, show_default=True, type=float)
@click.option("--out", "out_path", default="tele.csv", show_default=True)
@click.pass_obj
def synth_cmd(client: ServiceClient, scenario, params_path, duration, seed, noise,
              tracker, gmeas, g_peak, ns, drift, step_time, step, start_ts, out_path):
    """Generate a synthetic telemetry stream plus a ground-truth sidecar."""
    base = _params_payload(params_path)
    payload = {
        "scenario": scenario, "params": base, "plant": {"ns": ns},
        "duration_s": duration, "noise": noise, "seed": seed, "tracker": tracker,
        "gmeas_mode": gmeas, "g_peak": g_peak, "start_ts": start_ts,
    }
    drift_map = _parse_param_assignments(drift, "--drift")
    if drift_map:
        payload["params_end"] = {**base, **drift_map}
    step_map = _parse_param_assignments(step, "--step")
    if step_map:
        if step_time is None:
            raise click.ClickException("--step requires --step-time")
        payload["step_at_s"] = step_time
        payload["params_step"] = {**base, **step_map}
    data = client.post("/synth", payload)
    Path(out_path).write_text(data["telemetry_csv"], encoding="utf-8")
    truth_path = Path(out_path).with_suffix(Path(out_path).suffix + ".truth.csv")
    truth_path.write_text(data["truth_csv"], encoding="utf-8")
    click.echo(f"wrote {data['n_samples']} samples -> {out_path} (+ {truth_path.name})")


def _run_config_payload(config_path: str | None, method, policy, seed, resample,
                        params_path, bounds_csv) -> dict:
    config = _load_json(config_path) if config_path else {}
    if params_path:
        config["initial_params"] = _params_payload(params_path)
    if "initial_params" not in config:
        raise click.ClickException(
            "no initial parameters: provide --params or an initial_params config entry")
    if bounds_csv:
        config["x2_bounds"] = _bounds_csv_to_dict(bounds_csv)
    if method:
        config["method"] = method
    if policy:
        config["policy"] = policy
    if seed is not None:
        config["seed"] = seed
    if resample is not None:
        config["resample_s"] = resample
    return config


_replay_options = [
    click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                 help="Run-configuration JSON."),
    click.option("--in", "in_path", required=True,
                 type=click.Path(exists=True, dir_okay=False), help="Telemetry CSV."),
    click.option("--out-dir", default="results", show_default=True),
    click.option("--method", type=click.Choice(["base", "method1", "method2", "proposed"]),
                 default=None, help="Override the configured method."),
    click.option("--policy", default=None, metavar="KIND:VALUE",
                 help="Override the update policy (fixed:60 or event:0.005)."),
    click.option("--seed", default=None, type=int),
    click.option("--resample", default=None, type=float, metavar="S",
                 help="Override the resample interval."),
    click.option("--params", "params_path", type=click.Path(exists=True, dir_okay=False),
                 help="Initial parameters JSON (overrides the config entry)."),
    click.option("--bounds", "bounds_csv", type=click.Path(exists=True, dir_okay=False),
                 help="Override the parameter bounds from a bounds file."),
]


def _with_options(options):
    def wrap(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn
    return wrap


@main.command("replay")
@_with_options(_replay_options)
@click.pass_obj
def replay_cmd(client: ServiceClient, config_path, in_path, out_dir, method, policy,
               seed, resample, params_path, bounds_csv):
    """Replay one method over a telemetry stream and emit reports."""
    config = _run_config_payload(config_path, method, policy, seed, resample,
                                 params_path, bounds_csv)
    data = client.post("/replay", {"config": config,
                                   "telemetry_csv": _read_text(in_path)})
    _write_files(out_dir, data["files"])
    summary = data["summary"]
    if data["empty"]:
        click.echo("no daylight samples; summary metrics are null")
        sys.exit(2)
    click.echo(f"method={summary['method']} policy={summary['policy']} "
               f"updates={summary['update_count']} "
               f"mape_p={summary['mape']['p']['mean']:.4f}% -> {out_dir}/")


@main.command("sweep-policies")
@_with_options(_replay_options)
@click.option("--event-threshold", default=None, type=float,
              help="Event threshold used for the sweep's event policy.")
@click.pass_obj
def sweep_cmd(client: ServiceClient, config_path, in_path, out_dir, method, policy,
              seed, resample, params_path, bounds_csv, event_threshold):
    """Replay once per update policy (fixed intervals plus event trigger)."""
    config = _run_config_payload(config_path, method, policy, seed, resample,
                                 params_path, bounds_csv)
    payload = {"config": config, "telemetry_csv": _read_text(in_path)}
    if event_threshold is not None:
        payload["event_threshold"] = event_threshold
    data = client.post("/sweep-policies", payload)
    _write_files(out_dir, data["files"])
    if all(s["mape"] is None for s in data["summaries"].values()):
        click.echo("no daylight samples in any policy run")
        sys.exit(2)
    for label, summary in data["summaries"].items():
        mape_i = summary["mape"]["i"]["mean"] if summary["mape"] else float("nan")
        click.echo(f"{label:>12}: updates={summary['update_count']:>5} "
                   f"mape_i={mape_i:.4f}%")
    click.echo(f"-> {out_dir}/")


@main.command("compare-methods")
@_with_options(_replay_options)
@click.pass_obj
def compare_cmd(client: ServiceClient, config_path, in_path, out_dir, method, policy,
                seed, resample, params_path, bounds_csv):
    """Replay all four methods over the same stream."""
    config = _run_config_payload(config_path, method, policy, seed, resample,
                                 params_path, bounds_csv)
    data = client.post("/compare-methods", {"config": config,
                                            "telemetry_csv": _read_text(in_path)})
    _write_files(out_dir, data["files"])
    if all(s["mape"] is None for s in data["summaries"].values()):
        click.echo("no daylight samples in any method run")
        sys.exit(2)
    for name, summary in data["summaries"].items():
        mape_p = summary["mape"]["p"]["mean"] if summary["mape"] else float("nan")
        click.echo(f"{name:>9}: mape_p={mape_p:.4f}% updates={summary['update_count']}")
    click.echo(f"-> {out_dir}/")


if __name__ == "__main__":
    main()
