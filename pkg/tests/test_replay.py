import numpy as np
import pytest

from pvtwin import DEMO_X2_BOUNDS, Measurement, RunConfig, replay, synth_plant
from pvtwin.errors import ConfigError
from pvtwin.metrics import parse_policy
from pvtwin.replay import (compare_methods, events_csv, records_csv, summary_dict,
                           sweep_policies)


def run_config(params, method="proposed", policy="event:0.005", seed=0, **kw):
    cfg = RunConfig(initial_params=params, x2_bounds=DEMO_X2_BOUNDS,
                    method=method, seed=seed, **kw)
    cfg.policy = parse_policy(policy)
    return cfg


@pytest.fixture(scope="module")
def stream(params):
    from pvtwin import DEMO_PLANT
    return synth_plant("cloudy", params, DEMO_PLANT, duration_s=900, noise=0.0,
                       seed=21).measurements


class TestReplayProposed:
    def test_fixed_point_no_updates(self, params, plant, stream):
        # warm start equals the generating parameters: nothing ever triggers
        result = replay(run_config(params), stream)
        assert result.update_count == 0
        assert result.report.i.mape <= 0.01
        assert result.report.v.mape <= 0.01
        assert result.report.p.mape <= 0.01

    def test_perturbed_warm_start_converges(self, params, plant, stream):
        warm = params.replace(rs=params.rs * 1.2, rsh=params.rsh * 0.8)
        result = replay(run_config(warm), stream)
        assert 1 <= result.update_count <= 10
        assert result.report.p.mape <= 0.2

    def test_mid_run_step_causes_bounded_update_burst(self, params, plant):
        stepped = params.replace(rs=params.rs + 0.15)
        sp = synth_plant("clear", params, plant, duration_s=900, noise=0.0,
                         seed=22, step_at_s=450.0, params_step=stepped)
        result = replay(run_config(params), sp.measurements)
        update_times = [e.ts for e in result.events]
        assert all(t >= 450.0 for t in update_times)
        assert 1 <= len(update_times) <= 3

    def test_never_reads_pyranometer(self, params, plant, stream):
        assert all(m.g_meas is None for m in stream)  # column absent entirely
        result = replay(run_config(params.replace(rs=params.rs * 1.1)), stream)
        assert result.report is not None

    def test_update_accounting(self, params, plant, stream):
        warm = params.replace(rs=params.rs * 1.15)
        result = replay(run_config(warm), stream)
        flagged = sum(1 for r in result.records if r.updated)
        assert flagged == result.update_count == len(result.events)

    def test_one_record_per_resampled_step(self, params, plant, stream):
        result = replay(run_config(params), stream)
        assert len(result.records) == 90  # 900 s at 10 s

    def test_event_errors_bounded_at_non_update_steps(self, params, plant):
        drifting = synth_plant("clear", params, plant, duration_s=1200, noise=0.0,
                               seed=23, params_end=params.replace(rs=params.rs * 1.4))
        cfg = run_config(params, policy="event:0.005")
        result = replay(cfg, drifting.measurements)
        assert result.update_count >= 1
        for r in result.records:
            if not r.dark and not r.updated:
                assert max(r.err_i, r.err_v) <= 0.005

    def test_determinism_byte_identical(self, params, plant, stream):
        warm = params.replace(rs=params.rs * 1.1)
        a = replay(run_config(warm, seed=5), stream)
        b = replay(run_config(warm, seed=5), stream)
        assert records_csv(a.records) == records_csv(b.records)
        assert events_csv(a.events) == events_csv(b.events)
        assert summary_dict(a) == summary_dict(b)


class TestMethods:
    def test_base_requires_gmeas(self, params, stream):
        with pytest.raises(ConfigError):
            replay(run_config(params, method="base"), stream)

    def test_method2_requires_gmeas(self, params, stream):
        with pytest.raises(ConfigError):
            replay(run_config(params, method="method2"), stream)

    def test_method1_fixed_params_with_estimated_irradiance(self, params, plant, stream):
        warm = params.replace(rs=params.rs * 1.05)
        result = replay(run_config(warm, method="method1"), stream)
        assert result.update_count == 0
        p0 = result.records[0].params
        assert all(r.params == p0 for r in result.records)
        assert all(r.g_equiv is not None for r in result.records if not r.dark)

    def test_base_uses_pyranometer_directly(self, params, plant):
        sp = synth_plant("cloudy", params, plant, duration_s=600, noise=0.0,
                         seed=24, gmeas_mode="true")
        result = replay(run_config(params, method="base"), sp.measurements)
        assert result.update_count == 0
        assert all(r.g_equiv is None for r in result.records)
        assert result.report.p.mape <= 0.5  # true sensor: base is accurate

    def test_method2_updates_and_tracks(self, params, plant):
        sp = synth_plant("cloudy", params, plant, duration_s=600, noise=0.0,
                         seed=25, gmeas_mode="true")
        warm = params.replace(rs=params.rs * 1.2)
        result = replay(run_config(warm, method="method2", policy="fixed:10"),
                        sp.measurements)
        assert result.update_count == 60
        assert result.report.p.mape <= 2.0


class TestDarkHandling:
    def test_all_dark_stream_gives_null_report(self, params):
        dark = [Measurement(ts=t, v_meas=0.0, i_meas=0.0, t_meas=10.0)
                for t in range(0, 100, 10)]
        result = replay(run_config(params), dark)
        assert result.report is None
        assert all(r.dark for r in result.records)
        summary = summary_dict(result)
        assert summary["mape"] is None and summary["rmse"] is None

    def test_daylight_window_filter(self, params, plant, stream):
        cfg = run_config(params, daylight_window=(200.0, 600.0))
        result = replay(cfg, stream)
        for r in result.records:
            if r.ts < 200.0 or r.ts > 600.0:
                assert r.dark


class TestStudies:
    def test_sweep_policies_labels_and_counts(self, params, plant):
        sp = synth_plant("clear", params, plant, duration_s=600, noise=0.0, seed=26)
        cfg = run_config(params.replace(rs=params.rs * 1.05))
        results = sweep_policies(cfg, sp.measurements)
        assert set(results) == {"fixed:10", "fixed:60", "fixed:300", "fixed:600",
                                "fixed:900", "fixed:1800", "fixed:3600", "event:0.005"}
        assert results["fixed:10"].update_count == 60
        assert results["fixed:60"].update_count == 10
        assert results["fixed:600"].update_count == 1
        assert results["event:0.005"].update_count <= results["fixed:10"].update_count

    def test_compare_methods_runs_all(self, params, plant):
        sp = synth_plant("cloudy", params, plant, duration_s=400, noise=0.0,
                         seed=27, gmeas_mode="true")
        cfg = run_config(params.replace(rs=params.rs * 1.1), policy="fixed:10")
        results = compare_methods(cfg, sp.measurements)
        assert set(results) == {"base", "method1", "method2", "proposed"}
        for res in results.values():
            assert res.report is not None
