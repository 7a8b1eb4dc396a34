import json
import math
from statistics import NormalDist

import numpy as np
import pytest

from gtlab import harness, rates
from gtlab.core import NOISELESS, ChannelKind, ChannelModel
from gtlab.decoders import Algorithm, DecoderConfig
from gtlab.errors import ConfigError
from gtlab.harness import ExperimentConfig


def wilson_reference(failures, trials, confidence):
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    ph = failures / trials
    centre = (ph + z * z / (2 * trials)) / (1 + z * z / trials)
    half = z / (1 + z * z / trials) * math.sqrt(ph * (1 - ph) / trials + z * z / (4 * trials * trials))
    return centre - half, centre + half


def noiseless_dd(p=200, k=5, n=60, trials=40, seed=3):
    return ExperimentConfig.build(p, k, n, NOISELESS, "dd", trials, master_seed=seed)


class TestConfig:
    def test_json_round_trip(self):
        cfg = ExperimentConfig.build(300, 6, 90, ChannelModel.parse("rz", 0.1), "ndd-rz", 20, 0.9, 42)
        back = ExperimentConfig.from_json(cfg.to_json())
        assert back == cfg

    def test_schema_rejects(self):
        good = noiseless_dd().to_dict()
        for patch in ({"p": 0}, {"trials": 0}, {"extra": 1}, {"channel": {"kind": "weird"}}):
            with pytest.raises(ConfigError):
                ExperimentConfig.from_dict({**good, **patch})
        with pytest.raises(ConfigError):
            ExperimentConfig.from_json("{not json")

    def test_invariants(self):
        with pytest.raises(ConfigError):
            noiseless_dd(n=0)
        with pytest.raises(ConfigError):
            noiseless_dd(trials=0)
        with pytest.raises(ConfigError):
            ExperimentConfig(10, 2, 5, NOISELESS, DecoderConfig(Algorithm.DD, 3), 1)
        with pytest.raises(ConfigError):
            ExperimentConfig(10, 2, 5, ChannelModel.parse("z", 0.1), DecoderConfig(Algorithm.NDD_Z, 2), 1)

    def test_theta(self):
        assert noiseless_dd(p=10_000, k=100).theta == pytest.approx(0.5)


class TestTrials:
    def test_deterministic(self):
        cfg = ExperimentConfig.build(200, 5, 70, ChannelModel.parse("sym", 0.05), "ndd-sym", 5, master_seed=8)
        assert harness.run_trial(cfg, 3) == harness.run_trial(cfg, 3)

    def test_generous_budget_succeeds(self):
        p, k = 500, 10
        n = math.ceil(10 * math.e * k * math.log(p))
        est = harness.estimate_error_prob(noiseless_dd(p, k, n, trials=100, seed=1))
        assert est.trials - est.failures >= 99

    def test_success_is_exact_equality(self):
        # COMP with few tests returns supersets; those are failures
        cfg = ExperimentConfig.build(200, 5, 10, NOISELESS, "comp", 20, master_seed=0)
        est = harness.estimate_error_prob(cfg)
        assert est.failures == 20
        assert est.mean_diagnostics["missed"] == 0 and est.mean_diagnostics["false_alarms"] > 0

    def test_serial_equals_parallel(self):
        cfg = ExperimentConfig.build(300, 6, 80, ChannelModel.parse("rz", 0.05), "ndd-rz", 30, master_seed=5)
        assert harness.run_trials(cfg, 1) == harness.run_trials(cfg, 4)

    def test_worker_env(self, monkeypatch):
        monkeypatch.setenv(harness.THREADS_ENV, "3")
        assert harness.worker_count() == 3
        assert harness.worker_count(1) == 1
        monkeypatch.setenv(harness.THREADS_ENV, "many")
        with pytest.raises(ConfigError):
            harness.worker_count()


class TestWilson:
    def test_zero_failures(self):
        lo, hi = harness.wilson_interval(0, 100)
        assert lo == 0.0
        assert hi == pytest.approx(wilson_reference(0, 100, 0.95)[1], abs=1e-12)
        assert hi == pytest.approx(0.037, abs=5e-4)

    def test_all_failures(self):
        lo, hi = harness.wilson_interval(50, 50)
        assert hi == 1.0 and lo == pytest.approx(wilson_reference(50, 50, 0.95)[0], abs=1e-12)

    @pytest.mark.parametrize("failures,trials", [(3, 17), (40, 200), (999, 1000)])
    def test_against_formula(self, failures, trials):
        for conf in (0.95, 0.99):
            lo, hi = harness.wilson_interval(failures, trials, conf)
            rlo, rhi = wilson_reference(failures, trials, conf)
            assert lo == pytest.approx(rlo, abs=1e-12) and hi == pytest.approx(rhi, abs=1e-12)

    def test_shrinks_like_root_n(self):
        widths = []
        for trials in (100, 200, 400, 800, 1600):
            lo, hi = harness.wilson_interval(trials // 5, trials)
            widths.append(hi - lo)
        for a, b in zip(widths, widths[1:]):
            assert a / b == pytest.approx(math.sqrt(2), rel=0.02)

    def test_estimate_invariants(self):
        est = harness.estimate_error_prob(noiseless_dd())
        assert 0 <= est.ci_low <= est.p_hat <= est.ci_high <= 1
        assert est.p_hat == est.failures / est.trials
        assert set(est.mean_diagnostics) == set(harness.DIAGNOSTIC_KEYS)


class TestSweep:
    def test_rows_and_rate(self):
        grid = [40, 60, 80, 100]
        rows = harness.sweep_n(noiseless_dd(trials=30), grid)
        assert [r["n"] for r in rows] == grid
        for r in rows:
            assert r["rate"] == 5 * math.log2(200 / 5) / r["n"]

    def test_trend(self):
        rows = harness.sweep_n(noiseless_dd(p=500, k=8, trials=100), [30, 60, 90, 120, 150])
        for a, b in zip(rows, rows[1:]):
            assert b["p_hat"] <= a["ci_high"]
        assert rows[0]["p_hat"] > rows[-1]["p_hat"]

    @pytest.mark.parametrize("grid", [[], [50, 40], [40, 40], [0, 10]])
    def test_bad_grid(self, grid):
        with pytest.raises(ConfigError):
            harness.sweep_n(noiseless_dd(), grid)

    def test_csv_reproducible(self, tmp_path):
        cfg = ExperimentConfig.build(300, 6, 60, ChannelModel.parse("z", 0.1), "ndd-z", 25, master_seed=9)
        a = harness.write_csv(harness.sweep_n(cfg, [50, 90], workers=1), harness.SWEEP_COLUMNS, tmp_path / "a.csv")
        b = harness.write_csv(harness.sweep_n(cfg, [50, 90], workers=3), harness.SWEEP_COLUMNS, tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert a.splitlines()[0].split(",") == list(harness.SWEEP_COLUMNS)
        assert "np.float64" not in a


class TestRateExport:
    def test_noiseless(self):
        thetas = np.linspace(0.05, 0.95, 10)
        rows = harness.rate_curve_export("noiseless", [], thetas)
        for row, t in zip(rows, thetas):
            assert row["ach_rate"] == rates.noiseless_dd_rate(t)
            assert row["conv_rate"] == rates.noiseless_converse(t)

    def test_rz_tight_above_theta_opt(self):
        thetas = np.arange(0.2119, 0.99, 0.01)
        for row in harness.rate_curve_export("rz", [0.1], thetas):
            assert abs(row["ach_rate"] - row["conv_rate"]) <= 1e-9

    def test_z_beats_reverse_z_near_one(self):
        # the crossing sits near theta = 0.9817 at rho = 0.05
        thetas = [0.985, 0.99, 0.999]
        z = harness.rate_curve_export("z", [0.05], thetas)
        rz = harness.rate_curve_export("rz", [0.05], thetas)
        for a, b in zip(z, rz):
            assert a["ach_rate"] > b["conv_rate"]
        low = harness.rate_curve_export("z", [0.05], [0.9])[0]["ach_rate"]
        assert low < harness.rate_curve_export("rz", [0.05], [0.9])[0]["conv_rate"]

    def test_columns_and_layout(self):
        rows = harness.rate_curve_export("sym", [0.01, 0.1], [0.3, 0.6])
        assert [(r["rho"], r["theta"]) for r in rows] == [(0.01, 0.3), (0.01, 0.6), (0.1, 0.3), (0.1, 0.6)]
        assert all(r["nu"] > 0 for r in rows)
        text = harness.write_csv(rows, harness.RATE_COLUMNS)
        assert text.splitlines()[0] == ",".join(harness.RATE_COLUMNS)

    @pytest.mark.parametrize("model,rho", [("rz", 0.5), ("z", 0.6), ("sym", 0.34), ("rz", 0.0)])
    def test_invalid_rho(self, model, rho):
        with pytest.raises(ConfigError, match="hypothesis"):
            harness.rate_curve_export(model, [rho], [0.5])


class TestOracle:
    def test_report_shape(self):
        report = harness.oracle_compare(8, 2, 16, ChannelModel.parse("rz", 0.1), 40, master_seed=2)
        assert set(report["decoders"]) == {"ml", "comp", "dd", "ndd-rz"}
        for rec in report["decoders"].values():
            assert rec["trials"] == 40 and 0 <= rec["ci_low"] <= rec["rate"] <= rec["ci_high"] <= 1
        json.dumps(report)

    def test_ml_best_noiseless(self):
        report = harness.oracle_compare(10, 2, 20, NOISELESS, 200, master_seed=0)
        ml = report["decoders"]["ml"]["successes"]
        assert all(rec["successes"] <= ml for rec in report["decoders"].values())
        assert report["ml_dominates"]
