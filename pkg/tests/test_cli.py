import json
import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reedsim.cli import cmd_run_fedavg, cmd_sweep, cmd_validate_moments, main
from reedsim.config import SCHEMA, ConfigError, parse_config, resolve_noise_var
from reedsim.estimator import ReedPhyConfig, ScalarInputs
from reedsim.experiments import (MomentPoint, default_moment_matrix,
                                 run_single_trial, validate_point)

FAST_FED = """
trials = 2
seed = 3
fed.K = 3
fed.Q = 2
fed.T = 3
fed.batch_size = 16
fed.beta0 = 0.1
fed.aggregators = ["ideal"]
data.synth_n = 90
data.test_n = 60
data.classes = 3
data.features = 4
data.separation = 3.0
"""


class TestConfigParsing:
    def test_defaults_filled(self):
        cfg = parse_config("")
        assert cfg["fed.K"] == 10
        assert cfg["phy.kappa"] == 2.0

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="phy.bandwidth"):
            parse_config("phy.bandwidth = 20")

    def test_type_mismatch_names_key(self):
        with pytest.raises(ConfigError, match="fed.K"):
            parse_config('fed.K = "ten"')

    def test_malformed_value(self):
        with pytest.raises(ConfigError, match="fed.K"):
            parse_config("fed.K = [1,")

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config("fed.K = 1\nfed.K = 2")

    def test_comments_and_blank_lines(self):
        cfg = parse_config("# comment\n\nfed.K = 5  # trailing\n")
        assert cfg["fed.K"] == 5

    def test_cross_validation(self):
        with pytest.raises(ConfigError, match="fed.budget"):
            parse_config("fed.budget = 1.0")  # requires clip_G
        with pytest.raises(ConfigError, match="data.idx_images"):
            parse_config('data.source = "idx"')

    def test_snr_convention(self):
        cfg = parse_config("phy.snr_db = -10")
        assert resolve_noise_var(cfg) == pytest.approx(10.0)
        cfg = parse_config("phy.snr_db = 0\nphy.snr_ref_power = 2.0")
        assert resolve_noise_var(cfg) == pytest.approx(2.0)

    @given(key=st.sampled_from(sorted(SCHEMA)),
           garbage=st.sampled_from(['"x"', "[]", "-3", "1.5", "{}", "null", "true"]))
    @settings(max_examples=60, deadline=None)
    def test_mutated_configs_never_crash_unvalidated(self, key, garbage):
        # any malformed value is either accepted by the schema checker or
        # rejected as ConfigError at parse time, never later
        try:
            parse_config(f"{key} = {garbage}")
        except ConfigError:
            pass


class TestValidateMoments:
    def test_matrix_has_at_least_12_points(self):
        assert len(default_moment_matrix()) >= 12

    def test_small_run_passes(self, tmp_path):
        cfg = parse_config("moments.n_trials = 200000\nmoments.tolerance = 0.05")
        status = cmd_validate_moments(cfg, str(tmp_path))
        assert status == 0
        lines = (tmp_path / "moments.csv").read_text().splitlines()
        assert lines[0].startswith("point_id,s,mc_mean,cf_mean,mc_var,cf_var")
        assert len(lines) == 1 + len(default_moment_matrix())

    def test_negative_control_flagged(self):
        point = MomentPoint(
            point_id="wrong_eta",
            inputs=ScalarInputs([2.0, -1.0]),
            cfg=ReedPhyConfig(eta=1.0, noise_var=1.0),
            cf_cfg=ReedPhyConfig(eta=3.0, noise_var=1.0))
        result = validate_point(point, 100_000, 0.015, seed=0)
        assert not result.passed

    def test_noiseless_rows_match_self_noise(self):
        point = MomentPoint(
            point_id="noiseless",
            inputs=ScalarInputs([2.0, -1.0]),
            cfg=ReedPhyConfig(eta=1.0, noise_var=0.0, chip_weights=[1.0, 1.0]))
        result = validate_point(point, 500_000, 0.02, seed=1)
        assert result.passed
        assert result.cf_var == pytest.approx(5.0 / 2)


class TestRunFedavg:
    def test_row_accounting_and_summary(self, tmp_path):
        cfg = parse_config(FAST_FED)
        assert cmd_run_fedavg(cfg, str(tmp_path)) == 0
        lines = (tmp_path / "fedavg_trace.csv").read_text().splitlines()
        assert len(lines) == 1 + 2 * 3  # header + trials * rounds
        summary = json.loads((tmp_path / "fedavg_summary.json").read_text())
        assert summary["ideal"]["trials"] == 2

    def test_output_byte_identical(self, tmp_path):
        cfg = parse_config(FAST_FED)
        cmd_run_fedavg(cfg, str(tmp_path / "a"))
        cmd_run_fedavg(cfg, str(tmp_path / "b"))
        assert (tmp_path / "a" / "fedavg_trace.csv").read_bytes() == \
            (tmp_path / "b" / "fedavg_trace.csv").read_bytes()

    def test_matched_seed_contract(self):
        cfg = parse_config(FAST_FED)
        alone = run_single_trial(cfg, 0, "ideal")
        cfg2 = dict(cfg)
        cfg2["fed.aggregators"] = ["ideal", "reed"]
        alongside = run_single_trial(cfg2, 0, "ideal")
        assert alone == alongside

    def test_workers_match_serial(self, tmp_path):
        cfg = parse_config(FAST_FED)
        cmd_run_fedavg(cfg, str(tmp_path / "serial"), workers=1)
        cmd_run_fedavg(cfg, str(tmp_path / "parallel"), workers=2)
        assert (tmp_path / "serial" / "fedavg_trace.csv").read_bytes() == \
            (tmp_path / "parallel" / "fedavg_trace.csv").read_bytes()


class TestSweep:
    def test_single_value_axis_matches_run_fedavg(self, tmp_path):
        cfg = parse_config(FAST_FED + 'sweep.M_values = [1]\n')
        cmd_run_fedavg(cfg, str(tmp_path / "run"))
        cmd_sweep(cfg, str(tmp_path / "sweep"), "M")
        run_rows = (tmp_path / "run" / "fedavg_trace.csv").read_text().splitlines()[1:]
        sweep_rows = (tmp_path / "sweep" / "sweep_M.csv").read_text().splitlines()[1:]
        assert [r.split(",", 1)[1] for r in sweep_rows] == run_rows

    def test_empty_axis_rejected(self, tmp_path):
        cfg = parse_config(FAST_FED)
        with pytest.raises(ConfigError):
            cmd_sweep(cfg, str(tmp_path), "snr_db")

    def test_unknown_axis_rejected(self, tmp_path):
        cfg = parse_config(FAST_FED)
        with pytest.raises(ConfigError):
            cmd_sweep(cfg, str(tmp_path), "carrier")

    def test_snr_axis_monotone_eps(self, tmp_path):
        cfg = parse_config(
            FAST_FED.replace('["ideal"]', '["reed"]')
            + "sweep.snr_db_values = [-10, 0]\nphy.eta = 50.0\n")
        cmd_sweep(cfg, str(tmp_path), "snr_db")
        rows = (tmp_path / "sweep_snr_db.csv").read_text().splitlines()[1:]
        eps = {}
        for row in rows:
            parts = row.split(",")
            if int(parts[2]) == 2:  # final round
                eps.setdefault(parts[0], []).append(float(parts[7]))
        mean = {k: np.mean(v) for k, v in eps.items()}
        assert mean["0"] < mean["-10"]


class TestMain:
    def test_cli_error_reporting(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("phy.warp = 9\n")
        status = main(["run-fedavg", str(bad)])
        assert status == 2
        assert "phy.warp" in capsys.readouterr().err

    def test_cli_end_to_end(self, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text(FAST_FED)
        status = main(["run-fedavg", str(cfgfile), "--out", str(tmp_path / "o"),
                       "--seed", "5"])
        assert status == 0
        assert (tmp_path / "o" / "fedavg_trace.csv").exists()
