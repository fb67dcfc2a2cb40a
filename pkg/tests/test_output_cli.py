import csv

import numpy as np
import pytest

from stackgame import ConfigurationError, bundled_scenario, emit_records, run_aggregate
from stackgame.cli import EXIT_INVALID, EXIT_OK, EXIT_TERMINATED, main
from stackgame.config import bundled_scenario_path
from stackgame.output import OUTPUT_FILES, fmt, iteration_header

LOG = str(bundled_scenario_path("log_aggregate"))
QUAD = str(bundled_scenario_path("quadratic_devices"))
NOISY = str(bundled_scenario_path("noisy_devices"))


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


class TestFormat:
    @pytest.mark.parametrize("value,text", [
        (None, ""), (float("nan"), ""), (3, "3"), (True, "true"), (0.1, "0.1"),
        (1 / 3, "0.3333333333333333")])
    def test_fmt(self, value, text):
        assert fmt(value) == text

    def test_round_trip_precision(self, rng):
        for x in rng.normal(size=100) * 10.0 ** rng.integers(-10, 10, size=100):
            assert float(fmt(x)) == x


class TestEmit:
    def test_files_and_schema(self, tmp_path):
        scenario = bundled_scenario("log_aggregate")
        records = run_aggregate(scenario)
        paths = emit_records(records, tmp_path, scenario)
        assert sorted(p.name for p in paths) == sorted(OUTPUT_FILES)
        rows = read_csv(tmp_path / "iterations.csv")
        assert rows[0] == iteration_header(2, 0)  # no relerr columns for a log truth
        assert len(rows) - 1 == len(records) * scenario.n_devices
        assert all(len(r) == len(rows[0]) for r in rows)
        assert rows[1][6] == "" and rows[3][8] == "range_test"
        summary = (tmp_path / "summary.txt").read_text()
        assert "termination: max_iters reached" in summary

    def test_satisfaction_slope_at_desired_point(self, tmp_path):
        scenario = bundled_scenario("log_aggregate")
        emit_records(run_aggregate(scenario), tmp_path, scenario)
        rows = read_csv(tmp_path / "plotdata_satisfaction.csv")[1:]
        data = np.array([[float(v) for v in r] for r in rows])
        y, f_true, f_hat = data[:, 0], data[:, 2], data[:, 3]
        assert y[0] == 0.0 and y[-1] == pytest.approx(10.0)
        i = int(np.argmin(np.abs(y - 6.5)))
        assert y[i] == pytest.approx(6.5)
        h = y[i + 1] - y[i - 1]
        slope_true = (f_true[i + 1] - f_true[i - 1]) / h
        slope_hat = (f_hat[i + 1] - f_hat[i - 1]) / h
        assert abs(slope_hat - slope_true) <= 0.05

    def test_relerr_plotdata(self, tmp_path):
        scenario = bundled_scenario("quadratic_devices")
        from stackgame import run_device_level
        records = run_device_level(scenario)
        emit_records(records, tmp_path, scenario)
        rows = read_csv(tmp_path / "plotdata_relerr.csv")
        assert rows[0] == ["iter", "device", "relerr_alpha_0", "relerr_alpha_1"]
        assert len(rows) - 1 == (len(records) - 2) * 10
        assert max(float(v) for r in rows[1:] for v in r[2:]) <= 1e-10

    def test_empty_records(self, tmp_path):
        with pytest.raises(ConfigurationError):
            emit_records([], tmp_path, bundled_scenario("log_aggregate"))

    def test_no_silent_overwrite(self, tmp_path):
        scenario = bundled_scenario("log_aggregate")
        records = run_aggregate(scenario)
        emit_records(records, tmp_path, scenario)
        with pytest.raises(ConfigurationError, match="refusing to overwrite"):
            emit_records(records, tmp_path, scenario)
        emit_records(records, tmp_path, scenario, force=True)


class TestCli:
    def test_run_aggregate(self, tmp_path):
        assert main(["run-aggregate", "--config", LOG, "--out", str(tmp_path / "o")]) == EXIT_OK
        assert all((tmp_path / "o" / n).exists() for n in OUTPUT_FILES)

    def test_existing_output_refused(self, tmp_path, capsys):
        out = str(tmp_path / "o")
        assert main(["run-aggregate", "--config", LOG, "--out", out]) == EXIT_OK
        assert main(["run-aggregate", "--config", LOG, "--out", out]) == EXIT_INVALID
        assert "--force" in capsys.readouterr().err
        assert main(["run-aggregate", "--config", LOG, "--out", out, "--force"]) == EXIT_OK

    def test_termination_exit_code(self, tmp_path, capsys):
        code = main(["run-aggregate", "--config", LOG, "--out", str(tmp_path), "--iters", "6"])
        assert code == EXIT_TERMINATED
        assert "not interior" in capsys.readouterr().err
        assert "terminated_early: true" in (tmp_path / "summary.txt").read_text()

    def test_invalid_config(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("beta = 0.5\nepsilon = -0.1\n[device]\nsat = log:1\n"
                       "gamma0 = (1,0)\ngamma1 = (2,0)\n")
        assert main(["run-devices", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_INVALID
        assert "line 2" in capsys.readouterr().err

    def test_missing_config(self, tmp_path):
        code = main(["run-devices", "--config", str(tmp_path / "none.cfg"), "--out", str(tmp_path)])
        assert code == EXIT_INVALID

    def test_aggregate_rejects_many_devices(self, tmp_path):
        assert main(["run-aggregate", "--config", QUAD, "--out", str(tmp_path)]) == EXIT_INVALID

    def test_run_devices_epsilon_override(self, tmp_path):
        out = tmp_path / "o"
        assert main(["run-devices", "--config", QUAD, "--out", str(out), "--epsilon", "0.1",
                     "--iters", "5"]) == EXIT_OK
        assert "epsilon: 0.1" in (out / "summary.txt").read_text()

    def test_sweep_layout(self, tmp_path):
        code = main(["sweep-epsilon", "--config", NOISY, "--out", str(tmp_path),
                     "--epsilons", "0.1,0.15", "--seeds", "2", "--iters", "6"])
        assert code == EXIT_OK
        for name in ("eps_0.1", "eps_0.15"):
            sub = tmp_path / name
            assert all((sub / n).exists() for n in OUTPUT_FILES)
            rows = read_csv(sub / "relerr_median.csv")
            assert rows[0][:3] == ["iter", "device", "runs"]
            assert {r[2] for r in rows[1:]} == {"2"}
            assert (sub / "scenario.cfg").read_text().count("[device]") == 10

    def test_sweep_bad_list(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["sweep-epsilon", "--config", NOISY, "--out", str(tmp_path),
                  "--epsilons", "a,b"])
