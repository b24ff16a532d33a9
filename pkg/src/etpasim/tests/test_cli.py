import os

import pytest
import yaml

from etpasim.__main__ import build_parser, run
from etpasim.archive import COUNTS_NAME, write_yaml
from etpasim.core import CountRecord
from etpasim.records import write_counts_csv
from etpasim.report import HOM_FIT_NAME, REPORT_TABLE_NAME
from etpasim.tests.utils import with_overrides


@pytest.fixture
def config_file(small_config, tmp_path):
    path = str(tmp_path / "small.yaml")
    write_yaml(small_config.model_dump(mode="json"), path)
    return path


def _simulate(config_file, out, *extra):
    assert run(["simulate", "-c", config_file, "-o", out, "-v", "0", *extra]) == 0
    return os.path.join(out, COUNTS_NAME)


class TestParser:
    def test_simulate_defaults(self):
        args = build_parser().parse_args(["simulate", "-c", "zntpp_noncollinear"])

        assert args.mode == "rate"
        assert args.seed is None
        assert not args.noiseless

    def test_simulate_needs_config(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["simulate"])

    def test_log_level(self):
        args = build_parser().parse_args(["-l", "DEBUG", "bound", "1", "1"])
        assert args.log_level == "DEBUG"
        assert build_parser().parse_args(["bound", "1", "1"]).log_level is None


class TestCommands:
    def test_info(self, capsys):
        assert run([]) == 0
        out = capsys.readouterr().out
        assert out.startswith("name: etpasim")
        assert "zntpp_noncollinear" in out

    def test_bound(self, capsys):
        assert run(["bound", "1e5", "10e-6"]) == 0
        out = yaml.safe_load(capsys.readouterr().out)
        assert out["sigma bound [cm^2]"] == pytest.approx(5.25e-19, rel=5e-3)

    def test_preset_list(self, capsys):
        assert run(["preset"]) == 0
        assert "rhb_collinear" in capsys.readouterr().out.splitlines()

    def test_preset_show(self, capsys):
        assert run(["preset", "rhb_collinear"]) == 0
        assert yaml.safe_load(capsys.readouterr().out)["name"] == "rhb_collinear"

    def test_config_set(self, config_test_settings, capsys):
        assert run(["config", "ETPASIM_WORKERS", "3"]) == 0
        assert config_test_settings.read_value("ETPASIM_WORKERS") == 3

        assert run(["config"]) == 0
        assert "ETPASIM_WORKERS: 3" in capsys.readouterr().out

    def test_config_unknown_key(self):
        assert run(["config", "ETPASIM_THEME", "dark"]) == 1

    def test_simulate_then_analyze(self, config_file, tmp_path, capsys):
        counts = _simulate(config_file, str(tmp_path / "run"), "--noiseless")
        capsys.readouterr()

        assert run(["analyze", counts]) == 0
        assert "small: sample arm, delay 0 fs" in capsys.readouterr().out
        assert os.path.exists(tmp_path / "run" / "analysis" / REPORT_TABLE_NAME)

    def test_event_mode(self, small_config, tmp_path):
        short = str(tmp_path / "short.yaml")
        config = with_overrides(small_config, detector={"integration_time": 0.2})
        write_yaml(config.model_dump(mode="json"), short)
        counts = _simulate(
            short, str(tmp_path / "run"), "-m", "event", "-r", "1", "-s", "3"
        )
        with open(os.path.join(os.path.dirname(counts), "manifest.yaml")) as f:
            manifest = yaml.safe_load(f)
        assert manifest["mode"] == "event_level"
        assert manifest["base_seed"] == 3

    def test_ingest(self, config_file, tmp_path, capsys):
        counts = _simulate(config_file, str(tmp_path / "run"))
        capsys.readouterr()

        assert run(["ingest", counts, "-o", str(tmp_path / "clean")]) == 0
        out = yaml.safe_load(capsys.readouterr().out)
        assert out["records"] == 24
        assert os.path.exists(tmp_path / "clean" / COUNTS_NAME)

    def test_hom_fit(self, tmp_path, capsys):
        records = [
            CountRecord(
                delay_tau=50.0 * i,
                pump_power=10.0,
                concentration=0.0,
                integration_time=10.0,
                singles1=10**6,
                singles2=10**6,
                coincidences=int(10**5 * (1 - 0.9 * 2.0 ** (-((i / 3) ** 2)))),
            )
            for i in range(-8, 9)
        ]
        counts = write_counts_csv(records, str(tmp_path / "scan.csv"))

        assert run(["hom-fit", counts, "--shape", "dip"]) == 0
        out = yaml.safe_load(capsys.readouterr().out)
        assert out["shape"] == "dip"
        assert os.path.exists(tmp_path / HOM_FIT_NAME)


class TestExitCodes:
    def test_invalid_config(self, tmp_path):
        bad = str(tmp_path / "bad.yaml")
        write_yaml({"channel": {"eps1": 2.0}}, bad)
        assert run(["simulate", "-c", bad, "-o", str(tmp_path / "run")]) == 1

    def test_missing_counts(self, tmp_path):
        assert run(["analyze", str(tmp_path / "nope.csv")]) == 2

    def test_fit_failure(self, tmp_path, mocker):
        mocker.patch(
            "etpasim.estimators.fitting.curve_fit",
            side_effect=RuntimeError("Optimal parameters not found"),
        )
        records = [
            CountRecord(
                delay_tau=50.0 * i,
                pump_power=10.0,
                concentration=0.0,
                integration_time=10.0,
                singles1=10**6,
                singles2=10**6,
                coincidences=10**5 - 5000 * (8 - abs(i)),
            )
            for i in range(-8, 9)
        ]
        counts = write_counts_csv(records, str(tmp_path / "scan.csv"))

        assert run(["hom-fit", counts]) == 3

    def test_analyze_without_solvent(self, config_file, tmp_path):
        counts = _simulate(config_file, str(tmp_path / "run"), "--noiseless")
        lines = open(counts).read().splitlines()
        # Keep the units and header lines, drop the solvent rows
        kept = lines[:2] + [line for line in lines[2:] if float(line.split(",")[4]) != 0]
        with open(counts, "w") as f:
            f.write("\n".join(kept) + "\n")

        assert run(["analyze", counts]) == 1
