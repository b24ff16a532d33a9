import os
from unittest.mock import MagicMock

import pytest

from etpasim.archive import (
    COUNTS_NAME,
    CONFIG_NAME,
    MANIFEST_NAME,
    file_sha256,
    find_run_config,
    load_manifest,
)
from etpasim.core import Arm
from etpasim.errors import ConfigLoadError, ConfigValidationError, EtpaIOError
from etpasim.logger.event import Events
from etpasim.presets import list_presets, load_experiment_config, preset_text
from etpasim.records import read_counts_csv
from etpasim.sweep import run_simulation


class TestPresets:
    def test_built_in_presets(self):
        assert {"zntpp_noncollinear", "rhb_collinear", "rhb_noncollinear"} <= set(
            list_presets()
        )

    @pytest.mark.parametrize(
        "name", ["zntpp_noncollinear", "zntpp_collinear", "rhb_collinear", "rhb_noncollinear"]
    )
    def test_presets_validate(self, name):
        config = load_experiment_config(name)
        assert config.name == name

    def test_preset_text(self):
        assert "zntpp_noncollinear" in preset_text("zntpp_noncollinear")

    def test_unknown_preset(self):
        with pytest.raises(ConfigLoadError):
            preset_text("nope")

    def test_missing_yaml(self, tmp_path):
        with pytest.raises(EtpaIOError):
            load_experiment_config(str(tmp_path / "missing.yaml"))

    def test_yaml_string(self):
        config = load_experiment_config("{name: inline, seed: 3}")
        assert config.name == "inline"
        assert config.seed == 3

    def test_every_error_reported(self):
        with pytest.raises(ConfigValidationError) as e:
            load_experiment_config(
                {"channel": {"eps1": 1.5}, "detector": {"integration_time": -1}}
            )
        paths = [path for path, _ in e.value.errors]
        assert "channel.eps1" in paths
        assert "detector.integration_time" in paths


class TestRunSimulation:
    def test_writes_run_directory(self, small_config, tmp_path):
        run = run_simulation(small_config, output_dir=str(tmp_path / "run"))

        for name in (COUNTS_NAME, CONFIG_NAME, MANIFEST_NAME):
            assert os.path.exists(tmp_path / "run" / name)
        assert read_counts_csv(run.counts_path) == run.records
        assert find_run_config(run.counts_path) == str(tmp_path / "run" / CONFIG_NAME)

    def test_manifest(self, small_config, tmp_path):
        run = run_simulation(small_config, output_dir=str(tmp_path / "run"), replicas=2)
        manifest = load_manifest(str(tmp_path / "run"))

        assert manifest["config_hash"] == run.plan.digest
        assert manifest["base_seed"] == 42
        assert manifest["mode"] == "rate_level"
        assert manifest["replicas"] == 2
        assert manifest["records"] == 2 * 24
        assert manifest["counts_sha256"] == file_sha256(run.counts_path)
        assert "SeedSequence" in manifest["seed_scheme"]

    def test_same_seed_same_bytes(self, small_config, tmp_path):
        first = run_simulation(small_config, output_dir=str(tmp_path / "a"), seed=5)
        second = run_simulation(small_config, output_dir=str(tmp_path / "b"), seed=5)
        third = run_simulation(small_config, output_dir=str(tmp_path / "c"), seed=6)

        assert file_sha256(first.counts_path) == file_sha256(second.counts_path)
        assert file_sha256(first.counts_path) != file_sha256(third.counts_path)

    def test_zntpp_preset_sweep(self, tmp_path):
        run = run_simulation(
            "zntpp_noncollinear", output_dir=str(tmp_path / "run"), noiseless=True
        )
        sample = [r for r in run.records if r.arm == Arm.SAMPLE]
        reference = [r for r in run.records if r.arm == Arm.REFERENCE]

        assert len(sample) == 64
        assert len(reference) == 64

    def test_default_output_root(self, small_config, config_test_settings):
        run = run_simulation(small_config)
        root = config_test_settings.read_value("ETPASIM_OUTPUT_ROOT")

        assert run.output_dir.startswith(root)
        assert os.path.basename(run.output_dir).startswith("small-")

    def test_observer_events(self, small_config, tmp_path):
        observer = MagicMock()
        run_simulation(small_config, output_dir=str(tmp_path / "run"), observer=observer)

        events = [c.args[0] for c in observer.update.call_args_list]
        assert events[0] == Events.SWEEP_START
        assert events[-1] == Events.SWEEP_END
        assert events.count(Events.SWEEP_STEP) == 24
