import logging

import pytest


@pytest.fixture(autouse=True)
def config_test_settings(tmp_path):
    """Point the settings singleton at a throwaway settings file, with logs and
    runs kept under the test's tmp_path."""
    from etpasim.log import get_logging_manager
    from etpasim.settings import ConfigSingleton

    ConfigSingleton._instance = None
    config_singleton = ConfigSingleton(str(tmp_path / "settings" / "config.yaml"))
    config_singleton.write_value("ETPASIM_LOG_DIRECTORY", str(tmp_path / "logs"))
    config_singleton.write_value("ETPASIM_OUTPUT_ROOT", str(tmp_path / "runs"))

    yield config_singleton

    get_logging_manager().stop_listener()
    # The CLI detaches the package logger from the root logger
    ns_logger = logging.getLogger("etpasim")
    ns_logger.handlers.clear()
    ns_logger.propagate = True
    ConfigSingleton._instance = None


@pytest.fixture
def small_config():
    """A quick sweep: 4 pump powers, solvent plus 2 concentrations, both arms."""
    from etpasim.core import validate_config

    return validate_config(
        {
            "name": "small",
            "source": {"pairs_per_mw": 2.0e5},
            "sample": {"sigma_e_true": 1.0e-18},
            "channel": {"eps1": 0.5, "eps2": 0.5, "kappa1": 0.8, "kappa2": 0.8},
            "detector": {"dark_rate_1": 200.0, "dark_rate_2": 200.0},
            "sweep": {
                "pump_powers": [5.0, 10.0, 15.0, 20.0],
                "concentrations": [0.0, 100.0e-6, 500.0e-6],
                "delays": [0.0],
                "arms": ["sample", "reference"],
            },
            "seed": 42,
        }
    )
