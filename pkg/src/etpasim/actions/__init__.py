"""Top-level CLI actions. `show_info` prints the version and the user
settings; sub-command handlers live in their own modules (simulate,
analyze, ingest, hom_fit, bound, config, preset)."""

from etpasim.presets import list_presets
from etpasim.settings import init_settings
from etpasim.utils import get_etpasim_version, yprint


def show_info(args):
    config_singleton = init_settings(args.config_filepath)

    info = {
        "name": "etpasim",
        "version": get_etpasim_version(),
        "settings-file path": config_singleton.config_path,
        "output root": config_singleton.read_value("ETPASIM_OUTPUT_ROOT"),
        "logging directory": config_singleton.read_value("ETPASIM_LOG_DIRECTORY"),
        "logging level": config_singleton.read_value("ETPASIM_LOG_LEVEL"),
        "workers": config_singleton.read_value("ETPASIM_WORKERS"),
        "event limit": config_singleton.read_value("ETPASIM_EVENT_LIMIT"),
        "presets": list_presets(),
    }

    yprint(info)
