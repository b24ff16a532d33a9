"""Built-in experiment presets and the config loader used by every command.

`--config` takes either a preset name or a YAML file (or YAML string)."""

import logging
import os
from importlib import resources
from typing import Any, Mapping, Union

import yaml

from etpasim.core import ExperimentConfig, validate_config
from etpasim.errors import ConfigLoadError, EtpaIOError
from etpasim.utils import load_config

logger = logging.getLogger(__name__)

PRESET_PACKAGE = "etpasim"
PRESET_FOLDER = "built_in_presets"


def _preset_files():
    return resources.files(PRESET_PACKAGE).joinpath(PRESET_FOLDER)


def list_presets() -> list[str]:
    return sorted(
        f.name[: -len(".yaml")]
        for f in _preset_files().iterdir()
        if f.name.endswith(".yaml")
    )


def load_preset(name: str) -> dict[str, Any]:
    if name not in list_presets():
        raise ConfigLoadError(
            f"Unknown preset '{name}', available: {', '.join(list_presets())}"
        )
    text = _preset_files().joinpath(f"{name}.yaml").read_text()
    return yaml.safe_load(text)


def preset_text(name: str) -> str:
    load_preset(name)  # raises on unknown names
    return _preset_files().joinpath(f"{name}.yaml").read_text()


def load_experiment_config(
    source: Union[str, Mapping[str, Any], ExperimentConfig],
) -> ExperimentConfig:
    """
    Build a validated ExperimentConfig from a preset name, a YAML path, a YAML
    string, a mapping or an existing config.

    Raises
    ------
    EtpaIOError
        A .yaml/.yml path that does not exist.
    ConfigLoadError
        Unparseable YAML or unknown preset.
    ConfigValidationError
        Any invariant violation, with every offending field listed.
    """
    if isinstance(source, ExperimentConfig):
        return validate_config(source)
    if isinstance(source, Mapping):
        return validate_config(source)

    if source in list_presets():
        logger.debug(f"Using built-in preset {source}")
        return validate_config(load_preset(source))

    if source.endswith((".yaml", ".yml")) and not os.path.exists(source):
        raise EtpaIOError(f"Config file {source} not found")

    data = load_config(source)
    if data is None:
        raise ConfigLoadError("No experiment config given")
    return validate_config(data)
