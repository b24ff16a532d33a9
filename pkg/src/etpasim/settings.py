"""
Reads and writes etpasim's user settings (stored as a YAML file on disk).

These are tool settings, not experiment parameters: logging level and
directory, default output root, worker count for sweeps and the event-level
tractability guard. Access is through a singleton (ConfigSingleton) so all
parts of the app see the same state.

Run `etpasim config` from the CLI to inspect or change settings.
"""

import logging
import os
import platform
from typing import Any, Dict, Optional, Union

import yaml
from pydantic import BaseModel, Field, ValidationError

from etpasim.errors import ConfigLoadError

logger = logging.getLogger(__name__)


class Setting(BaseModel):
    """
    Setting model to store one configuration entry.

    Attributes
    ----------
    display_name : str
        The display name of the setting.
    description : str
        A brief description of the setting.
    value : Optional[Union[bool, int, float, str]]
        The value of the setting which can be of different types.
    is_path : bool
        Whether the value is a filesystem path.
    """

    display_name: str
    description: str
    value: Optional[Union[bool, int, float, str]] = Field(
        None, description="The value of the setting which can be of different types."
    )
    is_path: bool


class EtpasimConfig(BaseModel):
    """
    EtpasimConfig model holding every user-level setting.

    Attributes
    ----------
    ETPASIM_LOG_LEVEL : Setting
        Setting for the logging level.
    ETPASIM_LOG_DIRECTORY : Setting
        Setting for the location of the daily logfiles.
    ETPASIM_OUTPUT_ROOT : Setting
        Setting for the directory used when no --out is given.
    ETPASIM_WORKERS : Setting
        Setting for the number of worker processes used by sweeps.
    ETPASIM_EVENT_LIMIT : Setting
        Setting for the maximum expected number of events per event-level record.
    """

    ETPASIM_LOG_LEVEL: Setting = Setting(
        display_name="logging level",
        description="Logging level for the etpasim logger",
        value="WARNING",
        is_path=False,
    )
    ETPASIM_LOG_DIRECTORY: Setting = Setting(
        display_name="log directory",
        description="Directory where daily log files will be stored",
        value="logs",
        is_path=True,
    )
    ETPASIM_OUTPUT_ROOT: Setting = Setting(
        display_name="output root",
        description="This setting (ETPASIM_OUTPUT_ROOT) tells etpasim where to write runs when --out is omitted",
        value="etpasim-runs",
        is_path=True,
    )
    ETPASIM_WORKERS: Setting = Setting(
        display_name="workers",
        description="Number of worker processes for sweeps; 1 runs everything in-process",
        value=1,
        is_path=False,
    )
    ETPASIM_EVENT_LIMIT: Setting = Setting(
        display_name="event limit",
        description="Maximum expected number of photon pairs plus dark clicks in one event-level record",
        value=1e8,
        is_path=False,
    )


class ConfigSingleton:
    _instance = None

    def __new__(cls, config_path: str = None, user_flag: bool = False):
        if cls._instance is None:
            cls._instance = super(ConfigSingleton, cls).__new__(cls)
            cls._instance.user_flag = user_flag
            cls._instance._config = cls.load_or_create_config(config_path)
            cls._instance.config_path = config_path
        return cls._instance

    @classmethod
    def load_or_create_config(cls, config_path: str) -> EtpasimConfig:
        """
        Loads the config file from a given yaml file if it exists,
        otherwise creates an instance of EtpasimConfig with default settings.

        Parameters
        ----------
        config_path: str
            Path to the user config file.

        Returns
        -------
        EtpasimConfig
            An instance of EtpasimConfig populated with the data from the config file,
            or with default settings if the file does not exist.
        """
        if os.path.exists(config_path):
            with open(config_path, "r") as config_file:
                config_data = yaml.safe_load(config_file) or {}

            for key, value in config_data.items():
                if isinstance(value, dict) and "value" in value:
                    config_data[key] = Setting(
                        display_name=value.get("display_name", key),
                        description=value.get(
                            "description",
                            f"Setting for {key.replace('_', ' ').lower()}",
                        ),
                        value=value["value"],
                        is_path=value.get("is_path", False),
                    )
                else:
                    # If it's a direct value, wrap it in a Setting
                    config_data[key] = Setting(
                        display_name=key,
                        description=f"Setting for {key.replace('_', ' ').lower()}",
                        value=value,
                        is_path=False,
                    )

            try:
                return EtpasimConfig(**config_data)
            except ValidationError as e:
                logger.error(f"Error validating settings file: {e}")
                raise
        else:
            if cls._instance.user_flag:
                err_msg = f"Error loading settings {config_path}: invalid path."
                raise ConfigLoadError(err_msg)

            return EtpasimConfig()

    @property
    def config(self) -> EtpasimConfig:
        return self._config

    def update_and_save_config(self, updates: Dict[str, Any]) -> None:
        """Saves changes to the settings file.

        Parameters
        ----------
        updates : dict of {str: Any}
            Keys and new values to update in the YAML file.
        """
        config_data = self._config.model_dump(by_alias=True)

        for key, value in updates.items():
            if isinstance(config_data.get(key), dict) and not isinstance(value, dict):
                config_data[key]["value"] = value
            else:
                config_data[key] = value

        folder = os.path.dirname(self.config_path)
        if folder:
            os.makedirs(folder, exist_ok=True)
        with open(self.config_path, "w") as file:
            yaml.dump(config_data, file, default_flow_style=False)

        self._config = EtpasimConfig(**config_data)

    def list_settings(self) -> Dict[str, Any]:
        """Map of every setting name to its current value."""
        return {
            k: v["value"] for k, v in self._config.model_dump(by_alias=True).items()
        }

    def read_value(self, key: str, return_value_field: bool = True) -> Any:
        """
        Look up a setting.

        Parameters
        ----------
        key: str
            The key to search for.
        return_value_field: bool
            If True, returns the 'value' field of the setting; otherwise, returns the entire setting.

        Raises
        ------
        KeyError
            If the key is not found in the configuration.
        """
        data = self._config.model_dump(by_alias=True)
        if key in data:
            return data[key]["value"] if return_value_field else data[key]
        raise KeyError(f"Key '{key}' not found in the configuration.")

    def read_description(self, key: str) -> str:
        return self.read_value(key, return_value_field=False)["description"]

    def read_display_name(self, key: str) -> str:
        return self.read_value(key, return_value_field=False)["display_name"]

    def write_value(self, key: str, value: Any) -> None:
        """Set a new value for one setting and persist it.

        Parameters
        ----------
        key: str
            The field that is being given a new value.
        value: Any
            The value that is being saved.
        """
        # Raises KeyError for unknown settings
        self.read_value(key)
        logger.info(f"writing to settings file, setting: {key} = {value}")
        self.update_and_save_config({key: value})

    def reset_settings(self) -> None:
        """Resets all the settings to their default values."""
        default_config = EtpasimConfig()
        self.update_and_save_config(default_config.model_dump(by_alias=True))
        print(
            f"All settings have been reset to their default values in {self.config_path}"
        )


def init_settings(config_arg: str = None) -> ConfigSingleton:
    """
    Builds and returns an instance of the ConfigSingleton class.

    Parameters
    ----------
    config_arg: str
        a path to a settings file passed through the --config_filepath argument

    Returns
    -------
    config_singleton: ConfigSingleton
        an instance of the ConfigSingleton class
    """
    user_flag = False

    if config_arg is None:
        config_path = get_user_config_folder()
        file_path = os.path.join(config_path, "etpasim", "config.yaml")
    else:
        file_path = config_arg
        user_flag = True

    config_singleton = ConfigSingleton(file_path, user_flag)
    return config_singleton


def get_user_config_folder() -> str:
    """
    Method for getting the path to the user specific folder on the current systems OS.

    Returns
    -------
    str
        The path to the user-specific configuration folder. This will be:
        - `%APPDATA%` or `%LOCALAPPDATA%` on Windows,
        - `~/Library/Application Support` on macOS,
        - `~/.config` on Linux.

    Raises
    ------
    OSError
        If the operating system is not supported.
    """
    system = platform.system()

    if system == "Windows":
        config_folder = os.getenv("APPDATA") or os.getenv("LOCALAPPDATA")
    elif system == "Darwin":
        config_folder = os.path.expanduser("~/Library/Application Support")
    elif system == "Linux":
        config_folder = os.path.expanduser("~/.config")
    else:
        raise OSError("Unsupported operating system")

    return config_folder
