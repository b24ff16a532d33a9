"""The `etpasim config` command. Lists the user settings, sets one from the
command line, or walks the user through one setting interactively (set,
skip or reset)."""

import logging

from etpasim.errors import UsageError
from etpasim.settings import EtpasimConfig, init_settings
from etpasim.utils import convert_str_to_value, yprint

logger = logging.getLogger(__name__)


def config_settings(args):
    config_singleton = init_settings(args.config_filepath)
    key = args.key

    if args.reset:
        config_singleton.reset_settings()
        return

    if key is None:
        yprint(config_singleton.list_settings())
        return

    try:
        config_singleton.read_value(key)
    except KeyError:
        raise UsageError(f"{key} is not a valid etpasim config key!")

    if args.value is not None:
        value = convert_str_to_value(args.value)
        config_singleton.write_value(key, value)
        print(f"You set {config_singleton.read_display_name(key)} to {value}")
        return

    try:
        _config_core_var(key)
    except KeyboardInterrupt:
        return


def _config_core_var(var_name):
    config_singleton = init_settings()

    display_name = config_singleton.read_display_name(var_name)
    desc = config_singleton.read_description(var_name)
    default = getattr(EtpasimConfig(), var_name).value

    print(f"\n=== Configure {display_name} ===")
    print(f"*** {desc} ***\n")
    print(f"Current value: {config_singleton.read_value(var_name)}")
    while True:
        res = input(
            f"Please type in the new value for {display_name} (S to skip, R to reset): \n"
        )
        if res == "S":
            break
        if res == "R":
            _res = input(
                f"The current value {config_singleton.read_value(var_name)} will be reset to {default}, proceed (y/[n])? "
            )
            if _res == "y":
                break
            elif (not _res) or (_res == "n"):
                print("")
                continue
            else:
                print(f"Invalid choice: {_res}")
        else:
            break

    if res == "R":
        config_singleton.write_value(var_name, default)
        print(f"You reset the {display_name} setting")
    elif res != "S":
        config_singleton.write_value(var_name, convert_str_to_value(res))
        print(f"You set {display_name} to {res}")
    else:
        print(f"You skipped the {display_name} setting")
