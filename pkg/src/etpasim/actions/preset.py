"""The `etpasim preset` command: list the built-in presets or print one."""

from etpasim.presets import list_presets, preset_text


def show_preset(args):
    if args.preset_name is None:
        for name in list_presets():
            print(name)
        return

    print(preset_text(args.preset_name), end="")
