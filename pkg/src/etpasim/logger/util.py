"""ANSI colour codes for terminal tables."""


class Colours:
    BOLD = "\033[1m"
    CYAN = "\033[96m"
    END = "\033[0m"
    PURPLE = "\033[95m"
    YELLOW = "\033[93m"

    @classmethod
    def _wrap_colour(cls, s, colour):
        return colour + s + cls.END

    @classmethod
    def black(cls, s):
        return cls._wrap_colour(s, cls.END)

    @classmethod
    def bold(cls, s):
        return cls._wrap_colour(s, cls.BOLD)

    @classmethod
    def cyan(cls, s):
        """Reference-arm rows."""
        return cls._wrap_colour(s, cls.CYAN)

    @classmethod
    def purple(cls, s):
        """Solvent rows."""
        return cls._wrap_colour(s, cls.PURPLE)

    @classmethod
    def yellow(cls, s):
        """Values consistent with zero."""
        return cls._wrap_colour(s, cls.YELLOW)
