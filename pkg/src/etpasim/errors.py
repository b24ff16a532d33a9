"""etpasim's exception classes. Every error raised on purpose by the package
derives from EtpaError and carries the process exit code the CLI should use
(1 validation, 2 I/O, 3 fit failure)."""

from typing import Iterable, Optional


class EtpaError(Exception):
    exit_code = 1


class ConfigValidationError(EtpaError):
    def __init__(self, errors: Iterable[tuple[str, str]], message=None):
        self.errors = list(errors)
        if message is None:
            lines = [f"  {path}: {msg}" for path, msg in self.errors]
            message = "Invalid experiment config:\n" + "\n".join(lines)
        super().__init__(message)


class ConfigLoadError(EtpaError):
    def __init__(self, message="Config Error!"):
        super().__init__(message)


class UsageError(EtpaError):
    pass


class ModelError(EtpaError):
    pass


class DegenerateRateError(EtpaError):
    pass


class TractabilityError(EtpaError):
    pass


class MisalignedSeriesError(EtpaError):
    pass


class SchemaError(EtpaError):
    def __init__(self, message, diagnostics: Optional[list[str]] = None):
        self.diagnostics = diagnostics or []
        if self.diagnostics:
            message = message + "\n" + "\n".join(f"  - {d}" for d in self.diagnostics)
        super().__init__(message)


class EtpaIOError(EtpaError):
    exit_code = 2


class FitFailureError(EtpaError):
    exit_code = 3

    def __init__(self, message, residuals=None, params=None):
        self.residuals = residuals
        self.params = params
        if residuals is not None:
            message = (
                f"{message} (residual rms {_rms(residuals):.4g} over "
                f"{len(residuals)} points)"
            )
        super().__init__(message)


def _rms(values):
    values = list(values)
    if not values:
        return 0.0
    return (sum(v * v for v in values) / len(values)) ** 0.5
