"""Events fired by a sweep so loggers can follow its progress."""


class Events:
    SWEEP_START = "sweep:start"
    SWEEP_STEP = "sweep:step"
    SWEEP_END = "sweep:end"
