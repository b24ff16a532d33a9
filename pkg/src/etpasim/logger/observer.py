"""Base classes for sweep observers. _Tracker counts records and measures
throughput."""

from datetime import datetime

from etpasim.logger.event import Events


class Observer:
    def update(self, event, payload):
        raise NotImplementedError


class _Tracker(Observer):
    def __init__(self):
        self._records = 0
        self._start_time = None

    def _update_tracker(self, event, payload):
        if event == Events.SWEEP_START:
            self._records = 0
            self._start_time = datetime.now()
        elif event == Events.SWEEP_STEP:
            self._records += 1

    def _time_metrics(self):
        """(elapsed seconds, records per second) since SWEEP_START."""
        if self._start_time is None:
            return 0.0, 0.0
        elapsed = (datetime.now() - self._start_time).total_seconds()
        rate = self._records / elapsed if elapsed > 0 else 0.0
        return elapsed, rate
