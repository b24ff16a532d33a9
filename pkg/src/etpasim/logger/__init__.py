"""Terminal output for sweeps and reports. ScreenLogger subscribes to the
sweep events (start, step, end) and also prints the cross-section table."""

from etpasim.logger.event import Events
from etpasim.logger.observer import _Tracker
from etpasim.logger.util import Colours

STEP_COLUMNS = [
    "record",
    "arm",
    "conc [M]",
    "delay [fs]",
    "pump [mW]",
    "singles1",
    "singles2",
    "coinc",
]


def _get_default_logger(verbose):
    return ScreenLogger(verbose=verbose)


class ScreenLogger(_Tracker):
    _default_cell_size = 10
    _default_precision = 4

    def __init__(self, verbose=2):
        self._verbose = verbose
        self._header_length = None
        super(ScreenLogger, self).__init__()

    @property
    def verbose(self):
        return self._verbose

    @verbose.setter
    def verbose(self, v):
        self._verbose = v

    def _format_number(self, x):
        if isinstance(x, int):
            s = "{x:< {s}}".format(x=x, s=self._default_cell_size)
        elif isinstance(x, str):
            s = "{x:<{s}}".format(x=x, s=self._default_cell_size)
        else:
            s = "{x:< {s}.{p}}".format(
                x=x, s=self._default_cell_size, p=self._default_precision
            )

        if len(s) > self._default_cell_size:
            if "e" in s:
                # Keep the exponent, shorten the mantissa
                mantissa, exponent = s.strip().split("e")
                keep = self._default_cell_size - len(exponent) - 2
                return (mantissa[:keep] + "e" + exponent).ljust(self._default_cell_size)
            if "." in s:
                return s[: self._default_cell_size]
            return s[: self._default_cell_size - 3] + "..."
        return s

    def _format_key(self, key):
        s = "{key:^{s}}".format(key=key, s=self._default_cell_size)
        if len(s) > self._default_cell_size:
            return s[: self._default_cell_size - 3] + "..."
        return s

    def _line(self, cells):
        line = "| " + " | ".join(cells) + " |"
        return line

    def _header(self, keys):
        line = self._line([self._format_key(k) for k in keys])
        self._header_length = len(line)
        return line + "\n" + ("-" * self._header_length)

    def _step(self, record):
        if record.arm.value == "reference":
            colour = Colours.cyan
        elif record.concentration == 0:
            colour = Colours.purple
        else:
            colour = Colours.black

        cells = [
            self._format_number(self._records + 1),
            self._format_number(record.arm.value),
            self._format_number(record.concentration),
            self._format_number(record.delay_tau),
            self._format_number(record.pump_power),
            self._format_number(record.singles1),
            self._format_number(record.singles2),
            self._format_number(record.coincidences),
        ]
        return self._line(list(map(colour, cells)))

    def update(self, event, payload=None):
        line = ""
        if event == Events.SWEEP_START:
            line = self._header(STEP_COLUMNS) + "\n"
        elif event == Events.SWEEP_STEP:
            if self._verbose > 1:
                line = self._step(payload) + "\n"
        elif event == Events.SWEEP_END:
            elapsed, rate = self._time_metrics()
            line = (
                "=" * (self._header_length or 40)
                + f"\n{self._records} records in {elapsed:.1f} s ({rate:.1f}/s)\n"
            )

        if self._verbose and line:
            print(line, end="")
        self._update_tracker(event, payload)

    def _estimate_cells(self, estimate):
        if estimate is None:
            return ["-".center(self._default_cell_size)] * 2
        cells = [
            self._format_number(estimate.value),
            self._format_number(estimate.abs_error),
        ]
        if estimate.consistent_with_zero:
            return list(map(Colours.yellow, cells))
        return cells

    def print_report(self, table):
        """Print a ReportTable, one row per concentration. Values that are
        consistent with zero are highlighted."""
        keys = ["conc [M]"]
        for label in ("C.C.", "S.C.", "g2", "slopes"):
            keys += [label, "+/-"]
        keys += ["bound CC", "bound SC"]

        print(Colours.bold(f"{table.title}"))
        print(self._header(keys))
        for row in table.rows:
            cells = [self._format_number(row.concentration)]
            for estimate in (row.standard_cc, row.standard_sc, row.g2, row.slope_ratio):
                cells += self._estimate_cells(estimate)
            cells += [
                self._format_number(row.bound_cc),
                self._format_number(row.bound_sc),
            ]
            print(self._line(cells))
        print("=" * self._header_length)
        for row in table.rows:
            if row.note:
                print(f"c={row.concentration:g} M: {row.note}")
