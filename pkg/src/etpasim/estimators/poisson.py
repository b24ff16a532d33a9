"""First-order (delta-method) errors of count-based expressions, taking
var(N) = N for every count."""

import math
from enum import Enum
from typing import Optional, Sequence

from etpasim.core import SECONDS_PER_NS, ChannelParams
from etpasim.errors import DegenerateRateError, UsageError


class Expression(str, Enum):
    RATE = "rate"  # (N,)
    CORRECTED_RATE = "corrected_rate"  # (N, N_dark)
    G2_ZERO = "g2_zero"  # (N1, N2, N12)
    BIPHOTON_RATE = "biphoton_rate"  # (N1, N2, N12)


_ARITY = {
    Expression.RATE: 1,
    Expression.CORRECTED_RATE: 2,
    Expression.G2_ZERO: 3,
    Expression.BIPHOTON_RATE: 3,
}


def _gradient(counts, expression, t, tau_c, channel) -> list[float]:
    if expression == Expression.RATE:
        return [1 / t]

    if expression == Expression.CORRECTED_RATE:
        return [1 / t, -1 / t]

    n1, n2, n12 = counts
    if expression == Expression.G2_ZERO:
        if n1 == 0 or n2 == 0:
            raise DegenerateRateError("g2(0) needs non-zero singles counts")
        # g2 = N12 T / (tau_c N1 N2)
        g2 = n12 * t / (tau_c * n1 * n2)
        return [-g2 / n1, -g2 / n2, t / (tau_c * n1 * n2)]

    if n12 == 0:
        raise DegenerateRateError("the biphoton rate needs non-zero coincidences")
    # R2 = k N1 N2 / (T N12)
    k = channel.beta12 / (channel.beta1 * channel.beta2)
    r = k * n1 * n2 / (t * n12)
    return [k * n2 / (t * n12), k * n1 / (t * n12), -r / n12]


def propagate_poisson_error(
    counts: Sequence[int],
    expression: Expression,
    integration_time: float = 1.0,
    tau_c: Optional[float] = None,
    channel: Optional[ChannelParams] = None,
) -> float:
    """
    One-sigma error of an expression of raw counts.

    Parameters
    ----------
    counts : sequence of int
        Counts in the order noted on each Expression member.
    expression : Expression
        Which estimator the counts feed.
    integration_time : float
        Seconds over which the counts were taken.
    tau_c : float, optional
        Coincidence window in ns, needed for G2_ZERO.
    channel : ChannelParams, optional
        Beam-splitter routing, needed for BIPHOTON_RATE.

    Returns
    -------
    float
        sqrt(sum_i (df/dN_i)^2 N_i). A zero count contributes nothing.
    """
    expression = Expression(expression)
    counts = [int(n) for n in counts]
    if len(counts) != _ARITY[expression]:
        raise UsageError(
            f"{expression.value} takes {_ARITY[expression]} counts, got {len(counts)}"
        )
    if any(n < 0 for n in counts):
        raise UsageError("counts must be >= 0")
    if integration_time <= 0:
        raise UsageError("integration time must be > 0")
    if expression == Expression.G2_ZERO and (tau_c is None or tau_c <= 0):
        raise UsageError("g2(0) errors need the coincidence window tau_c > 0")
    if expression == Expression.BIPHOTON_RATE and channel is None:
        raise UsageError("biphoton-rate errors need the channel routing")

    tau_s = tau_c * SECONDS_PER_NS if tau_c else None
    grad = _gradient(counts, expression, integration_time, tau_s, channel)
    return math.sqrt(sum(g * g * n for g, n in zip(grad, counts)))
