"""
Stochastic count generation.

Two samplers share one plan and one seeding scheme:

* rate level: Poisson draws around the analytic rates of `forward_model`
* event level: every pair is followed through absorption, routing and
  detection, clicks get timestamps and coincidences are found by window
  matching. It is the brute-force oracle for the analytic rates.

Each record owns a generator seeded from (base_seed, replica, sweep index), so
records can be produced in any order, in any process, with identical results.
"""

import logging
from enum import Enum
from functools import cached_property
from typing import Optional

import numpy as np
from pydantic import Field, ValidationError, model_validator

from etpasim.core import (
    MAX_SEED,
    Arm,
    CountRecord,
    EtpaModel,
    ExperimentConfig,
    SweepPoint,
    validate_config,
)
from etpasim.errors import ConfigValidationError, TractabilityError
from etpasim.forward_model import (
    SurvivalFactors,
    etpa_survival,
    expected_rates,
    linear_survival,
    pair_rate_at_cuvette,
    pump_scale_for,
    scale_coupling,
)
from etpasim.utils import config_hash

logger = logging.getLogger(__name__)

DEFAULT_EVENT_LIMIT = 1e8


class SimulationMode(str, Enum):
    RATE_LEVEL = "rate_level"
    EVENT_LEVEL = "event_level"


class SimulationPlan(EtpaModel):
    config: ExperimentConfig
    mode: SimulationMode = SimulationMode.RATE_LEVEL
    replicas: int = Field(1, ge=1)
    base_seed: int = Field(0, ge=0, lt=MAX_SEED)
    noiseless: bool = False
    event_limit: float = Field(DEFAULT_EVENT_LIMIT, gt=0)

    @model_validator(mode="after")
    def _check_mode(self):
        if self.mode == SimulationMode.EVENT_LEVEL:
            if self.noiseless:
                raise ValueError("noiseless counts are only defined at rate level")
            errors = self.config.channel.routing_errors()
            if Arm.REFERENCE in self.config.sweep.arms and self.config.reference_channel:
                errors += [
                    (f"reference_channel.{p}", m)
                    for p, m in self.config.reference_channel.routing_errors()
                ]
            if errors:
                raise ValueError(
                    "; ".join(f"{path}: {msg}" for path, msg in errors)
                )
        return self

    @classmethod
    def from_config(cls, config: ExperimentConfig, **kwargs) -> "SimulationPlan":
        """Plan with replicas and seed taken from the config unless overridden."""
        config = validate_config(config)
        kwargs.setdefault("replicas", config.sweep.replicas)
        kwargs.setdefault("base_seed", config.seed)
        try:
            return cls(config=config, **kwargs)
        except ValidationError as e:
            raise ConfigValidationError(
                [
                    (".".join(str(p) for p in err["loc"]) or "plan", err["msg"])
                    for err in e.errors()
                ]
            )

    @cached_property
    def digest(self) -> str:
        return config_hash(self.config.model_dump(mode="json"))

    def run_id(self, replica: int) -> str:
        return f"{self.digest[:8]}-{replica:04d}"

    def tasks(self) -> list[tuple[int, SweepPoint]]:
        """(replica, point) pairs in output order."""
        points = self.config.sweep.points()
        return [(r, p) for r in range(self.replicas) for p in points]


def derive_seed(base_seed: int, replica: int, index: int) -> int:
    """Counter-based child seed for one record, independent of execution order."""
    seq = np.random.SeedSequence(base_seed, spawn_key=(replica, index))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def _kappa_scale(
    plan: SimulationPlan, point: SweepPoint, rng: np.random.Generator
) -> tuple[float, float]:
    jitter = plan.config.channel_for(point.arm).kappa_jitter
    if jitter == 0 or point.arm != Arm.SAMPLE or point.concentration == 0:
        return (1.0, 1.0)
    k1, k2 = np.clip(1 + jitter * rng.standard_normal(2), 0.0, None)
    return (float(k1), float(k2))


def _record(plan, replica, point, seed, singles1, singles2, coincidences, dark1, dark2):
    return CountRecord(
        run_id=plan.run_id(replica),
        arm=point.arm,
        delay_tau=point.delay_tau,
        pump_power=point.pump_power,
        concentration=point.concentration,
        integration_time=plan.config.detector.integration_time,
        singles1=int(singles1),
        singles2=int(singles2),
        coincidences=int(coincidences),
        dark1=int(dark1),
        dark2=int(dark2),
        seed=seed,
    )


def rate_level_record(
    plan: SimulationPlan, replica: int, point: SweepPoint
) -> CountRecord:
    seed = derive_seed(plan.base_seed, replica, point.index)
    rng = np.random.default_rng(seed)
    kappa_scale = _kappa_scale(plan, point, rng)

    rates = expected_rates(
        plan.config,
        point.arm,
        point.pump_power,
        point.concentration,
        point.delay_tau,
        kappa_scale=kappa_scale,
    )
    t = plan.config.detector.integration_time

    if plan.noiseless:
        coincidences = round(rates.r12 * t)
        singles1 = max(round(rates.r1 * t), coincidences)
        singles2 = max(round(rates.r2 * t), coincidences)
        dark1, dark2 = round(rates.phi1 * t), round(rates.phi2 * t)
    else:
        # Singles are built on top of the coincidences so every record obeys
        # coincidences <= singles while keeping singles ~ Poisson(R T)
        coincidences = rng.poisson(rates.r12 * t)
        singles1 = coincidences + rng.poisson(max(rates.r1 - rates.r12, 0.0) * t)
        singles2 = coincidences + rng.poisson(max(rates.r2 - rates.r12, 0.0) * t)
        dark1 = rng.poisson(rates.phi1 * t)
        dark2 = rng.poisson(rates.phi2 * t)

    return _record(
        plan, replica, point, seed, singles1, singles2, coincidences, dark1, dark2
    )


def count_coincidences(t1: np.ndarray, t2: np.ndarray, window: float) -> int:
    """
    Number of click pairs with |t1 - t2| <= window / 2.

    Clicks are matched greedily by earliest timestamp and each click is used at
    most once. Both inputs must be sorted.

    Parameters
    ----------
    t1, t2 : np.ndarray
        Sorted click times of detector 1 and 2 in seconds.
    window : float
        Full coincidence window in seconds.
    """
    if len(t1) == 0 or len(t2) == 0:
        return 0

    half = window / 2
    times = np.concatenate([t1, t2])
    labels = np.concatenate([np.zeros(len(t1), np.int8), np.ones(len(t2), np.int8)])
    order = np.argsort(times, kind="stable")
    times, labels = times[order], labels[order]

    # Clusters separated by more than the half window never share a match
    breaks = np.flatnonzero(np.diff(times) > half) + 1
    starts = np.concatenate([[0], breaks])
    ends = np.concatenate([breaks, [len(times)]])
    sizes = ends - starts

    pairs = starts[sizes == 2]
    matches = int(np.count_nonzero(labels[pairs] != labels[pairs + 1]))

    for start, end in zip(starts[sizes > 2], ends[sizes > 2]):
        cluster_t = times[start:end]
        cluster_l = labels[start:end]
        matches += _greedy_matches(
            cluster_t[cluster_l == 0], cluster_t[cluster_l == 1], half
        )

    return matches


def _greedy_matches(t1: np.ndarray, t2: np.ndarray, half: float) -> int:
    matches = 0
    j = 0
    for t in t1:
        while j < len(t2) and t2[j] < t - half:
            j += 1
        if j < len(t2) and t2[j] <= t + half:
            matches += 1
            j += 1
    return matches


def event_level_record(
    plan: SimulationPlan, replica: int, point: SweepPoint
) -> CountRecord:
    config = plan.config
    det = config.detector
    t = det.integration_time

    seed = derive_seed(plan.base_seed, replica, point.index)
    rng = np.random.default_rng(seed)
    kappa_scale = _kappa_scale(plan, point, rng)

    source = config.source.model_copy(
        update={
            "pump_power": point.pump_power
            * pump_scale_for(config, point.concentration),
            "delay_tau": point.delay_tau,
        }
    )
    pair_rate = pair_rate_at_cuvette(source)
    if point.arm == Arm.SAMPLE:
        sample = config.sample.at_concentration(point.concentration)
        surv = SurvivalFactors(
            eps_etpa=etpa_survival(sample, point.delay_tau, source.correlation_time_te),
            eta_linear=linear_survival(sample),
        )
    else:
        surv = SurvivalFactors()
    channel = scale_coupling(config.channel_for(point.arm), kappa_scale)

    expected = (pair_rate + det.dark_rate_1 + det.dark_rate_2) * t
    if expected > plan.event_limit:
        raise TractabilityError(
            f"Record {point.index} expects {expected:.3g} events, above the "
            f"event-level limit of {plan.event_limit:.3g}; use rate-level "
            "simulation or shorten the integration time"
        )

    n_pairs = rng.poisson(pair_rate * t)
    n_surviving = rng.binomial(n_pairs, surv.eps_etpa)

    s1 = surv.eta_linear * channel.eps1 * channel.kappa1
    s2 = surv.eta_linear * channel.eps2 * channel.kappa2
    n_split, n_both1, n_both2 = rng.multinomial(
        n_surviving, channel.routing_probabilities()
    )
    # Split pairs: both detected, only photon 1, only photon 2, neither
    n_pair_click, n_only1, n_only2, _ = rng.multinomial(
        n_split, [s1 * s2, s1 * (1 - s2), (1 - s1) * s2, (1 - s1) * (1 - s2)]
    )
    # A pair routed to one port arrives as a single click
    n_only1 += rng.binomial(n_both1, s1)
    n_only2 += rng.binomial(n_both2, s2)

    n_dark1 = rng.poisson(det.dark_rate_1 * t)
    n_dark2 = rng.poisson(det.dark_rate_2 * t)

    # Photons of one pair share a timestamp; T_e is far below tau_c
    t_pair = rng.uniform(0, t, n_pair_click)
    clicks1 = np.sort(
        np.concatenate([t_pair, rng.uniform(0, t, n_only1), rng.uniform(0, t, n_dark1)])
    )
    clicks2 = np.sort(
        np.concatenate([t_pair, rng.uniform(0, t, n_only2), rng.uniform(0, t, n_dark2)])
    )
    coincidences = count_coincidences(clicks1, clicks2, det.tau_c_seconds)

    # Dark counts are reported from a separate blocked-beam acquisition
    dark1 = rng.poisson(det.dark_rate_1 * t)
    dark2 = rng.poisson(det.dark_rate_2 * t)

    logger.debug(
        f"event record {point.index} replica {replica}: {n_pairs} pairs, "
        f"{len(clicks1)}/{len(clicks2)} clicks, {coincidences} coincidences"
    )
    return _record(
        plan, replica, point, seed, len(clicks1), len(clicks2), coincidences, dark1, dark2
    )


def simulate_record(plan: SimulationPlan, replica: int, point: SweepPoint) -> CountRecord:
    if plan.mode == SimulationMode.EVENT_LEVEL:
        return event_level_record(plan, replica, point)
    return rate_level_record(plan, replica, point)


def simulate_rate_level(plan: SimulationPlan) -> list[CountRecord]:
    """Poisson-sampled records for every replica and sweep point."""
    if plan.mode != SimulationMode.RATE_LEVEL:
        plan = plan.model_copy(update={"mode": SimulationMode.RATE_LEVEL})
    return [rate_level_record(plan, r, p) for r, p in plan.tasks()]


def simulate_event_level(plan: SimulationPlan) -> list[CountRecord]:
    """Per-pair simulated records for every replica and sweep point."""
    plan = _as_event_plan(plan)
    return [event_level_record(plan, r, p) for r, p in plan.tasks()]


def _as_event_plan(plan: SimulationPlan) -> SimulationPlan:
    if plan.mode == SimulationMode.EVENT_LEVEL:
        return plan
    try:
        fields = {name: getattr(plan, name) for name in SimulationPlan.model_fields}
        return SimulationPlan(**{**fields, "mode": SimulationMode.EVENT_LEVEL})
    except ValidationError as e:
        raise ConfigValidationError([("mode", err["msg"]) for err in e.errors()])


def simulate(plan: SimulationPlan, workers: Optional[int] = 1) -> list[CountRecord]:
    """
    Run the plan, optionally across a process pool. Output order is always
    replica-major, then sweep order, whatever the number of workers.
    """
    if workers is None or workers <= 1:
        if plan.mode == SimulationMode.EVENT_LEVEL:
            return simulate_event_level(plan)
        return simulate_rate_level(plan)

    from etpasim.sweep import run_parallel

    return run_parallel(plan, workers)
