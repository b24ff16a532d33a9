import numpy as np
import pytest

from etpasim.core import Arm, SweepPoint, validate_config
from etpasim.errors import ConfigValidationError, TractabilityError
from etpasim.forward_model import expected_rates
from etpasim.montecarlo import (
    SimulationMode,
    SimulationPlan,
    count_coincidences,
    derive_seed,
    event_level_record,
    rate_level_record,
    simulate,
    simulate_event_level,
    simulate_rate_level,
)


def _plan(small_config, **kwargs):
    return SimulationPlan.from_config(small_config, **kwargs)


class TestSeeding:
    def test_derive_seed_is_deterministic(self):
        assert derive_seed(1234, 0, 5) == derive_seed(1234, 0, 5)

    def test_derive_seed_distinct(self):
        seeds = {derive_seed(1234, r, i) for r in range(10) for i in range(50)}
        assert len(seeds) == 500

    def test_order_independent(self, small_config):
        plan = _plan(small_config, replicas=2)
        tasks = plan.tasks()
        forward = [rate_level_record(plan, r, p) for r, p in tasks]
        backward = [rate_level_record(plan, r, p) for r, p in reversed(tasks)]

        assert forward == backward[::-1]

    def test_run_ids(self, small_config):
        plan = _plan(small_config, replicas=3)
        records = simulate_rate_level(plan)
        run_ids = sorted({r.run_id for r in records})

        assert len(run_ids) == 3
        assert run_ids[0].endswith("-0000")
        assert run_ids[0].startswith(plan.digest[:8])


class TestPlan:
    def test_takes_seed_and_replicas_from_config(self, small_config):
        plan = _plan(small_config)
        assert plan.base_seed == 42
        assert plan.replicas == 1
        assert len(plan.tasks()) == 4 * 3 * 1 * 2

    def test_event_level_rejects_noiseless(self, small_config):
        with pytest.raises(ConfigValidationError):
            _plan(small_config, mode=SimulationMode.EVENT_LEVEL, noiseless=True)

    def test_event_level_needs_complete_routing(self):
        config = validate_config({"channel": {"beta1": 0.5, "beta2": 0.5, "beta12": 0.5}})
        with pytest.raises(ConfigValidationError):
            SimulationPlan.from_config(config, mode=SimulationMode.EVENT_LEVEL)

    def test_digest_follows_config(self, small_config):
        other = small_config.model_copy(update={"seed": 43})
        assert _plan(small_config).digest != _plan(validate_config(other)).digest


class TestRateLevel:
    def test_noiseless_matches_expected_counts(self, small_config):
        plan = _plan(small_config, noiseless=True)
        record = rate_level_record(plan, 0, plan.tasks()[5][1])
        point = plan.tasks()[5][1]
        rates = expected_rates(
            small_config, point.arm, point.pump_power, point.concentration, point.delay_tau
        )
        t = small_config.detector.integration_time

        assert record.coincidences == round(rates.r12 * t)
        assert record.singles1 == round(rates.r1 * t)
        assert record.dark1 == round(200.0 * t)

    def test_poisson_mean(self, small_config):
        """Mean coincidences over replicas within 3 standard errors."""
        plan = _plan(small_config, replicas=200)
        point = plan.config.sweep.points()[0]
        counts = np.array(
            [rate_level_record(plan, r, point).coincidences for r in range(200)]
        )
        rates = expected_rates(
            small_config, point.arm, point.pump_power, point.concentration, 0.0
        )
        mu = rates.r12 * small_config.detector.integration_time

        assert abs(counts.mean() - mu) < 3 * np.sqrt(mu / 200)

    def test_coincidences_never_exceed_singles(self, small_config):
        for record in simulate_rate_level(_plan(small_config, replicas=3)):
            assert record.coincidences <= min(record.singles1, record.singles2)

    def test_kappa_jitter_only_on_sample_runs(self, small_config):
        channel = small_config.channel.model_copy(update={"kappa_jitter": 0.1})
        config = validate_config(small_config.model_copy(update={"channel": channel}))
        plan = SimulationPlan.from_config(config, noiseless=True)
        baseline = SimulationPlan.from_config(small_config, noiseless=True)

        for (_, point) in plan.tasks():
            jittered = rate_level_record(plan, 0, point)
            plain = rate_level_record(baseline, 0, point)
            if point.arm == Arm.SAMPLE and point.concentration > 0:
                assert jittered.singles1 != plain.singles1
            else:
                assert jittered.singles1 == plain.singles1


class TestCoincidenceCounting:
    def test_simple_matches(self):
        t1 = np.array([1.0, 2.0, 3.0])
        t2 = np.array([1.0 + 1e-10, 2.5, 3.0 - 1e-10])
        assert count_coincidences(t1, t2, 1e-9) == 2

    def test_window_edge(self):
        assert count_coincidences(np.array([0.0]), np.array([0.5e-9]), 1e-9) == 1
        assert count_coincidences(np.array([0.0]), np.array([0.6e-9]), 1e-9) == 0

    def test_each_click_used_once(self):
        t1 = np.array([1.0])
        t2 = np.array([1.0 - 1e-10, 1.0 + 1e-10])
        assert count_coincidences(t1, t2, 1e-9) == 1

    def test_empty(self):
        assert count_coincidences(np.array([]), np.array([1.0]), 1e-9) == 0

    def test_accidental_rate(self):
        """Uncorrelated streams give tau_c R1 R2 T coincidences on average."""
        rng = np.random.default_rng(7)
        t, r1, r2, tau_c = 10.0, 2e5, 2e5, 1e-9
        t1 = np.sort(rng.uniform(0, t, rng.poisson(r1 * t)))
        t2 = np.sort(rng.uniform(0, t, rng.poisson(r2 * t)))
        mu = tau_c * r1 * r2 * t

        assert abs(count_coincidences(t1, t2, tau_c) - mu) < 5 * np.sqrt(mu)

    def test_more_matches_with_a_wider_window(self):
        rng = np.random.default_rng(11)
        t = 1.0
        t1 = np.sort(rng.uniform(0, t, rng.poisson(5e5 * t)))
        t2 = np.sort(rng.uniform(0, t, rng.poisson(5e5 * t)))

        counts = [count_coincidences(t1, t2, w * 1e-9) for w in (0.25, 0.5, 1.0, 2.0, 4.0)]
        assert counts == sorted(counts)
        assert counts[-1] > counts[0]


class TestEventLevel:
    @pytest.fixture
    def event_config(self):
        return validate_config(
            {
                "source": {"pairs_per_mw": 2.0e4},
                "sample": {"sigma_e_true": 1.0e-18},
                "channel": {"eps1": 0.5, "eps2": 0.6, "kappa1": 0.8, "kappa2": 0.9},
                "detector": {
                    "dark_rate_1": 1000.0,
                    "dark_rate_2": 1000.0,
                    "integration_time": 5.0,
                },
                "sweep": {"pump_powers": [10.0], "concentrations": [0.0, 100e-6]},
                "seed": 7,
            }
        )

    def test_matches_analytic_rates(self, event_config):
        plan = SimulationPlan.from_config(
            event_config, mode=SimulationMode.EVENT_LEVEL, replicas=20
        )
        t = event_config.detector.integration_time
        for point in event_config.sweep.points():
            records = [event_level_record(plan, r, point) for r in range(20)]
            rates = expected_rates(
                event_config, point.arm, point.pump_power, point.concentration, 0.0
            )
            for name, expected in (
                ("singles1", rates.r1),
                ("singles2", rates.r2),
                ("coincidences", rates.r12),
            ):
                counts = np.array([getattr(rec, name) for rec in records])
                mu = expected * t
                assert abs(counts.mean() - mu) < 5 * np.sqrt(mu / 20), name

    def test_tractability_guard(self, event_config):
        plan = SimulationPlan.from_config(
            event_config, mode=SimulationMode.EVENT_LEVEL, event_limit=1e3
        )
        with pytest.raises(TractabilityError):
            simulate_event_level(plan)

    def test_deterministic(self, event_config):
        plan = SimulationPlan.from_config(event_config, mode=SimulationMode.EVENT_LEVEL)
        assert simulate(plan) == simulate(plan)

    def test_rate_plan_converted(self, event_config):
        plan = SimulationPlan.from_config(event_config)
        _ = plan.digest
        records = simulate_event_level(plan)
        assert len(records) == 2


class TestParallel:
    def test_workers_match_serial(self, small_config):
        plan = _plan(small_config, replicas=2)
        serial = simulate(plan, workers=1)
        parallel = simulate(plan, workers=2)

        assert parallel == serial

    def test_record_for_point(self, small_config):
        plan = _plan(small_config)
        point = SweepPoint(0, Arm.SAMPLE, 0.0, 0.0, 5.0)
        assert rate_level_record(plan, 0, point).seed == derive_seed(42, 0, 0)
