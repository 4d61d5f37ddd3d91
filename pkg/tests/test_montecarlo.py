from dataclasses import replace

import numpy as np
import pytest

from conftest import with_rician_factor
from models.mode_select import selection_probability_irs
from models.montecarlo import (
    SimPlan,
    empirical_pdf_of_cascade_power,
    selection_frequency,
    simulate,
    simulate_mode,
    stream,
)
from models.performance import mode_outage_fn, outage_uav
from models.power import Mode


def plan(trials=40_000, **kwargs):
    return SimPlan(trials=trials, chunk_size=10_000, **kwargs)


class TestSimPlan:
    def test_trial_floor(self):
        with pytest.raises(ValueError, match="at least"):
            SimPlan(trials=999)

    def test_chunks_cover_trials(self):
        chunks = SimPlan(trials=25_000, chunk_size=10_000).chunks()
        assert chunks == [(0, 10_000), (1, 10_000), (2, 5_000)]

    def test_from_scenario_overrides(self, default_scenario):
        p = SimPlan.from_scenario(default_scenario, trials=12_000, seed=None)
        assert p.trials == 12_000
        assert p.seed == default_scenario.sim.seed

    def test_streams_are_keyed(self):
        a = stream(1, 0, 0).standard_normal(4)
        np.testing.assert_array_equal(a, stream(1, 0, 0).standard_normal(4))
        assert not np.array_equal(a, stream(1, 1, 0).standard_normal(4))
        assert not np.array_equal(a, stream(1, 0, 1).standard_normal(4))


class TestSimulate:
    def test_silent_source(self, default_scenario):
        s = replace(default_scenario, radio=default_scenario.radio.with_uplink_power(0.0))
        assert simulate_mode(s, plan(modes=(Mode.UAV,)), Mode.UAV).outage == 1.0

    def test_zero_threshold(self, default_scenario):
        s = replace(default_scenario, radio=default_scenario.radio.with_threshold(0.0))
        result = simulate(s, plan(trials=10_000))
        assert all(result[mode].outage == 0.0 for mode in Mode)

    def test_deterministic(self, default_scenario):
        a = simulate(default_scenario, plan(seed=5))
        b = simulate(default_scenario, plan(seed=5))
        assert a == b

    def test_independent_of_workers(self, default_scenario):
        a = simulate(default_scenario, plan(trials=20_000, seed=3))
        b = simulate(default_scenario, plan(trials=20_000, seed=3, workers=2))
        for mode in Mode:
            assert a[mode] == b[mode]

    def test_uav_outage_matches_closed_form(self, default_scenario):
        for height in (150.0, 350.0, 700.0):
            s = default_scenario.with_height(height)
            est = simulate_mode(s, plan(modes=(Mode.UAV,), seed=11), Mode.UAV)
            analytic = outage_uav(s.geometry, s.environment, s.radio)
            se = max(est.outage_se, np.sqrt(analytic * (1 - analytic) / est.trials))
            assert abs(est.outage - analytic) <= 3.0 * se

    def test_irs_outage_matches_clt(self, default_scenario):
        s = default_scenario.with_elements(200)
        est = simulate_mode(s, plan(modes=(Mode.IRS,), seed=2), Mode.IRS)
        analytic = float(mode_outage_fn(s, Mode.IRS)(s.radio.threshold))
        se = max(est.outage_se, np.sqrt(analytic * (1 - analytic) / est.trials))
        # 3 SE plus a CLT allowance for the Gaussian cascade
        assert abs(est.outage - analytic) <= 3.0 * se + 0.005

    def test_integrated_is_product_of_branches(self, default_scenario):
        result = simulate(default_scenario.with_elements(200), plan(seed=9))
        o_uav, o_irs, o_int = (result[m].outage for m in Mode)
        pooled = np.sqrt(result[Mode.INT].outage_se**2 + (o_irs * result[Mode.UAV].outage_se) ** 2 + (o_uav * result[Mode.IRS].outage_se) ** 2)
        assert abs(o_int - o_uav * o_irs) <= 3.0 * pooled

    def test_jensen_on_samples(self, default_scenario):
        result = simulate(default_scenario.with_elements(200), plan(seed=4))
        bandwidth = default_scenario.radio.bandwidth
        for mode in Mode:
            assert bandwidth * np.log2(1.0 + result[mode].mean_snr) >= result[mode].capacity

    def test_standard_error_scaling(self, default_scenario):
        small = simulate_mode(default_scenario, SimPlan(trials=10_000, modes=(Mode.UAV,), seed=1), Mode.UAV)
        large = simulate_mode(default_scenario, SimPlan(trials=1_000_000, modes=(Mode.UAV,), seed=1), Mode.UAV)
        assert small.capacity_se / large.capacity_se == pytest.approx(10.0, rel=0.2)

    def test_keep_samples(self, default_scenario):
        est = simulate_mode(default_scenario, plan(trials=10_000, modes=(Mode.UAV,), keep_samples=True), Mode.UAV)
        assert est.samples.shape == (10_000,)
        assert np.mean(est.samples) == pytest.approx(est.mean_snr)

    def test_per_element_geometry_close_to_common_distance(self, default_scenario):
        s = default_scenario.with_elements(100)
        common = simulate_mode(s, plan(modes=(Mode.IRS,), seed=8), Mode.IRS)
        per_element = simulate_mode(s, plan(modes=(Mode.IRS,), seed=8, per_element_geometry=True), Mode.IRS)
        assert per_element.mean_snr == pytest.approx(common.mean_snr, rel=0.02)


class TestSelectionFrequency:
    def test_matches_selection_integral(self, default_scenario):
        s = default_scenario.with_elements(270)
        freq, se = selection_frequency(s, plan(seed=21))
        assert abs(freq - selection_probability_irs(s)) <= 3.0 * se + 0.005


class TestCascadeHistogram:
    def test_normalized(self, default_scenario):
        hist = empirical_pdf_of_cascade_power(default_scenario, plan(trials=20_000), 20)
        assert hist.mass == pytest.approx(1.0, abs=1e-9)
        assert hist.samples == 20_000

    def test_converges_at_twenty_elements(self, default_scenario):
        hist = empirical_pdf_of_cascade_power(default_scenario, plan(trials=200_000), 20)
        assert hist.sup_distance < 0.02

    def test_more_elements_closer_to_reference(self, default_scenario):
        rayleigh = with_rician_factor(default_scenario, 0.0)
        few = empirical_pdf_of_cascade_power(rayleigh, plan(trials=100_000), 2)
        many = empirical_pdf_of_cascade_power(rayleigh, plan(trials=100_000), 20)
        assert few.sup_distance > many.sup_distance

    def test_needs_elements(self, default_scenario):
        with pytest.raises(ValueError):
            empirical_pdf_of_cascade_power(default_scenario, plan(), 0)
