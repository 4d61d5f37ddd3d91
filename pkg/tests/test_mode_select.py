import math
from dataclasses import replace

import pytest

import models.mode_select as mode_select
from models.errors import NumericalError
from models.mode_select import (
    element_threshold,
    select_mode_by_optimal_heights,
    select_mode_by_power,
    select_mode_by_probability,
    select_mode_by_snr,
    select_mode_by_threshold,
    selection_probability_irs,
    uav_snr_density,
)
from models.optimizer import OptReport
from models.performance import integrate_half_line, irs_mean_snr, link_snr_scale
from models.power import Mode, mode_power


def mean_snr_per_watt(scenario, elements):
    s = scenario.with_elements(elements)
    geom, env, radio = s.geometry, s.environment, s.radio
    uav = min(link_snr_scale(geom, env, radio, link) * env.link(link).omega for link in ("u", "d"))
    return (
        irs_mean_snr(s.stats()) / mode_power(Mode.IRS, radio, s.power_model),
        uav / mode_power(Mode.UAV, radio, s.power_model),
    )


def unscaled_with_offset(scenario):
    return replace(scenario, irs=replace(scenario.irs, cascade_convention="unscaled", element_offset=1))


class TestSelectionProbability:
    def test_below_clt_floor(self, default_scenario):
        assert math.isnan(selection_probability_irs(default_scenario.with_elements(10)))

    def test_is_a_probability(self, default_scenario):
        p = selection_probability_irs(default_scenario)
        assert 0.0 <= p <= 1.0

    def test_uav_density_integrates_to_one(self, default_scenario):
        s = default_scenario
        scale = min(link_snr_scale(s.geometry, s.environment, s.radio, link) for link in ("u", "d"))
        mass = integrate_half_line(lambda z: uav_snr_density(s, z), scale, epsabs=1e-10)
        assert mass == pytest.approx(1.0, abs=1e-6)

    def test_strong_self_interference_favours_irs(self, default_scenario):
        radio = default_scenario.radio
        s = replace(default_scenario.with_elements(400), radio=replace(radio, residual_si=1e6 * radio.noise_power))
        assert selection_probability_irs(s) > 0.99

    def test_silent_uav_link(self, default_scenario):
        s = replace(default_scenario, radio=default_scenario.radio.with_uplink_power(0.0))
        assert selection_probability_irs(s) == 1.0

    def test_probability_rule(self, default_scenario):
        report = select_mode_by_probability(default_scenario)
        assert report.chosen is (Mode.IRS if report.p_irs >= 0.5 else Mode.UAV)
        assert report.p_uav == pytest.approx(1.0 - report.p_irs)

    def test_probability_rule_below_floor(self, default_scenario):
        report = select_mode_by_probability(default_scenario.with_elements(10))
        assert report.chosen is Mode.UAV
        assert report.p_uav is not None and math.isnan(report.p_uav)


class TestElementThreshold:
    def test_closed_form_matches_root(self, default_scenario):
        report = element_threshold(unscaled_with_offset(default_scenario))
        assert report.numeric_root == pytest.approx(report.n_th, rel=1e-6)

    def test_decision_flips_across_threshold(self, default_scenario):
        s = unscaled_with_offset(default_scenario)
        report = element_threshold(s)
        above = select_mode_by_threshold(s, elements=math.ceil(report.n_th) + 1).chosen
        below = select_mode_by_threshold(s, elements=math.floor(report.n_th) - 1).chosen
        assert above is not below
        assert above is (Mode.IRS if report.direction == "above" else Mode.UAV)

    def test_numeric_root_separates_snr_per_watt(self, default_scenario):
        root = element_threshold(default_scenario).numeric_root
        assert math.isfinite(root)
        lo_irs, lo_uav = mean_snr_per_watt(default_scenario, math.floor(root) - 1)
        hi_irs, hi_uav = mean_snr_per_watt(default_scenario, math.ceil(root) + 1)
        assert (lo_irs > lo_uav) != (hi_irs > hi_uav)

    def test_knife_edge(self, default_scenario):
        s = replace(
            default_scenario,
            radio=default_scenario.radio.with_uplink_power(0.0),
            irs=default_scenario.irs.with_element_power(0.0),
        )
        with pytest.raises(NumericalError):
            element_threshold(s)

    def test_rule_reports_threshold(self, default_scenario):
        report = select_mode_by_threshold(default_scenario)
        threshold = element_threshold(default_scenario)
        assert report.n_th == threshold.n_th
        assert report.n_th_denominator == threshold.denominator
        assert report.n_th_numeric == threshold.numeric_root

    @pytest.mark.parametrize("elements", [20, 100, 250, 300, 400])
    def test_rule_follows_snr_per_watt(self, default_scenario, elements):
        irs, uav = mean_snr_per_watt(default_scenario, elements)
        chosen = select_mode_by_threshold(default_scenario, elements=elements).chosen
        assert chosen is (Mode.IRS if irs > uav else Mode.UAV)

    def test_default_convention_flips_at_numeric_root(self, default_scenario):
        report = element_threshold(default_scenario)
        assert report.numeric_direction == "above"
        root = report.numeric_root
        assert select_mode_by_threshold(default_scenario, elements=math.ceil(root) + 1).chosen is Mode.IRS
        assert select_mode_by_threshold(default_scenario, elements=math.floor(root) - 1).chosen is Mode.UAV

    def test_large_surface_wins_under_default_convention(self, default_scenario):
        assert select_mode_by_threshold(default_scenario, elements=400).chosen is Mode.IRS


class TestOtherRules:
    def test_power_rule(self, default_scenario):
        s = replace(
            default_scenario,
            radio=replace(default_scenario.radio, p_d=2.5),
            irs=default_scenario.irs.with_element_power(0.25),
        )
        assert select_mode_by_power(s, elements=10).chosen is Mode.IRS
        assert select_mode_by_power(s, elements=11).chosen is Mode.UAV

    def test_snr_rule(self, default_scenario):
        assert select_mode_by_snr(default_scenario).chosen is Mode.INT
        assert select_mode_by_snr().elements == 0

    def test_row(self, default_scenario):
        row = select_mode_by_power(default_scenario).as_row()
        assert row["rule"] == "power"
        assert row["chosen"] in ("UAV", "IRS")


class TestOptimalHeights:
    def test_crossover_along_axis(self, crossover_scenario):
        near = select_mode_by_optimal_heights(crossover_scenario.with_distance(300.0))
        far = select_mode_by_optimal_heights(crossover_scenario.with_distance(1700.0))
        assert near.chosen is Mode.UAV
        assert far.chosen is Mode.IRS
        assert near.h_irs is not None and near.h_uav is not None

    def test_tie_goes_to_lower_power(self, default_scenario, monkeypatch):
        report = OptReport(problem="height", x=300.0, objective=1.5, iterations=1, converged=True)
        monkeypatch.setattr(mode_select, "optimize_irs_height", lambda scenario: report)
        monkeypatch.setattr(mode_select, "optimize_uav_height", lambda scenario: replace(report, x=400.0))
        # 50 elements at 5 dBm draw more than the 0 dBm UAV transmitter
        selected = select_mode_by_optimal_heights(default_scenario)
        assert selected.chosen is Mode.UAV
        assert selected.h_uav == 400.0
        loud = replace(default_scenario, radio=replace(default_scenario.radio, p_d=1.0))
        assert select_mode_by_optimal_heights(loud).chosen is Mode.IRS
