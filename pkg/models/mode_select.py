import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .channel_stats import mean_cascade_power, rician_power_cdf, rician_power_pdf
from .errors import NumericalError
from .optimizer import optimize_irs_height, optimize_uav_height
from .performance import integrate_half_line, irs_outage_from_stats, link_snr_scale
from .power import Mode, mode_power


logger = logging.getLogger(__name__)

# Relative EE difference treated as a tie.
TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ThresholdReport:
    n_th: float
    numerator: float
    denominator: float
    numeric_root: float
    direction: str
    numeric_direction: str = "above"


@dataclass(frozen=True)
class SelectionReport:
    r"""
    Outcome of one mode-selection rule.

    Parameters:
        chosen (`Mode`): selected mode.
        rule (`str`): `probability`, `threshold`, `power`, `snr` or `optimal_heights`.
        p_irs (`float`, *optional*): probability that the IRS-only mode is selected; p_uav = 1 − p_irs.
        n_th (`float`, *optional*): element-count threshold and the sign of its denominator.
        ee_irs (`float`, *optional*), ee_uav (`float`, *optional*): EE at the optimal heights.
    """

    chosen: Mode
    rule: str
    elements: int
    p_irs: Optional[float] = None
    n_th: Optional[float] = None
    n_th_denominator: Optional[float] = None
    n_th_numeric: Optional[float] = None
    ee_irs: Optional[float] = None
    ee_uav: Optional[float] = None
    h_irs: Optional[float] = None
    h_uav: Optional[float] = None

    @property
    def p_uav(self):
        return None if self.p_irs is None else 1.0 - self.p_irs

    def as_row(self):
        return {
            "rule": self.rule,
            "elements": self.elements,
            "chosen": Mode(self.chosen).value,
            "p_irs": self.p_irs,
            "p_uav": self.p_uav,
            "n_th": self.n_th,
            "n_th_denominator": self.n_th_denominator,
            "n_th_numeric": self.n_th_numeric,
            "ee_irs": self.ee_irs,
            "ee_uav": self.ee_uav,
            "h_irs": self.h_irs,
            "h_uav": self.h_uav,
        }


def _power_ratio(scenario):
    power = scenario.power_model
    return mode_power(Mode.IRS, scenario.radio, power) / mode_power(Mode.UAV, scenario.radio, power)


def uav_snr_density(scenario, z):
    """Density of Γ_UAV = min(S_u·X_u, S_d·X_d) at z ≥ 0."""
    geom, env, radio = scenario.geometry, scenario.environment, scenario.radio
    s_u, s_d = (link_snr_scale(geom, env, radio, link) for link in ("u", "d"))
    f_u, f_d = scenario.fading_u, scenario.fading_d
    return (1.0 - rician_power_cdf(z / s_d, f_d)) * rician_power_pdf(z / s_u, f_u) / s_u + (
        1.0 - rician_power_cdf(z / s_u, f_u)
    ) * rician_power_pdf(z / s_d, f_d) / s_d


def selection_probability_irs(scenario):
    r"""
    P(Γ_IRS ≥ Γ_UAV·P_IRS/P_UAV) = ∫₀^∞ [1 − F_IRS(z·P_IRS/P_UAV)]·f_UAV(z) dz.

    Returns NaN below the CLT floor, where the cascade distribution is not trusted.
    """
    irs = scenario.irs
    if irs.elements < irs.clt_floor:
        logger.warning(f"N={irs.elements} is below the CLT floor {irs.clt_floor}; selection probability not computed")
        return math.nan
    geom, env, radio = scenario.geometry, scenario.environment, scenario.radio
    if min(link_snr_scale(geom, env, radio, link) for link in ("u", "d")) <= 0:
        return 1.0
    stats = scenario.stats()
    ratio = _power_ratio(scenario)
    scale = min(link_snr_scale(geom, env, radio, link) * env.link(link).omega for link in ("u", "d"))

    def integrand(z):
        return (1.0 - irs_outage_from_stats(stats, z * ratio)) * uav_snr_density(scenario, z)

    p_irs = integrate_half_line(integrand, scale, epsabs=1e-10, what="selection probability integral")
    return float(np.clip(p_irs, 0.0, 1.0))


def snr_per_watt_balance(scenario):
    """
    Returns n ↦ E[Γ_IRS(n)]·P_UAV − E[Γ_UAV]·P_IRS(n) under the active cascade convention
    and element offset; positive where the IRS-only mode wins on mean SNR per watt.
    """
    geom, env, radio, irs = scenario.geometry, scenario.environment, scenario.radio, scenario.irs
    stats = scenario.stats()
    power = scenario.power_model
    p_uav = mode_power(Mode.UAV, radio, power)
    mean_uav = min(link_snr_scale(geom, env, radio, link) * env.link(link).omega for link in ("u", "d"))
    s_irs = 0.0 if not math.isfinite(stats.t) else 1.0 / stats.t
    variance = stats.sigma_z2 / stats.count

    def balance(n):
        count = n + irs.element_offset
        lam = count * stats.lam_prime
        gain = mean_cascade_power(lam, count * variance, stats.nu, stats.convention)
        return gain * s_irs * p_uav - mean_uav * (radio.p_u + n * irs.element_power + power.common_power)

    return balance


def element_threshold(scenario):
    r"""
    Element count above which the IRS-only mode wins on mean SNR per watt.

    The closed form uses the mean cascade power ν + (N+1)·λ′ and the UAV mean SNR
    M = min(S_u·Ω_u, S_d·Ω_d):
    N_th = [(p_u − P_r + C)·M − ν·P_UAV·S_I] / [λ′·P_UAV·S_I − P_r·M] − 1 with S_I = 1/t.
    A negative denominator reverses the direction of the closed form. ``numeric_root`` solves the
    same balance under the active cascade convention and element offset; the two agree only for
    the unscaled convention with offset 1. ``numeric_direction`` tells on which side of the root
    the IRS-only mode wins.
    """
    geom, env, radio, irs = scenario.geometry, scenario.environment, scenario.radio, scenario.irs
    stats = scenario.stats()
    power = scenario.power_model
    common = power.common_power
    p_uav = mode_power(Mode.UAV, radio, power)
    mean_uav = min(link_snr_scale(geom, env, radio, link) * env.link(link).omega for link in ("u", "d"))
    s_irs = 0.0 if not math.isfinite(stats.t) else 1.0 / stats.t
    p_r = irs.element_power

    numerator = (radio.p_u - p_r + common) * mean_uav - stats.nu * p_uav * s_irs
    denominator = stats.lam_prime * p_uav * s_irs - p_r * mean_uav
    if denominator == 0:
        raise NumericalError("element threshold denominator vanishes (knife-edge configuration)")
    n_th = numerator / denominator - 1.0
    direction = "above" if denominator > 0 else "below"
    if denominator < 0:
        logger.warning("element threshold denominator is negative; IRS-only wins below N_th")

    balance = snr_per_watt_balance(scenario)
    numeric = math.nan
    lo = float(-irs.element_offset)
    hi = max(float(irs.n_max), 1.0)
    numeric_direction = "above"
    for _ in range(12):
        if balance(lo) * balance(hi) < 0:
            numeric = brentq(balance, lo, hi, xtol=1e-9)
            numeric_direction = "above" if balance(hi) > 0 else "below"
            break
        hi *= 4.0
    return ThresholdReport(
        n_th=n_th,
        numerator=numerator,
        denominator=denominator,
        numeric_root=numeric,
        direction=direction,
        numeric_direction=numeric_direction,
    )


def select_mode_by_threshold(scenario, elements=None):
    n = scenario.irs.elements if elements is None else int(elements)
    report = element_threshold(scenario)
    # decided on the active convention; the closed-form N_th is reported only
    irs_wins = snr_per_watt_balance(scenario)(n) > 0
    return SelectionReport(
        chosen=Mode.IRS if irs_wins else Mode.UAV,
        rule="threshold",
        elements=n,
        n_th=report.n_th,
        n_th_denominator=report.denominator,
        n_th_numeric=report.numeric_root,
    )


def select_mode_by_probability(scenario):
    p_irs = selection_probability_irs(scenario)
    chosen = Mode.IRS if not math.isnan(p_irs) and p_irs >= 0.5 else Mode.UAV
    return SelectionReport(chosen=chosen, rule="probability", elements=scenario.irs.elements, p_irs=p_irs)


def select_mode_by_power(scenario, elements=None):
    """IRS-only draws less power than UAV-only exactly when N·P_r(b) ≤ p_d."""
    n = scenario.irs.elements if elements is None else int(elements)
    irs_wins = n * scenario.irs.element_power <= scenario.radio.p_d
    return SelectionReport(chosen=Mode.IRS if irs_wins else Mode.UAV, rule="power", elements=n)


def select_mode_by_snr(scenario=None):
    """Selection combining never loses SNR, so the integrated mode always wins."""
    return SelectionReport(chosen=Mode.INT, rule="snr", elements=0 if scenario is None else scenario.irs.elements)


def select_mode_by_optimal_heights(scenario):
    r"""
    Compare EE_IRS(h★_IRS) with EE_UAV(h★_UAV). A tie goes to the mode drawing less power,
    IRS-only when N·P_r(b) ≤ p_d.
    """
    irs_run = optimize_irs_height(scenario)
    uav_run = optimize_uav_height(scenario)
    ee_irs, ee_uav = irs_run.objective, uav_run.objective
    tie = abs(ee_irs - ee_uav) <= TIE_TOLERANCE * max(abs(ee_irs), abs(ee_uav))
    if tie:
        chosen = select_mode_by_power(scenario).chosen
    else:
        chosen = Mode.IRS if ee_irs > ee_uav else Mode.UAV
    logger.info(f"optimal-height selection: EE_IRS={ee_irs:.6g} at {irs_run.x:.1f} m, EE_UAV={ee_uav:.6g} at {uav_run.x:.1f} m -> {chosen.value}")
    return SelectionReport(
        chosen=chosen,
        rule="optimal_heights",
        elements=scenario.irs.elements,
        ee_irs=ee_irs,
        ee_uav=ee_uav,
        h_irs=irs_run.x,
        h_uav=uav_run.x,
    )
