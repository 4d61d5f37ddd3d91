import logging
import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.special import erf

from utils import rate_to_snr_threshold, snr_threshold_to_rate

from .channel_stats import (
    CONVENTIONS,
    MOMENT_VARIANTS,
    RicianFading,
    cascade_composite,
    clt_params,
    double_rician_moments,
    rician_power_cdf,
)
from .errors import NumericalError
from .geometry_env import exponent_at
from .power import Mode, mode_power


logger = logging.getLogger(__name__)

CLT_FLOOR = 20
PROVENANCES = ("exact", "approx", "simulated")
# Column label used in exported tables for each provenance.
PROVENANCE_LABELS = {"exact": "closed_form", "approx": "bound", "simulated": "simulated"}
NOISE_MODES = ("bandwidth", "density")


@dataclass(frozen=True)
class RadioConfig:
    r"""
    Link budget shared by the three transmission modes. All values are linear SI.

    Parameters:
        bandwidth (`float`): B in Hz.
        p_u (`float`), p_d (`float`): source and UAV transmit powers in W.
        noise_density (`float`): N₀ in W/Hz.
        system_gain (`float`): Â, linear.
        residual_si (`float`): residual self-interference power R_SI in W.
        threshold (`float`): SNR threshold Γ₀, linear.
        rate (`float`, *optional*): target rate R₀ in bps; when given Γ₀ = 2^{R₀/B} − 1.
        noise_mode (`str`): `bandwidth` uses N₀·B as noise power, `density` uses N₀ as is.
    """

    bandwidth: float
    p_u: float
    p_d: float
    noise_density: float
    system_gain: float
    residual_si: float = 0.0
    threshold: float = 1.0
    rate: Optional[float] = None
    noise_mode: str = "bandwidth"

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValueError("`bandwidth` must be positive")
        if self.p_u < 0 or self.p_d < 0:
            raise ValueError("transmit powers must be non-negative")
        if self.noise_density <= 0:
            raise ValueError("`noise_density` must be positive")
        if self.system_gain <= 0:
            raise ValueError("`system_gain` must be positive")
        if self.residual_si < 0:
            raise ValueError("`residual_si` must be non-negative")
        if self.noise_mode not in NOISE_MODES:
            raise ValueError(f"Unknown `noise_mode` {self.noise_mode}, expected one of {NOISE_MODES}")
        if self.rate is not None:
            if self.rate < 0:
                raise ValueError("`rate` must be non-negative")
            object.__setattr__(self, "threshold", rate_to_snr_threshold(self.rate, self.bandwidth))
        if self.threshold < 0:
            raise ValueError("`threshold` must be non-negative")

    @property
    def noise_power(self):
        if self.noise_mode == "bandwidth":
            return self.noise_density * self.bandwidth
        return self.noise_density

    @property
    def target_rate(self):
        return self.rate if self.rate is not None else snr_threshold_to_rate(self.threshold, self.bandwidth)

    def with_threshold(self, threshold):
        return replace(self, threshold=float(threshold), rate=None)

    def with_rate(self, rate):
        return replace(self, rate=float(rate))

    def with_uplink_power(self, p_u):
        return replace(self, p_u=float(p_u))

    def kappa(self, env, link):
        eta = env.link(link).eta
        if link == "u":
            return self.system_gain / eta / (self.residual_si + self.noise_power)
        return self.system_gain / eta / self.noise_power

    def transmit_power(self, link):
        return self.p_u if link == "u" else self.p_d

    def threshold_prime(self, env, link):
        """Γ′_i = Γ₀ / (κ_i·p_i)."""
        scale = self.kappa(env, link) * self.transmit_power(link)
        return math.inf if scale == 0 else self.threshold / scale

    def mean_received(self, env, link):
        """I_i = p_i·κ_i·Ω_i."""
        return self.transmit_power(link) * self.kappa(env, link) * env.link(link).omega

    def composite(self, env):
        """V = Â²·p_u / (η_u·η_d·noise)."""
        return cascade_composite(self.system_gain, self.p_u, env.uplink.eta, env.downlink.eta, self.noise_power)


@dataclass(frozen=True)
class IrsConfig:
    r"""
    Reflecting-surface parameters and the cascade conventions in force.

    Parameters:
        elements (`int`): element count N.
        n_min (`int`), n_max (`int`): admissible element range.
        element_power (`float`): phase-resolution power P_r(b) in W.
        spacing (`float`): element spacing D_IRS in m.
        cascade_convention (`str`): `standardized` or `unscaled`.
        element_offset (`int`): summed elements are N + offset.
        moments_variant (`str`): `classical` or `unit_scatter` double-Rician moments.
    """

    elements: int = 50
    n_min: int = 20
    n_max: int = 400
    element_power: float = 1e-3 * 10 ** 0.5
    spacing: float = 0.05
    cascade_convention: str = "standardized"
    element_offset: int = 0
    moments_variant: str = "classical"
    clt_floor: int = CLT_FLOOR

    def __post_init__(self):
        if self.elements < 0:
            raise ValueError("`elements` must be non-negative")
        if not 0 <= self.n_min <= self.n_max:
            raise ValueError("element range must satisfy 0 <= `n_min` <= `n_max`")
        if self.element_power < 0:
            raise ValueError("`element_power` must be non-negative")
        if self.spacing < 0:
            raise ValueError("`spacing` must be non-negative")
        if self.cascade_convention not in CONVENTIONS:
            raise ValueError(f"Unknown `cascade_convention` {self.cascade_convention}, expected one of {CONVENTIONS}")
        if self.moments_variant not in MOMENT_VARIANTS:
            raise ValueError(f"Unknown `moments_variant` {self.moments_variant}, expected one of {MOMENT_VARIANTS}")

    def with_elements(self, elements):
        return replace(self, elements=int(elements))

    def with_element_power(self, element_power):
        return replace(self, element_power=float(element_power))


@dataclass(frozen=True)
class ModeMetrics:
    mode: Mode
    outage: float
    capacity: float
    power: float
    ee: float
    provenance: str = "exact"

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"Unknown provenance `{self.provenance}`, expected one of {PROVENANCES}")
        if not 0.0 <= self.outage <= 1.0:
            raise ValueError(f"outage {self.outage} outside [0, 1]")

    def as_row(self):
        return {
            "mode": Mode(self.mode).value,
            "outage": self.outage,
            "capacity_bps": self.capacity,
            "power_w": self.power,
            "ee_bps_per_w": self.ee,
            "provenance": PROVENANCE_LABELS[self.provenance],
        }


def link_exponents(geom, env, height=None):
    h = geom.height if height is None else height
    return (
        exponent_at(h, geom.offset_u, env, "u"),
        exponent_at(h, geom.offset_d, env, "d"),
    )


def link_snr_scale(geom, env, radio, link, height=None):
    """S_i = p_i·κ_i·d_i^{−α_i}; the link SNR is S_i·X_i."""
    h = geom.height if height is None else height
    alpha = exponent_at(h, geom.horizontal_offset(link), env, link)
    d = geom.slant_distance(link, h)
    return radio.transmit_power(link) * radio.kappa(env, link) * d ** (-alpha)


def cascade_stats(geom, env, radio, irs, elements=None, height=None):
    """ChannelStats of the IRS cascade with the V and t composites at the current geometry."""
    n = irs.elements if elements is None else int(elements)
    moments = double_rician_moments(
        RicianFading.from_link(env.uplink), RicianFading.from_link(env.downlink), variant=irs.moments_variant
    )
    stats = clt_params(n, moments, offset=irs.element_offset, convention=irs.cascade_convention)
    h = geom.height if height is None else height
    alpha_u, alpha_d = link_exponents(geom, env, h)
    V = radio.composite(env)
    if V <= 0:
        return stats.with_link_budget(0.0, math.inf)
    t = geom.slant_distance("u", h) ** alpha_u * geom.slant_distance("d", h) ** alpha_d / V
    return stats.with_link_budget(V, t)


def _link_outage(threshold, scale, fading):
    threshold = np.asarray(threshold, dtype=float)
    if scale <= 0:
        return np.where(threshold > 0, 1.0, 0.0)
    return np.asarray(rician_power_cdf(threshold / scale, fading))


def outage_uav(geom, env, radio, threshold=None, height=None):
    """1 − [1 − F_u(Γ₀/S_u)]·[1 − F_d(Γ₀/S_d)] with Rician link powers."""
    gamma0 = radio.threshold if threshold is None else threshold
    survive = np.ones_like(np.asarray(gamma0, dtype=float))
    for link in ("u", "d"):
        scale = link_snr_scale(geom, env, radio, link, height)
        survive = survive * (1.0 - _link_outage(gamma0, scale, RicianFading.from_link(env.link(link))))
    out = np.clip(1.0 - survive, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def irs_outage_from_stats(stats, threshold):
    r"""
    Erf-form outage of the CLT cascade.

    With the standardized convention x = √(tΓ₀)/σ_Z and s = μ_Z/σ_Z; with the unscaled one
    x = √(tΓ₀) and s = √λ.
    """
    if stats.t is None:
        raise ValueError("`stats` carries no link budget; build it with `cascade_stats`")
    gamma0 = np.asarray(threshold, dtype=float)
    if not math.isfinite(stats.t):
        out = np.where(gamma0 > 0, 1.0, 0.0)
        return float(out) if out.ndim == 0 else out
    root = np.sqrt(stats.t * gamma0)
    if stats.convention == "standardized":
        x = root / math.sqrt(stats.sigma_z2)
        s = stats.mu_z / math.sqrt(stats.sigma_z2)
    else:
        x = root
        s = math.sqrt(stats.lam)
    out = np.clip(0.5 * (erf((x - s) / math.sqrt(2.0)) + erf((x + s) / math.sqrt(2.0))), 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def outage_irs(geom, env, radio, stats, threshold=None, clt_floor=CLT_FLOOR):
    if stats.elements < clt_floor:
        logger.warning(f"IRS outage at N={stats.elements} is below the CLT floor {clt_floor}; the erf form is unreliable")
    gamma0 = radio.threshold if threshold is None else threshold
    return irs_outage_from_stats(stats, gamma0)


def outage_integrated(o_uav, o_irs):
    o_uav, o_irs = np.asarray(o_uav, dtype=float), np.asarray(o_irs, dtype=float)
    if np.any((o_uav < 0) | (o_uav > 1) | (o_irs < 0) | (o_irs > 1)):
        raise ValueError("outage probabilities must lie in [0, 1]")
    out = o_uav * o_irs
    return float(out) if out.ndim == 0 else out


def _quad(fn, lo, hi, points=None, epsabs=1e-10, what="integral"):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, abserr = integrate.quad(fn, lo, hi, points=points, limit=400, epsabs=epsabs, epsrel=1e-9)
        except integrate.IntegrationWarning as exc:
            raise NumericalError(f"{what} did not converge: {exc}") from exc
    if not math.isfinite(value):
        raise NumericalError(f"{what} is not finite")
    return value, abserr


def integrate_half_line(fn, scale, epsabs, points=None, what="integral"):
    """∫₀^∞ fn(x) dx after the substitution x = c·s/(1 − s), c = ``scale``."""
    if scale <= 0:
        raise ValueError("`scale` must be positive")

    def mapped(s):
        if s >= 1.0:
            return 0.0
        return float(fn(scale * s / (1.0 - s))) * scale / (1.0 - s) ** 2

    breaks = None if points is None else [p / (scale + p) for p in points if p > 0]
    value, _ = _quad(mapped, 0.0, 1.0, points=breaks or None, epsabs=epsabs, what=what)
    return value


def ergodic_capacity_exact(outage_fn, bandwidth, scale=1.0, points=None):
    r"""
    Ergodic capacity (B/ln 2)·∫₀^∞ (1 − O(γ))/(1 + γ) dγ.

    The half line is mapped onto [0, 1) by γ = c·s/(1 − s) with c = ``scale``, which should be
    of the order of the typical SNR. ``points`` are SNR breakpoints of a discontinuous outage.
    """
    if bandwidth <= 0:
        raise ValueError("`bandwidth` must be positive")
    value = integrate_half_line(
        lambda gamma: (1.0 - float(outage_fn(gamma))) / (1.0 + gamma),
        scale,
        epsabs=1e-6 * math.log(2.0),
        points=points,
        what="capacity integral",
    )
    return bandwidth / math.log(2.0) * max(value, 0.0)


def capacity_bound_uav(geom, env, radio, height=None):
    mean_snr = min(
        link_snr_scale(geom, env, radio, link, height) * env.link(link).omega for link in ("u", "d")
    )
    return radio.bandwidth * math.log2(1.0 + mean_snr)


def irs_mean_snr(stats):
    """Mean IRS SNR E[X]/t under the active convention."""
    if stats.t is None:
        raise ValueError("`stats` carries no link budget; build it with `cascade_stats`")
    return 0.0 if not math.isfinite(stats.t) else stats.mean_power / stats.t


def capacity_bound_irs(geom, env, radio, stats):
    return radio.bandwidth * math.log2(1.0 + irs_mean_snr(stats))


def capacity_bound_integrated(geom, env, radio, stats, height=None):
    uav = min(link_snr_scale(geom, env, radio, link, height) * env.link(link).omega for link in ("u", "d"))
    return radio.bandwidth * math.log2(1.0 + max(irs_mean_snr(stats), uav))


def energy_efficiency(capacity, power):
    if power <= 0:
        raise ValueError("`power` must be positive")
    return capacity / power


def uav_mean_snr_exact(geom, env, radio, height=None):
    """E[min(S_u·X_u, S_d·X_d)] = ∫₀^∞ (1 − F_u(z/S_u))·(1 − F_d(z/S_d)) dz."""
    scales = [link_snr_scale(geom, env, radio, link, height) for link in ("u", "d")]
    if min(scales) <= 0:
        return 0.0
    fadings = [RicianFading.from_link(env.link(link)) for link in ("u", "d")]
    c = min(s * f.omega for s, f in zip(scales, fadings))

    def survival(z):
        return (1.0 - rician_power_cdf(z / scales[0], fadings[0])) * (1.0 - rician_power_cdf(z / scales[1], fadings[1]))

    return integrate_half_line(survival, c, epsabs=1e-12 * c, what="mean UAV SNR integral")


def mode_outage_fn(scenario, mode):
    """Outage as a function of Γ₀ for one mode, at the scenario's geometry."""
    geom, env, radio = scenario.geometry, scenario.environment, scenario.radio
    mode = Mode(mode)
    stats = scenario.stats() if mode is not Mode.UAV else None

    def uav(gamma):
        return outage_uav(geom, env, radio, threshold=gamma)

    def irs(gamma):
        return irs_outage_from_stats(stats, gamma)

    if mode is Mode.UAV:
        return uav
    if mode is Mode.IRS:
        return irs
    return lambda gamma: outage_integrated(uav(gamma), irs(gamma))


def mode_metrics(scenario, mode, provenance="exact"):
    r"""
    Closed-form metrics of one mode.

    Parameters:
        provenance (`str`): `exact` integrates the outage for the ergodic capacity, `approx`
            uses the Jensen bounds.
    """
    mode = Mode(mode)
    geom, env, radio = scenario.geometry, scenario.environment, scenario.radio
    stats = scenario.stats()
    outage_fn = mode_outage_fn(scenario, mode)
    outage = float(outage_fn(radio.threshold))
    if provenance == "exact":
        uav_scale = min(link_snr_scale(geom, env, radio, link) * env.link(link).omega for link in ("u", "d"))
        scale = {Mode.UAV: uav_scale, Mode.IRS: irs_mean_snr(stats), Mode.INT: max(uav_scale, irs_mean_snr(stats))}[mode]
        capacity = ergodic_capacity_exact(outage_fn, radio.bandwidth, scale=max(scale, 1e-12))
    elif provenance == "approx":
        if mode is Mode.UAV:
            capacity = capacity_bound_uav(geom, env, radio)
        elif mode is Mode.IRS:
            capacity = capacity_bound_irs(geom, env, radio, stats)
        else:
            capacity = capacity_bound_integrated(geom, env, radio, stats)
    else:
        raise ValueError(f"closed-form metrics support `exact` or `approx`, got `{provenance}`")
    power = mode_power(mode, radio, scenario.power_model)
    return ModeMetrics(
        mode=mode,
        outage=outage,
        capacity=capacity,
        power=power,
        ee=energy_efficiency(capacity, power),
        provenance=provenance,
    )
