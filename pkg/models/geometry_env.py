import logging
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Tuple

import numpy as np
from scipy.special import expit

from utils import angle_scale, to_angle_unit


logger = logging.getLogger(__name__)

LINKS = ("u", "d")


def _check_link(link):
    if link not in LINKS:
        raise ValueError(f"Unknown link `{link}`, expected one of {LINKS}")


@dataclass(frozen=True)
class ScenarioGeometry:
    r"""
    Ground nodes and the UAV position. The UAV carries the IRS, so both relays share
    one position.

    Parameters:
        source_xy (`Tuple[float, float]`): horizontal position of the source in m.
        dest_xy (`Tuple[float, float]`): horizontal position of the destination in m.
        uav_xy (`Tuple[float, float]`): horizontal position of the UAV in m.
        height (`float`): UAV altitude in m.
        h_min (`float`), h_max (`float`): admissible altitude interval in m.
    """

    source_xy: Tuple[float, float]
    dest_xy: Tuple[float, float]
    uav_xy: Tuple[float, float]
    height: float
    h_min: float
    h_max: float

    def __post_init__(self):
        if self.h_min <= 0:
            raise ValueError("`h_min` must be positive")
        if self.h_max < self.h_min:
            raise ValueError("`h_max` must not be below `h_min`")
        if not self.h_min <= self.height <= self.h_max:
            raise ValueError(f"`height`={self.height} outside [{self.h_min}, {self.h_max}]")

    @property
    def offset_u(self):
        return math.dist(self.uav_xy, self.source_xy)

    @property
    def offset_d(self):
        return math.dist(self.uav_xy, self.dest_xy)

    @property
    def span(self):
        return math.dist(self.source_xy, self.dest_xy)

    def horizontal_offset(self, link):
        _check_link(link)
        return self.offset_u if link == "u" else self.offset_d

    def slant_distance(self, link, height=None):
        h = self.height if height is None else np.asarray(height, dtype=float)
        return np.hypot(self.horizontal_offset(link), h)

    def axis(self):
        """Unit vector pointing from the source to the destination."""
        span = self.span
        if span == 0:
            raise ValueError("source and destination coincide; the relay axis is undefined")
        return ((self.dest_xy[0] - self.source_xy[0]) / span, (self.dest_xy[1] - self.source_xy[1]) / span)

    def with_height(self, height):
        return replace(self, height=float(height))

    def with_distance(self, distance):
        """Place the UAV on the relay axis at the given horizontal distance from the source."""
        ax, ay = self.axis()
        xy = (self.source_xy[0] + distance * ax, self.source_xy[1] + distance * ay)
        return replace(self, uav_xy=xy)


class ExponentCoefficients(NamedTuple):
    A: float
    B: float
    C: float
    B1: float
    C1: float


@dataclass(frozen=True)
class LinkParams:
    r"""
    Environment constants of one air-to-ground link.

    Parameters:
        e (`float`), g (`float`): LoS S-curve constants.
        q (`float`), v (`float`): path-loss exponent constants, α = p_L·q + v.
        eta (`float`): excess aerial path loss, linear.
        K (`float`): Rician factor, linear.
        omega (`float`): mean local fading power.
    """

    e: float
    g: float
    q: float
    v: float
    eta: float
    K: float
    omega: float = 1.0

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("`eta` must be positive")
        if self.omega <= 0:
            raise ValueError("`omega` must be positive")
        if self.K < 0:
            raise ValueError("`K` must be non-negative")
        if self.g <= 0:
            raise ValueError("`g` must be positive")
        if self.e < 0:
            raise ValueError("`e` must be non-negative")

    @property
    def varsigma(self):
        return self.e * math.exp(self.g * self.e)

    @property
    def b(self):
        return (self.K + 1.0) / self.omega

    def coefficients(self, angle_unit="rad"):
        # The Taylor step acts on g·θ; with θ in degrees the radian slope is g·180/π.
        g = self.g * angle_scale(angle_unit)
        s = self.varsigma
        return ExponentCoefficients(
            A=self.q + self.v * (1.0 + s),
            B=3.0 * s * self.v * g,
            C=4.5 * self.v * s * g**2,
            B1=3.0 * s * g,
            C1=4.5 * s * g**2,
        )


@dataclass(frozen=True)
class LinkEnvironment:
    uplink: LinkParams
    downlink: LinkParams
    angle_unit: str = "rad"
    _coefficients: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        angle_scale(self.angle_unit)
        object.__setattr__(
            self,
            "_coefficients",
            {"u": self.uplink.coefficients(self.angle_unit), "d": self.downlink.coefficients(self.angle_unit)},
        )

    def link(self, link):
        _check_link(link)
        return self.uplink if link == "u" else self.downlink

    def coefficients(self, link):
        _check_link(link)
        return self._coefficients[link]


def elevation_angle(h, horizontal_offset):
    """Elevation angle in rad; π/2 straight above the node."""
    h = np.asarray(h, dtype=float)
    offset = np.asarray(horizontal_offset, dtype=float)
    if np.any(h < 0) or np.any(offset < 0):
        raise ValueError("`h` and `horizontal_offset` must be non-negative")
    if np.any((h == 0) & (offset == 0)):
        raise ValueError("elevation angle undefined when `h` and `horizontal_offset` are both zero")
    theta = np.arctan2(h, offset)
    return float(theta) if theta.ndim == 0 else theta


def los_probability(theta, env, link):
    """LoS probability; ``theta`` is expressed in ``env.angle_unit``."""
    p = env.link(link)
    theta = np.asarray(theta, dtype=float)
    if p.e == 0:
        out = np.ones_like(theta)
    else:
        out = expit(p.g * (theta - p.e) - math.log(p.e))
    return float(out) if out.ndim == 0 else out


def path_loss_exponent_exact(theta, env, link):
    p = env.link(link)
    return p.q * los_probability(theta, env, link) + p.v


def exponent_at(h, horizontal_offset, env, link):
    """Exact exponent at a geometry, converting the elevation into the declared unit."""
    theta = to_angle_unit(elevation_angle(h, horizontal_offset), env.angle_unit)
    return path_loss_exponent_exact(theta, env, link)


def exponent_terms(h, horizontal_offset, env, link):
    """Numerator and denominator polynomials of the altitude approximation."""
    h = np.asarray(h, dtype=float)
    z = float(horizontal_offset)
    c = env.coefficients(link)
    w = z + 2.0 * np.sqrt(z * z + h * h)
    numerator = c.A * w**2 - c.B * h * w + c.C * h**2
    denominator = (1.0 + env.link(link).varsigma) * w**2 - c.B1 * h * w + c.C1 * h**2
    return numerator, denominator


def path_loss_exponent_approx(h, horizontal_offset, env, link):
    if np.any(np.asarray(h) < 0):
        raise ValueError("`h` must be non-negative")
    if horizontal_offset <= 0:
        raise ValueError("`horizontal_offset` must be positive for the altitude approximation")
    numerator, denominator = exponent_terms(h, horizontal_offset, env, link)
    if np.any(denominator <= 0):
        raise ValueError("altitude approximation outside its validity region (denominator <= 0)")
    out = numerator / denominator
    return float(out) if np.ndim(out) == 0 else out


def approx_exponent_deviation(env, link, offsets, heights):
    """Max |approx − exact| exponent per horizontal offset over a height grid."""
    heights = np.asarray(heights, dtype=float)
    deviation = {}
    for z in offsets:
        exact = exponent_at(heights, z, env, link)
        approx = path_loss_exponent_approx(heights, z, env, link)
        deviation[float(z)] = float(np.max(np.abs(approx - exact)))
    logger.debug(f"exponent deviation on link {link}: {deviation}")
    return deviation


def irs_element_positions(geom, elements, spacing):
    """Horizontal positions of the IRS elements along the relay axis, centred on the UAV."""
    ax, ay = geom.axis()
    k = np.arange(elements, dtype=float) - (elements - 1) / 2.0
    x = geom.uav_xy[0] + k * spacing * ax
    y = geom.uav_xy[1] + k * spacing * ay
    return np.stack([x, y], axis=-1)


def element_offsets(geom, elements, spacing):
    """Per-element horizontal offsets (ẑ_u,k, ẑ_d,k)."""
    xy = irs_element_positions(geom, elements, spacing)
    offset_u = np.hypot(xy[:, 0] - geom.source_xy[0], xy[:, 1] - geom.source_xy[1])
    offset_d = np.hypot(xy[:, 0] - geom.dest_xy[0], xy[:, 1] - geom.dest_xy[1])
    return offset_u, offset_d
