import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Tuple

import numpy as np

from utils import db_to_linear

from .channel_stats import RicianFading
from .errors import ScenarioError
from .geometry_env import LinkEnvironment, ScenarioGeometry
from .performance import IrsConfig, RadioConfig, cascade_stats
from .power import PowerModel


logger = logging.getLogger(__name__)

SWEEP_VARIABLES = ("height", "elements", "distance", "threshold", "phase_power")


@dataclass(frozen=True)
class SweepAxis:
    variable: str
    lo: float
    hi: float
    step: float

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ScenarioError(f"Unknown sweep variable `{self.variable}`, expected one of {SWEEP_VARIABLES}")
        if self.step <= 0:
            raise ScenarioError(f"sweep step for `{self.variable}` must be positive")
        if self.hi < self.lo:
            raise ScenarioError(f"sweep for `{self.variable}` has hi < lo")

    @classmethod
    def parse(cls, text):
        """Parse ``var=lo:hi:step``."""
        try:
            variable, bounds = text.split("=", 1)
            lo, hi, step = (float(x) for x in bounds.split(":"))
        except ValueError as exc:
            raise ScenarioError(f"malformed grid `{text}`, expected var=lo:hi:step") from exc
        return cls(variable.strip(), lo, hi, step)

    def values(self):
        count = int(math.floor((self.hi - self.lo) / self.step + 1e-9)) + 1
        values = self.lo + self.step * np.arange(count)
        if self.variable == "elements":
            return [int(round(v)) for v in values]
        return [float(v) for v in values]


@dataclass(frozen=True)
class SimSettings:
    trials: int = 200_000
    seed: int = 0
    antithetic: bool = False
    workers: int = 1
    chunk_size: int = 65_536
    per_element_geometry: bool = False


@dataclass(frozen=True)
class ValidateSettings:
    r"""
    Closed-form vs oracle comparison grid and tolerances.

    Parameters:
        heights (`Tuple[float]`), elements (`Tuple[int]`): grid of the outage comparison.
        sigmas (`float`): tolerance in standard errors.
        clt_allowance (`float`): extra absolute allowance for the CLT-based IRS outage.
        capacity_rtol (`float`): relative tolerance of the exact capacity vs the simulated mean rate.
        histogram (`float`): largest sup-distance between the empirical CDF of the standardized squared
            cascade and its non-central chi-square reference.
    """

    heights: Tuple[float, ...] = (150.0, 250.0, 350.0, 500.0, 700.0)
    elements: Tuple[int, ...] = (20, 50, 100, 200, 400)
    sigmas: float = 3.0
    clt_allowance: float = 0.01
    capacity_rtol: float = 0.01
    histogram: float = 0.03


@dataclass(frozen=True)
class Scenario:
    """Everything one run needs: geometry, environment, radio, IRS, power budget and run settings."""

    name: str
    geometry: ScenarioGeometry
    environment: LinkEnvironment
    radio: RadioConfig
    irs: IrsConfig = field(default_factory=IrsConfig)
    power: PowerModel = field(default_factory=PowerModel)
    sim: SimSettings = field(default_factory=SimSettings)
    sweep: Tuple[SweepAxis, ...] = ()
    validate: ValidateSettings = field(default_factory=ValidateSettings)

    def __post_init__(self):
        if self.irs.elements + self.irs.element_offset < 1:
            raise ScenarioError(f"`elements`={self.irs.elements} leaves no summed IRS element (offset {self.irs.element_offset})")
        # the altitude approximation needs the UAV strictly off both ground nodes
        for link in ("u", "d"):
            if self.geometry.horizontal_offset(link) <= 0:
                raise ScenarioError(f"UAV sits directly above the {'source' if link == 'u' else 'destination'}; horizontal offsets must be positive")

    @cached_property
    def power_model(self):
        return replace(self.power, elements=self.irs.elements, element_power=self.irs.element_power)

    @property
    def fading_u(self):
        return RicianFading.from_link(self.environment.uplink)

    @property
    def fading_d(self):
        return RicianFading.from_link(self.environment.downlink)

    def stats(self, elements=None, height=None):
        return cascade_stats(self.geometry, self.environment, self.radio, self.irs, elements=elements, height=height)

    def with_elements(self, elements):
        return replace(self, irs=self.irs.with_elements(elements))

    def with_height(self, height):
        geom = self.geometry
        if not geom.h_min <= height <= geom.h_max:
            raise ScenarioError(f"height {height} m outside [{geom.h_min}, {geom.h_max}]")
        return replace(self, geometry=geom.with_height(height))

    def with_distance(self, distance):
        if distance < 0:
            raise ScenarioError("source-UAV distance must be non-negative")
        return replace(self, geometry=self.geometry.with_distance(distance))

    def with_variable(self, variable, value):
        """Apply one sweep coordinate."""
        if variable == "height":
            return self.with_height(value)
        if variable == "elements":
            return self.with_elements(int(value))
        if variable == "distance":
            return self.with_distance(value)
        if variable == "threshold":
            return replace(self, radio=self.radio.with_threshold(float(db_to_linear(value))))
        if variable == "phase_power":
            return replace(self, irs=self.irs.with_element_power(value))
        raise ScenarioError(f"Unknown sweep variable `{variable}`, expected one of {SWEEP_VARIABLES}")
