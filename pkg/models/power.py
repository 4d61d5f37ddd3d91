import logging
import math
from dataclasses import dataclass, replace
from enum import Enum

from utils import phase_resolution_power


logger = logging.getLogger(__name__)

STANDARD_GRAVITY = 9.80665


class Mode(str, Enum):
    UAV = "UAV"
    IRS = "IRS"
    INT = "INT"


@dataclass(frozen=True)
class PowerModel:
    r"""
    Hovering rotorcraft plus IRS hardware power budget.

    Parameters:
        rho (`float`): air density in kg/m^3.
        disc_area (`float`): rotor disc area A in m^2.
        blade_speed (`float`): blade angular velocity ξ in rad/s.
        rotor_radius (`float`): rotor radius r in m.
        solidity (`float`): rotor solidity s.
        profile_drag (`float`): profile drag coefficient δ.
        induced_correction (`float`): induced-power correction κ.
        mass (`float`): UAV mass in kg.
        circuit_power (`float`): UAV circuit power p_c in W.
        bs_circuit_power (`float`): circuit power of each ground node p_bs in W.
        battery (`float`): battery energy E_B in J.
        element_power (`float`): per-element phase-resolution power P_r(b) in W.
        elements (`int`): number of IRS elements N.
    """

    rho: float = 1.225
    disc_area: float = 0.503
    blade_speed: float = 300.0
    rotor_radius: float = 0.4
    solidity: float = 0.05
    profile_drag: float = 0.012
    induced_correction: float = 0.1
    mass: float = 2.0
    gravity: float = STANDARD_GRAVITY
    circuit_power: float = 5.0
    bs_circuit_power: float = 1.0
    battery: float = 3.6e5
    element_power: float = phase_resolution_power(1)
    elements: int = 50

    def __post_init__(self):
        if self.element_power < 0:
            raise ValueError("`element_power` must be non-negative")
        if self.elements < 0:
            raise ValueError("`elements` must be non-negative")
        if self.circuit_power < 0 or self.bs_circuit_power < 0:
            raise ValueError("circuit powers must be non-negative")

    def with_elements(self, elements):
        return replace(self, elements=int(elements))

    def with_element_power(self, element_power):
        return replace(self, element_power=float(element_power))

    @property
    def irs_power(self):
        return self.elements * self.element_power

    @property
    def hover(self):
        return hover_power(self)

    @property
    def common_power(self):
        """C = p_c + p_h + 2·p_bs, shared by all three mode totals."""
        return self.circuit_power + self.hover + 2.0 * self.bs_circuit_power


def hover_power(model):
    physical = {
        "rho": model.rho,
        "disc_area": model.disc_area,
        "blade_speed": model.blade_speed,
        "rotor_radius": model.rotor_radius,
        "solidity": model.solidity,
        "mass": model.mass,
        "gravity": model.gravity,
    }
    for name, value in physical.items():
        if not value > 0:
            raise ValueError(f"`{name}` must be positive, got {value}")
    if model.profile_drag < 0:
        raise ValueError("`profile_drag` must be non-negative")
    if model.induced_correction < -1:
        raise ValueError("`induced_correction` must be at least -1")
    profile = model.profile_drag / 8.0 * model.rho * model.solidity * model.disc_area * (model.blade_speed * model.rotor_radius) ** 3
    induced = (1.0 + model.induced_correction) * math.sqrt((model.mass * model.gravity) ** 3 / (2.0 * model.rho * model.disc_area))
    return profile + induced


def mode_power(mode, radio, model):
    mode = Mode(mode)
    if mode is Mode.UAV:
        return radio.p_u + radio.p_d + model.common_power
    if mode is Mode.IRS:
        return radio.p_u + model.irs_power + model.common_power
    return radio.p_u + radio.p_d + model.irs_power + model.common_power


def hover_endurance(model):
    """T_hov = E_B / (p_c + N·P_r(b) + p_h); transmit power stays outside the hover budget."""
    p_uav = model.circuit_power + model.irs_power + model.hover
    if p_uav <= 0:
        raise ValueError("hover power budget must be positive")
    return model.battery / p_uav
