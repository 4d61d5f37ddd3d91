import math
import re

import numpy as np


# Quoted per-element phase-resolution powers; None stands for infinite resolution.
PHASE_RESOLUTION_POWER_DBM = {
    1: 5.0,
    6: 10.0 * math.log10(78.0),
    None: 45.0,
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([^\s].*?)?\s*$")

# unit -> (dimension, scale to SI). Logarithmic units are handled separately.
UNITS = {
    "m": ("length", 1.0),
    "km": ("length", 1e3),
    "Hz": ("frequency", 1.0),
    "kHz": ("frequency", 1e3),
    "MHz": ("frequency", 1e6),
    "GHz": ("frequency", 1e9),
    "W": ("power", 1.0),
    "mW": ("power", 1e-3),
    "W/Hz": ("power_density", 1.0),
    "J": ("energy", 1.0),
    "kJ": ("energy", 1e3),
    "Wh": ("energy", 3600.0),
    "kg": ("mass", 1.0),
    "kg/m^3": ("density", 1.0),
    "m^2": ("area", 1.0),
    "rad/s": ("angular_velocity", 1.0),
    "bps": ("rate", 1.0),
    "kbps": ("rate", 1e3),
    "Mbps": ("rate", 1e6),
    "s": ("time", 1.0),
}
LOG_UNITS = {
    "dB": "ratio",
    "dBm": "power",
    "dBW": "power",
    "dBm/Hz": "power_density",
    "dBW/Hz": "power_density",
}


def db_to_linear(value_db):
    return np.power(10.0, np.asarray(value_db, dtype=float) / 10.0)


def linear_to_db(value):
    value = np.asarray(value, dtype=float)
    if np.any(value <= 0):
        raise ValueError("`value` must be positive to be expressed in dB")
    return 10.0 * np.log10(value)


def dbm_to_watt(value_dbm):
    return db_to_linear(value_dbm) * 1e-3


def watt_to_dbm(value_w):
    return linear_to_db(np.asarray(value_w, dtype=float) * 1e3)


def rate_to_snr_threshold(rate, bandwidth):
    """Γ₀ = 2^{R₀/B} − 1."""
    if bandwidth <= 0:
        raise ValueError("`bandwidth` must be positive")
    return float(np.expm1(rate / bandwidth * math.log(2.0)))


def snr_threshold_to_rate(threshold, bandwidth):
    return float(bandwidth * np.log1p(threshold) / math.log(2.0))


def ebn0_to_system_gain(ebn0_db, noise_density):
    """Map an E_b/N₀ (dB) onto the system gain Â = (E_b/N₀)·N₀, N₀ in W/Hz."""
    return float(db_to_linear(ebn0_db) * noise_density)


def angle_scale(unit):
    """Multiplier taking radians into the declared angle unit."""
    if unit == "rad":
        return 1.0
    if unit == "deg":
        return 180.0 / math.pi
    raise ValueError(f"Unknown angle unit `{unit}`, expected `rad` or `deg`")


def to_angle_unit(theta_rad, unit):
    return np.asarray(theta_rad, dtype=float) * angle_scale(unit)


def phase_resolution_power(bits):
    """Per-element phase-resolution power in W for a supported bit depth."""
    if bits not in PHASE_RESOLUTION_POWER_DBM:
        supported = ", ".join("inf" if b is None else str(b) for b in PHASE_RESOLUTION_POWER_DBM)
        raise ValueError(f"No phase-resolution power known for {bits} bits (supported: {supported})")
    return float(dbm_to_watt(PHASE_RESOLUTION_POWER_DBM[bits]))


def parse_quantity(text, dimension):
    """Parse ``"<number> <unit>"`` into an SI (linear) float of the given dimension.

    A bare number is accepted only for ``dimension="ratio"`` and read as linear.
    """
    if isinstance(text, bool):
        raise ValueError(f"expected a quantity with unit, got {text!r}")
    if isinstance(text, (int, float)):
        if dimension == "ratio":
            return float(text)
        raise ValueError(f"missing unit for {text!r}, expected a {dimension} unit")
    match = _QUANTITY.match(str(text))
    if match is None:
        raise ValueError(f"malformed quantity {text!r}")
    number, unit = float(match.group(1)), match.group(2)
    if unit is None:
        if dimension == "ratio":
            return number
        raise ValueError(f"missing unit in {text!r}, expected a {dimension} unit")
    if unit in LOG_UNITS:
        if LOG_UNITS[unit] != dimension:
            raise ValueError(f"unit `{unit}` in {text!r} is not a {dimension} unit")
        linear = float(db_to_linear(number))
        if unit.startswith("dBm"):
            linear *= 1e-3
        return linear
    if unit not in UNITS or UNITS[unit][0] != dimension:
        raise ValueError(f"unit `{unit}` in {text!r} is not a {dimension} unit")
    return number * UNITS[unit][1]
