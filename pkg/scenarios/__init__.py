import logging
import math
from pathlib import Path

import yaml
from packaging import version

from models.errors import ScenarioError
from models.geometry_env import LinkEnvironment, LinkParams, ScenarioGeometry
from models.performance import IrsConfig, RadioConfig
from models.power import PowerModel
from models.scenario import Scenario, SimSettings, SweepAxis, ValidateSettings
from utils import ebn0_to_system_gain, linear_to_db, parse_quantity, phase_resolution_power


logger = logging.getLogger(__name__)

SCENARIO_DIR = Path(__file__).resolve().parent
SUPPORTED_SCHEMA = "1"

TOP_LEVEL = ("schema_version", "name", "geometry", "environment", "radio", "irs", "power", "sim", "sweep", "validate")
SECTIONS = {
    "geometry": ("source", "destination", "uav", "height", "h_min", "h_max"),
    "environment": ("angle_unit", "uplink", "downlink"),
    "link": ("e", "g", "q", "v", "eta", "K", "omega"),
    "radio": (
        "bandwidth", "p_u", "p_d", "noise_density", "noise_mode", "system_gain", "ebn0",
        "residual_si", "threshold", "rate",
    ),
    "irs": (
        "elements", "n_min", "n_max", "element_power", "phase_bits", "spacing",
        "cascade_convention", "element_offset", "moments_variant", "clt_floor",
    ),
    "power": (
        "rho", "disc_area", "blade_speed", "rotor_radius", "solidity", "profile_drag",
        "induced_correction", "mass", "circuit_power", "bs_circuit_power", "battery",
    ),
    "sim": ("trials", "seed", "antithetic", "workers", "chunk_size", "per_element_geometry"),
    "validate": ("heights", "elements", "sigmas", "clt_allowance", "capacity_rtol", "histogram"),
}
REQUIRED = {
    "geometry": ("source", "destination", "uav", "height", "h_min", "h_max"),
    "environment": ("uplink", "downlink"),
    "link": ("e", "g", "q", "v", "eta", "K"),
    "radio": ("bandwidth", "p_u", "p_d", "noise_density"),
}
# key -> dimension of the "<number> <unit>" string
POWER_UNITS = {
    "rho": "density",
    "disc_area": "area",
    "blade_speed": "angular_velocity",
    "rotor_radius": "length",
    "mass": "mass",
    "circuit_power": "power",
    "bs_circuit_power": "power",
    "battery": "energy",
    "solidity": "ratio",
    "profile_drag": "ratio",
    "induced_correction": "ratio",
}


def _section(doc, name, where=None, schema=None):
    where = where or name
    value = doc.get(name, {}) if isinstance(doc, dict) else None
    if value is None:
        value = {}
    if not isinstance(value, dict):
        raise ScenarioError(f"section `{where}` must be a mapping")
    allowed = SECTIONS[schema or name]
    unknown = sorted(set(value) - set(allowed))
    if unknown:
        raise ScenarioError(f"unknown key(s) {unknown} in `{where}`, expected a subset of {list(allowed)}")
    missing = [k for k in REQUIRED.get(schema or name, ()) if k not in value]
    if missing:
        raise ScenarioError(f"missing key(s) {missing} in `{where}`")
    return value


def _quantity(value, dimension, where):
    try:
        return parse_quantity(value, dimension)
    except ValueError as exc:
        raise ScenarioError(f"`{where}`: {exc}") from exc


def _number(value, where, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"`{where}` must be a plain number, got {value!r}")
    if kind is int and not float(value).is_integer():
        raise ScenarioError(f"`{where}` must be an integer, got {value!r}")
    return kind(value)


def _flag(value, where):
    if not isinstance(value, bool):
        raise ScenarioError(f"`{where}` must be true or false, got {value!r}")
    return value


def _point(value, where):
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ScenarioError(f"`{where}` must be a pair [x, y] of lengths")
    return tuple(_quantity(v, "length", where) for v in value)


def _geometry(doc):
    sec = _section(doc, "geometry")
    return ScenarioGeometry(
        source_xy=_point(sec["source"], "geometry.source"),
        dest_xy=_point(sec["destination"], "geometry.destination"),
        uav_xy=_point(sec["uav"], "geometry.uav"),
        height=_quantity(sec["height"], "length", "geometry.height"),
        h_min=_quantity(sec["h_min"], "length", "geometry.h_min"),
        h_max=_quantity(sec["h_max"], "length", "geometry.h_max"),
    )


def _link(sec, name):
    sec = _section(sec, name, where=f"environment.{name}", schema="link")
    where = f"environment.{name}"
    return LinkParams(
        e=_number(sec["e"], f"{where}.e"),
        g=_number(sec["g"], f"{where}.g"),
        q=_number(sec["q"], f"{where}.q"),
        v=_number(sec["v"], f"{where}.v"),
        eta=_quantity(sec["eta"], "ratio", f"{where}.eta"),
        K=_quantity(sec["K"], "ratio", f"{where}.K"),
        omega=_quantity(sec.get("omega", 1.0), "ratio", f"{where}.omega"),
    )


def _environment(doc):
    sec = _section(doc, "environment")
    return LinkEnvironment(
        uplink=_link(sec, "uplink"),
        downlink=_link(sec, "downlink"),
        angle_unit=sec.get("angle_unit", "rad"),
    )


def _radio(doc):
    sec = _section(doc, "radio")
    if "system_gain" in sec and "ebn0" in sec:
        raise ScenarioError("give only one of `radio.system_gain` and `radio.ebn0`")
    if "threshold" in sec and "rate" in sec:
        raise ScenarioError("give only one of `radio.threshold` and `radio.rate`")
    bandwidth = _quantity(sec["bandwidth"], "frequency", "radio.bandwidth")
    noise_density = _quantity(sec["noise_density"], "power_density", "radio.noise_density")
    noise_mode = sec.get("noise_mode", "bandwidth")
    noise_power = noise_density * bandwidth if noise_mode == "bandwidth" else noise_density
    if "ebn0" in sec:
        ebn0_db = float(linear_to_db(_quantity(sec["ebn0"], "ratio", "radio.ebn0")))
        system_gain = ebn0_to_system_gain(ebn0_db, noise_density)
    else:
        system_gain = _quantity(sec.get("system_gain", 1.0), "ratio", "radio.system_gain")
    # R_SI is declared relative to the noise power.
    residual_si = _quantity(sec.get("residual_si", 0.0), "ratio", "radio.residual_si") * noise_power
    kwargs = {}
    if "rate" in sec:
        kwargs["rate"] = _quantity(sec["rate"], "rate", "radio.rate")
    else:
        kwargs["threshold"] = _quantity(sec.get("threshold", 1.0), "ratio", "radio.threshold")
    return RadioConfig(
        bandwidth=bandwidth,
        p_u=_quantity(sec["p_u"], "power", "radio.p_u"),
        p_d=_quantity(sec["p_d"], "power", "radio.p_d"),
        noise_density=noise_density,
        system_gain=system_gain,
        residual_si=residual_si,
        noise_mode=noise_mode,
        **kwargs,
    )


def _irs(doc):
    sec = _section(doc, "irs")
    if "element_power" in sec and "phase_bits" in sec:
        raise ScenarioError("give only one of `irs.element_power` and `irs.phase_bits`")
    kwargs = {}
    for key in ("elements", "n_min", "n_max", "element_offset", "clt_floor"):
        if key in sec:
            kwargs[key] = _number(sec[key], f"irs.{key}", int)
    for key in ("cascade_convention", "moments_variant"):
        if key in sec:
            kwargs[key] = sec[key]
    if "element_power" in sec:
        kwargs["element_power"] = _quantity(sec["element_power"], "power", "irs.element_power")
    if "phase_bits" in sec:
        bits = sec["phase_bits"]
        bits = None if bits in ("inf", math.inf) else bits
        try:
            kwargs["element_power"] = phase_resolution_power(bits)
        except ValueError as exc:
            raise ScenarioError(f"`irs.phase_bits`: {exc}") from exc
    if "spacing" in sec:
        kwargs["spacing"] = _quantity(sec["spacing"], "length", "irs.spacing")
    return IrsConfig(**kwargs)


def _power(doc):
    sec = _section(doc, "power")
    return PowerModel(**{key: _quantity(value, POWER_UNITS[key], f"power.{key}") for key, value in sec.items()})


def _sim(doc):
    sec = _section(doc, "sim")
    kwargs = {}
    for key in ("trials", "seed", "workers", "chunk_size"):
        if key in sec:
            kwargs[key] = _number(sec[key], f"sim.{key}", int)
    for key in ("antithetic", "per_element_geometry"):
        if key in sec:
            kwargs[key] = _flag(sec[key], f"sim.{key}")
    return SimSettings(**kwargs)


def _sweep(doc):
    sweep = doc.get("sweep") or []
    if not isinstance(sweep, list):
        raise ScenarioError("`sweep` must be a list of `var=lo:hi:step` strings")
    return tuple(SweepAxis.parse(str(axis)) for axis in sweep)


def _validate(doc):
    sec = _section(doc, "validate")
    kwargs = {}
    if "heights" in sec:
        kwargs["heights"] = tuple(_quantity(h, "length", "validate.heights") for h in sec["heights"])
    if "elements" in sec:
        kwargs["elements"] = tuple(_number(n, "validate.elements", int) for n in sec["elements"])
    for key in ("sigmas", "clt_allowance", "capacity_rtol", "histogram"):
        if key in sec:
            kwargs[key] = _number(sec[key], f"validate.{key}")
    return ValidateSettings(**kwargs)


def check_schema_version(doc):
    raw = doc.get("schema_version")
    if raw is None:
        raise ScenarioError("missing `schema_version`")
    try:
        found = version.parse(str(raw))
    except version.InvalidVersion as exc:
        raise ScenarioError(f"invalid `schema_version` {raw!r}") from exc
    if found.major != version.parse(SUPPORTED_SCHEMA).major:
        raise ScenarioError(f"unsupported `schema_version` {raw}, this build reads {SUPPORTED_SCHEMA}.x")
    return found


def scenario_from_dict(doc, name=None):
    """Build a Scenario from a parsed scenario document, enforcing the strict schema."""
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a mapping")
    unknown = sorted(set(doc) - set(TOP_LEVEL))
    if unknown:
        raise ScenarioError(f"unknown top-level key(s) {unknown}, expected a subset of {list(TOP_LEVEL)}")
    check_schema_version(doc)
    try:
        return Scenario(
            name=str(doc.get("name", name or "scenario")),
            geometry=_geometry(doc),
            environment=_environment(doc),
            radio=_radio(doc),
            irs=_irs(doc),
            power=_power(doc),
            sim=_sim(doc),
            sweep=_sweep(doc),
            validate=_validate(doc),
        )
    except ScenarioError:
        raise
    except (TypeError, ValueError) as exc:
        raise ScenarioError(str(exc)) from exc


def resolve_scenario_path(path_or_name):
    """A path to a YAML file, or the name of a shipped scenario (``default``, ``weak_los``, ...)."""
    path = Path(path_or_name)
    if path.suffix in (".yaml", ".yml"):
        return path
    shipped = SCENARIO_DIR / f"{path_or_name}.yaml"
    if shipped.exists():
        return shipped
    return path


def load_scenario(path_or_name):
    path = resolve_scenario_path(path_or_name)
    if not path.exists():
        raise ScenarioError(f"scenario file {path} not found")
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = yaml.safe_load(f)
        except yaml.YAMLError as exc:
            raise ScenarioError(f"{path} is not valid YAML: {exc}") from exc
    scenario = scenario_from_dict(doc, name=path.stem)
    logger.info(f"loaded scenario `{scenario.name}` from {path}")
    return scenario
