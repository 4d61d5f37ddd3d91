import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from utils import rate_to_snr_threshold

from .channel_stats import mean_cascade_power
from .errors import InfeasibleError
from .geometry_env import LINKS, exponent_at, exponent_terms, path_loss_exponent_approx
from .performance import capacity_bound_irs, capacity_bound_uav, energy_efficiency, link_exponents
from .power import Mode, mode_power


logger = logging.getLogger(__name__)

PHI = (1 + math.sqrt(5)) / 2

QT_TOLERANCE = 1e-6
QT_MAX_ITER = 100
INNER_TOLERANCE = 1e-4
SCAN_POINTS = 64
GUARD_POINTS = 64
FD_POINTS = 50
FD_STEP = 1e-3
GRID_STEP = 1.0
# Margin, in units of the halved log objective, kept below zero after the common log rescaling.
SIGN_MARGIN = 0.5
RECEIVED_CONCAVITY_LIMIT = 1e10

KINDS = ("single_ratio_max", "sum_ratio_min", "max_min_ratio")


def golden_section_maximize(f, a, b, tol=1e-3):
    """Derivative-free 1D maximization; returns (x, f(x))."""
    c = b - (b - a) / PHI
    d = a + (b - a) / PHI
    fc, fd = f(c), f(d)
    while abs(b - a) > tol:
        if fc < fd:
            a, c, fc = c, d, fd
            d = a + (b - a) / PHI
            fd = f(d)
        else:
            b, d, fd = d, c, fc
            c = b - (b - a) / PHI
            fc = f(c)
    x = (a + b) / 2
    return x, f(x)


def scan_maximize(f, lo, hi, points=SCAN_POINTS, tol=INNER_TOLERANCE):
    """Coarse grid scan, then golden-section refinement in the bracket around the best point.

    ``tol`` is relative to the interval width.
    """
    if hi <= lo:
        return lo, f(lo)
    grid = np.linspace(lo, hi, points)
    values = [f(x) for x in grid]
    best = int(np.argmax(values))
    a, b = grid[max(best - 1, 0)], grid[min(best + 1, points - 1)]
    x, fx = golden_section_maximize(f, a, b, tol=tol * (hi - lo))
    if values[best] > fx:
        return float(grid[best]), values[best]
    return float(x), fx


@dataclass(frozen=True)
class QtProblem:
    r"""
    Scalar fractional program over ``[lo, hi]``.

    Parameters:
        kind (`str`): ``single_ratio_max`` maximizes O/R; ``sum_ratio_min`` minimizes Σ O_i/R_i;
            ``max_min_ratio`` minimizes max_i O_i/R_i, the sign-flipped form of a max-min program.
        numerators (`Tuple[Callable]`), denominators (`Tuple[Callable]`): O_i ≥ 0 and R_i > 0 on the interval.
        x0 (`float`, *optional*): starting point, the midpoint by default.
        tol (`float`): stopping threshold on the auxiliary variables, |Δy| ≤ tol·max(1, |y|) for the
            single ratio and |Δy| ≤ tol·|y| for the min-form transform of the other kinds.
    """

    kind: str
    numerators: Tuple[Callable, ...]
    denominators: Tuple[Callable, ...]
    lo: float
    hi: float
    x0: Optional[float] = None
    tol: float = QT_TOLERANCE
    max_iter: int = QT_MAX_ITER
    inner_tol: float = INNER_TOLERANCE
    guard_points: int = GUARD_POINTS

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"Unknown problem kind `{self.kind}`, expected one of {KINDS}")
        if len(self.numerators) != len(self.denominators) or not self.numerators:
            raise ValueError("numerators and denominators must be non-empty and paired")
        if self.kind == "single_ratio_max" and len(self.numerators) != 1:
            raise ValueError("`single_ratio_max` takes exactly one ratio")
        if self.hi < self.lo:
            raise ValueError("feasible interval is empty")

    @property
    def start(self):
        x = 0.5 * (self.lo + self.hi) if self.x0 is None else self.x0
        return float(min(max(x, self.lo), self.hi))

    def ratios(self, x):
        return [O(x) / R(x) for O, R in zip(self.numerators, self.denominators)]

    def objective(self, x):
        ratios = self.ratios(x)
        if self.kind == "single_ratio_max":
            return ratios[0]
        return sum(ratios) if self.kind == "sum_ratio_min" else max(ratios)

    def auxiliary(self, x):
        return tuple(math.sqrt(max(O(x), 0.0)) / R(x) for O, R in zip(self.numerators, self.denominators))

    def check_guards(self):
        for x in np.linspace(self.lo, self.hi, self.guard_points):
            for i, (O, R) in enumerate(zip(self.numerators, self.denominators)):
                if not R(x) > 0:
                    raise ValueError(f"denominator {i} is not positive at x={x:.6g}")
                o = O(x)
                if o < -1e-12 * max(1.0, abs(o)):
                    raise ValueError(f"numerator {i} is negative at x={x:.6g}")


@dataclass(frozen=True)
class GuardVerdict:
    name: str
    link: str
    satisfied: bool
    failing_points: Tuple[float, ...] = ()
    margin: float = math.nan
    fd_agreement: Optional[float] = None
    notes: Dict[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class OptReport:
    problem: str
    x: float
    objective: float
    iterations: int
    converged: bool
    x_trajectory: Tuple[float, ...] = ()
    y_trajectory: Tuple[Tuple[float, ...], ...] = ()
    value_trajectory: Tuple[float, ...] = ()
    qt_x: Optional[float] = None
    guards: Tuple[GuardVerdict, ...] = ()
    certified: bool = True
    exhaustive_x: Optional[float] = None
    exhaustive_value: Optional[float] = None
    gap: Optional[float] = None
    approx_exhaustive_x: Optional[float] = None
    approx_gap: Optional[float] = None
    init_sensitivity: Optional[float] = None
    sign_premise_restored: bool = False
    extras: Dict[str, object] = field(default_factory=dict)

    def as_record(self):
        return _jsonable(asdict(self))


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def _settled(new, old, tol, floor=1.0):
    for a, b in zip(new, old):
        if math.isinf(a) or math.isinf(b):
            if a != b:
                return False
        elif abs(a - b) > tol * max(floor, abs(a)):
            return False
    return True


def qt_single_ratio_max(problem):
    """Quadratic transform for max O/R: y = √O/R in closed form, x by a scalar search on 2y√O − y²R."""
    problem.check_guards()
    O, R = problem.numerators[0], problem.denominators[0]
    x = problem.start
    ratio = O(x) / R(x)
    y = problem.auxiliary(x)[0]
    xs, ys, values = [x], [(y,)], [ratio]
    stop = "iteration_cap"
    iterations = 0
    for iterations in range(1, problem.max_iter + 1):

        def surrogate(v, y=y):
            return 2.0 * y * math.sqrt(max(O(v), 0.0)) - y * y * R(v)

        x_new, _ = scan_maximize(surrogate, problem.lo, problem.hi, tol=problem.inner_tol)
        ratio_new = O(x_new) / R(x_new)
        if ratio_new < ratio:
            # the previous iterate is kept; a drop beyond tolerance means the x-step failed
            stop = "stalled" if ratio - ratio_new <= problem.tol * max(1.0, abs(ratio)) else "regressed"
            break
        x, ratio = x_new, ratio_new
        y_new = problem.auxiliary(x)[0]
        xs.append(x)
        ys.append((y_new,))
        values.append(ratio)
        done = _settled((y_new,), (y,), problem.tol)
        y = y_new
        if done:
            stop = "tolerance"
            break
    converged = stop in ("tolerance", "stalled")
    if not converged:
        logger.warning(f"quadratic transform stopped without converging ({stop})")
    return OptReport(
        problem=problem.kind,
        x=x,
        objective=ratio,
        iterations=iterations,
        converged=converged,
        x_trajectory=tuple(xs),
        y_trajectory=tuple(ys),
        value_trajectory=tuple(values),
        qt_x=x,
        extras={"stop": stop},
    )


def _min_form_auxiliary(pairs, x):
    """y_i = 1/√(O_i·R_i), the minimizer of ½[y²O_i² + 1/(y²R_i²)]; infinite where O_i vanishes."""
    out = []
    for O, R in pairs:
        o, r = O(x), R(x)
        out.append(1.0 / math.sqrt(o * r) if o > 0 else math.inf)
    return tuple(out)


def _qt_minimize(problem, combine):
    r"""
    Minimize ``combine`` of the ratios with the min-form quadratic transform.

    Each ratio is O_i/R_i = min_{y_i>0} ½[y_i²·O_i² + 1/(y_i²·R_i²)]. The y-step sets
    y_i = 1/√(O_i(x)·R_i(x)) in closed form; the x-step minimizes ``combine`` of the bracketed
    terms at fixed y. A ratio whose numerator vanishes enters as O_i/R_i directly. Both steps
    lower the joint objective, so the ratio objective never increases; iteration stops when
    every y_i has settled within ``tol``.
    """
    problem.check_guards()
    pairs = list(zip(problem.numerators, problem.denominators))
    x = problem.start
    value = problem.objective(x)
    y = _min_form_auxiliary(pairs, x)
    xs, ys, values, epigraph = [x], [y], [value], value
    stop = "iteration_cap"
    iterations = 0
    for iterations in range(1, problem.max_iter + 1):

        def transformed(v, y=y):
            terms = []
            for (O, R), y_i in zip(pairs, y):
                if math.isinf(y_i):
                    terms.append(O(v) / R(v))
                else:
                    terms.append(0.5 * (y_i * y_i * O(v) ** 2 + 1.0 / (y_i * y_i * R(v) ** 2)))
            return combine(terms)

        x_new, neg = scan_maximize(lambda v: -transformed(v), problem.lo, problem.hi, tol=problem.inner_tol)
        value_new = problem.objective(x_new)
        if value_new > value:
            stop = "stalled" if value_new - value <= problem.tol * max(1.0, abs(value)) else "regressed"
            break
        x, value, epigraph = x_new, value_new, -neg
        y_new = _min_form_auxiliary(pairs, x)
        xs.append(x)
        ys.append(y_new)
        values.append(value)
        done = _settled(y_new, y, problem.tol, floor=0.0)
        y = y_new
        if done:
            stop = "tolerance"
            break
    converged = stop in ("tolerance", "stalled")
    if not converged:
        logger.warning(f"{problem.kind} stopped without converging ({stop})")
    return OptReport(
        problem=problem.kind,
        x=x,
        objective=value,
        iterations=iterations,
        converged=converged,
        x_trajectory=tuple(xs),
        y_trajectory=tuple(ys),
        value_trajectory=tuple(values),
        qt_x=x,
        extras={"epigraph": epigraph, "stop": stop},
    )


def qt_sum_ratio_min(problem):
    return _qt_minimize(problem, sum)


def qt_max_min_ratio(problem):
    """min_x max_i O_i/R_i; the returned epigraph value z bounds every ratio at x★."""
    return _qt_minimize(problem, max)


def exhaustive_search(fn, grid):
    """Grid maximizer of a vectorized objective; returns (x, value)."""
    values = np.asarray(fn(grid), dtype=float)
    best = int(np.argmax(values))
    return float(grid[best]), float(values[best])


def height_grid(geom, step=GRID_STEP):
    grid = np.arange(geom.h_min, geom.h_max + 0.5 * step, step)
    return grid[grid <= geom.h_max + 1e-9]


# ---------------------------------------------------------------------------
# IRS element count


def _irs_element_model(scenario):
    stats = scenario.stats()
    if stats.lam_prime <= 0:
        raise ValueError("per-element non-centrality must be positive")
    irs, radio = scenario.irs, scenario.radio
    variance = stats.sigma_z2 / stats.count
    base_power = mode_power(Mode.IRS, radio, scenario.power_model.with_elements(0))

    def gain(lam):
        return mean_cascade_power(lam, lam / stats.lam_prime * variance, stats.nu, stats.convention)

    def capacity(lam):
        return radio.bandwidth * np.log2(1.0 + gain(lam) / stats.t)

    def power(lam):
        return base_power + (lam / stats.lam_prime - irs.element_offset) * irs.element_power

    def ee_of_elements(n):
        lam = (np.asarray(n, dtype=float) + irs.element_offset) * stats.lam_prime
        return capacity(lam) / power(lam)

    return stats, capacity, power, ee_of_elements


def optimize_irs_elements(scenario, tol=QT_TOLERANCE, max_iter=QT_MAX_ITER):
    """EE-optimal element count in IRS-only mode, solved over λ and recovered on the integer lattice."""
    irs = scenario.irs
    if irs.n_min < irs.clt_floor:
        logger.warning(f"`n_min`={irs.n_min} is below the CLT floor {irs.clt_floor}")
    stats, capacity, power, ee_of_elements = _irs_element_model(scenario)
    lam_prime, offset = stats.lam_prime, irs.element_offset
    lo, hi = (irs.n_min + offset) * lam_prime, (irs.n_max + offset) * lam_prime
    problem = QtProblem(
        "single_ratio_max",
        (lambda lam: float(capacity(lam)),),
        (lambda lam: float(power(lam)),),
        lo,
        hi,
        tol=tol,
        max_iter=max_iter,
    )
    run = qt_single_ratio_max(problem)
    rerun = qt_single_ratio_max(replace(problem, x0=lo))

    n_continuous = run.x / lam_prime - offset
    candidates = sorted({int(np.clip(math.floor(n_continuous), irs.n_min, irs.n_max)), int(np.clip(math.ceil(n_continuous), irs.n_min, irs.n_max))})
    ee = [float(ee_of_elements(n)) for n in candidates]
    n_star = candidates[int(np.argmax(ee))]

    lattice = np.arange(irs.n_min, irs.n_max + 1)
    n_ex, ee_ex = exhaustive_search(ee_of_elements, lattice)
    logger.info(f"IRS elements: N*={n_star} (continuous {n_continuous:.3f}), exhaustive {int(n_ex)}")
    return replace(
        run,
        problem="irs_elements",
        x=float(n_star),
        objective=float(ee_of_elements(n_star)),
        qt_x=n_continuous,
        exhaustive_x=n_ex,
        exhaustive_value=ee_ex,
        gap=abs(n_star - n_ex),
        approx_exhaustive_x=n_ex,
        approx_gap=abs(n_star - n_ex),
        init_sensitivity=rerun.x / lam_prime - offset,
        extras={**run.extras, "lambda_star": run.x, "lambda_prime": lam_prime, "elements_continuous": n_continuous},
    )


@dataclass(frozen=True)
class ElementSizing:
    elements: int
    branch: str
    continuous: float
    sqrt_continuous: float
    required_snr: float


def min_power_elements(scenario, rate=None):
    r"""
    Fewest elements meeting the rate target on the mean-SNR capacity bound.

    The mean cascade power is inverted exactly under the active convention (a quadratic in the
    element count when standardized). ``sqrt_continuous`` keeps the square-root expression
    (1/λ′)(√(γ★·t) − ν − λ′) for reference.
    """
    irs, radio = scenario.irs, scenario.radio
    rate = radio.target_rate if rate is None else rate
    if rate < 0:
        raise ValueError("`rate` must be non-negative")
    stats = scenario.stats()
    gamma_req = rate_to_snr_threshold(rate, radio.bandwidth)
    target = gamma_req * stats.t
    lam_prime, variance = stats.lam_prime, stats.sigma_z2 / stats.count
    if stats.convention == "standardized":
        a, b = 2.0 * variance * lam_prime, variance * stats.nu
        count = (-b + math.sqrt(b * b + 4.0 * a * target)) / (2.0 * a)
    else:
        count = (target - stats.nu) / lam_prime
    continuous = count - irs.element_offset
    sqrt_form = (math.sqrt(target) - stats.nu - lam_prime) / lam_prime
    needed = math.ceil(continuous - 1e-9)
    if needed > irs.n_max:
        raise InfeasibleError(f"rate {rate:.6g} bps needs {needed} elements, above `n_max`={irs.n_max}")
    if needed <= irs.n_min:
        elements, branch = irs.n_min, "n_min"
    else:
        elements, branch = needed, "interior"
    return ElementSizing(elements=int(elements), branch=branch, continuous=continuous, sqrt_continuous=sqrt_form, required_snr=gamma_req)


def min_power_uplink(scenario, rate=None, elements=None):
    """Smallest p_u whose mean-SNR IRS capacity bound equals the rate target."""
    geom, env, radio = scenario.geometry, scenario.environment, scenario.radio
    rate = radio.target_rate if rate is None else rate
    if rate < 0:
        raise ValueError("`rate` must be non-negative")
    stats = scenario.stats(elements=elements)
    alpha_u, alpha_d = link_exponents(geom, env)
    path = geom.slant_distance("u") ** alpha_u * geom.slant_distance("d") ** alpha_d
    gamma_req = rate_to_snr_threshold(rate, radio.bandwidth)
    scale = radio.system_gain**2 / (env.uplink.eta * env.downlink.eta * radio.noise_power)
    return gamma_req * path / (scale * stats.mean_power)


# ---------------------------------------------------------------------------
# Height objectives


def _log_distance(h, offset):
    return 0.5 * np.log(np.asarray(h, dtype=float) ** 2 + offset**2)


def irs_height_objective_exact(scenario, h):
    """−α_u·ln d_u − α_d·ln d_d with the exact exponents."""
    geom, env = scenario.geometry, scenario.environment
    return -sum(exponent_at(h, geom.horizontal_offset(link), env, link) * _log_distance(h, geom.horizontal_offset(link)) for link in LINKS)


def irs_height_objective_approx(scenario, h):
    geom, env = scenario.geometry, scenario.environment
    return -sum(
        path_loss_exponent_approx(h, geom.horizontal_offset(link), env, link) * _log_distance(h, geom.horizontal_offset(link))
        for link in LINKS
    )


def _log_mean_received(scenario, link):
    received = scenario.radio.mean_received(scenario.environment, link)
    if received <= 0:
        raise ValueError("UAV height optimization needs positive transmit powers on both links")
    return math.log(received)


def uav_height_objective_exact(scenario, h):
    """min_i (log I_i − α_i·ln d_i), the log of the smaller mean link SNR."""
    geom, env = scenario.geometry, scenario.environment
    return np.minimum(
        *[
            _log_mean_received(scenario, link) - exponent_at(h, geom.horizontal_offset(link), env, link) * _log_distance(h, geom.horizontal_offset(link))
            for link in LINKS
        ]
    )


def uav_height_objective_approx(scenario, h):
    geom, env = scenario.geometry, scenario.environment
    return np.minimum(
        *[
            _log_mean_received(scenario, link)
            - path_loss_exponent_approx(h, geom.horizontal_offset(link), env, link) * _log_distance(h, geom.horizontal_offset(link))
            for link in LINKS
        ]
    )


def _irs_ratio_terms(scenario):
    geom, env = scenario.geometry, scenario.environment
    numerators, denominators = [], []
    for link in LINKS:
        z = geom.horizontal_offset(link)

        def numerator(h, z=z, link=link):
            num, _ = exponent_terms(h, z, env, link)
            return 0.5 * math.log(h * h + z * z) * float(num)

        def denominator(h, z=z, link=link):
            return float(exponent_terms(h, z, env, link)[1])

        numerators.append(numerator)
        denominators.append(denominator)
    return tuple(numerators), tuple(denominators)


def _uav_ratio_terms(scenario, log_reference):
    """Sign-flipped numerators −O_i = L·num − 2·log(I_i/I_ref)·den so that −O_i/R_i = α_i·L − 2·log I′_i."""
    geom, env = scenario.geometry, scenario.environment
    numerators, denominators = [], []
    for link in LINKS:
        z = geom.horizontal_offset(link)
        log_i = _log_mean_received(scenario, link) - log_reference

        def numerator(h, z=z, link=link, log_i=log_i):
            num, den = exponent_terms(h, z, env, link)
            return math.log(h * h + z * z) * float(num) - 2.0 * log_i * float(den)

        def denominator(h, z=z, link=link):
            return float(exponent_terms(h, z, env, link)[1])

        numerators.append(numerator)
        denominators.append(denominator)
    return tuple(numerators), tuple(denominators)


def uav_log_reference(scenario, grid=None):
    r"""
    Common log-scale reference log I_ref ≥ 0 that keeps every flipped numerator non-negative.

    Dividing both I_i by the same I_ref shifts both link objectives by the same constant, so the
    max-min argmax is unchanged.
    """
    geom, env = scenario.geometry, scenario.environment
    grid = height_grid(geom) if grid is None else grid
    peak = max(
        float(np.max(_log_mean_received(scenario, link) - path_loss_exponent_approx(grid, geom.horizontal_offset(link), env, link) * _log_distance(grid, geom.horizontal_offset(link))))
        for link in LINKS
    )
    return max(0.0, peak + SIGN_MARGIN)


# ---------------------------------------------------------------------------
# Concavity guards


def _second_difference(fn, h):
    step = FD_STEP * h
    center = fn(h)
    d2 = (fn(h + step) - 2.0 * center + fn(h - step)) / step**2
    noise = 8.0 * np.finfo(float).eps * max(abs(center), 1.0) / step**2
    return d2, noise


def _fd_agreement(clause_ok, fn, grid):
    """Fraction of points where a satisfied clause is matched by a non-positive second difference."""
    agree = 0
    for ok, h in zip(clause_ok, grid):
        d2, noise = _second_difference(fn, float(h))
        concave = d2 <= noise
        agree += int(not ok or concave)
    return agree / len(grid)


def _irs_clause(h, z, coeffs):
    if coeffs.B <= 0:
        return False, -math.inf
    if z >= h:
        lhs, rhs = 11.0 * coeffs.B * z**4, (78.0 * coeffs.A + 14.0 * coeffs.C) * h**5
    else:
        lhs, rhs = 12.0 * coeffs.B * h**4, z**4 * (78.0 * coeffs.A * z + coeffs.B + 14.0 * coeffs.C * z)
    return lhs >= rhs, (lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)


def check_concavity_irs(scenario, link, points=GUARD_POINTS, fd_points=FD_POINTS):
    r"""
    Concave-convex condition of the IRS height ratio on one link.

    Requires ẑ > 10 and, pointwise, 11·B·ẑ⁴ ≥ (78A + 14C)·h⁵ where ẑ ≥ h or
    12·B·h⁴ ≥ ẑ⁴·(78A·ẑ + B + 14C·ẑ) where h > ẑ. The verdict is cross-checked against the
    central-difference curvature of −O_i(h).
    """
    geom, env = scenario.geometry, scenario.environment
    z = geom.horizontal_offset(link)
    coeffs = env.coefficients(link)
    grid = np.linspace(geom.h_min, geom.h_max, points)
    clauses = [_irs_clause(float(h), z, coeffs) for h in grid]
    offset_ok = z > 10.0
    failing = tuple(float(h) for h, (ok, _) in zip(grid, clauses) if not (ok and offset_ok))
    margin = min(m for _, m in clauses)

    numerator = _irs_ratio_terms(scenario)[0][LINKS.index(link)]
    fd_grid = np.linspace(geom.h_min, geom.h_max, fd_points)
    fd_ok = [offset_ok and _irs_clause(float(h), z, coeffs)[0] for h in fd_grid]
    agreement = _fd_agreement(fd_ok, lambda h: -numerator(h), fd_grid)
    verdict = GuardVerdict(
        name="irs_concavity",
        link=link,
        satisfied=not failing,
        failing_points=failing,
        margin=margin,
        fd_agreement=agreement,
        notes={"offset_clause": offset_ok},
    )
    if failing:
        logger.warning(f"IRS concavity guard violated on link {link} at {len(failing)}/{points} points")
    return verdict


def check_concavity_uav(scenario, link, log_reference=0.0, points=GUARD_POINTS, fd_points=FD_POINTS):
    r"""
    Concavity condition of the UAV height numerator on one link:
    log I_i ≤ (18A − 5B + 4C)/(36(1+ς) − 10B′ + 8C′)·log(h² + ẑ²).

    ``log_reference`` is subtracted from log I_i, matching the numerator actually optimized.
    """
    geom, env = scenario.geometry, scenario.environment
    z = geom.horizontal_offset(link)
    c = env.coefficients(link)
    varsigma = env.link(link).varsigma
    ratio = (18.0 * c.A - 5.0 * c.B + 4.0 * c.C) / (36.0 * (1.0 + varsigma) - 10.0 * c.B1 + 8.0 * c.C1)
    received = scenario.radio.mean_received(env, link)
    log_i = _log_mean_received(scenario, link) - log_reference

    grid = np.linspace(geom.h_min, geom.h_max, points)
    rhs = ratio * np.log(grid**2 + z**2)
    ok = log_i <= rhs
    failing = tuple(float(h) for h, good in zip(grid, ok) if not good)

    def numerator(h):
        num, den = exponent_terms(h, z, env, link)
        return 2.0 * log_i * float(den) - math.log(h * h + z * z) * float(num)

    fd_grid = np.linspace(geom.h_min, geom.h_max, fd_points)
    fd_ok = log_i <= ratio * np.log(fd_grid**2 + z**2)
    agreement = _fd_agreement(fd_ok, numerator, fd_grid)
    verdict = GuardVerdict(
        name="uav_concavity",
        link=link,
        satisfied=not failing,
        failing_points=failing,
        margin=float(np.min(rhs - log_i)),
        fd_agreement=agreement,
        notes={"coefficient_ratio": ratio, "received_rule": received < RECEIVED_CONCAVITY_LIMIT},
    )
    if failing:
        logger.warning(f"UAV concavity guard violated on link {link} at {len(failing)}/{points} points")
    return verdict


# ---------------------------------------------------------------------------
# Height optimizers


def optimize_irs_height(scenario, tol=QT_TOLERANCE, max_iter=QT_MAX_ITER):
    """EE-optimal altitude in IRS-only mode: minimize Σ_i α_i(h)·ln d_i(h) over [h_min, h_max]."""
    geom = scenario.geometry
    guards = tuple(check_concavity_irs(scenario, link) for link in LINKS)
    numerators, denominators = _irs_ratio_terms(scenario)
    problem = QtProblem(
        "sum_ratio_min", numerators, denominators, geom.h_min, geom.h_max, x0=math.sqrt(geom.h_min * geom.h_max), tol=tol, max_iter=max_iter
    )
    run = qt_sum_ratio_min(problem)
    rerun = qt_sum_ratio_min(replace(problem, x0=geom.h_min))

    grid = height_grid(geom)
    ex_x, ex_value = exhaustive_search(lambda h: irs_height_objective_exact(scenario, h), grid)
    approx_x, _ = exhaustive_search(lambda h: irs_height_objective_approx(scenario, h), grid)
    certified = all(g.satisfied for g in guards)
    if not certified:
        logger.warning("IRS height guards violated; returning the exhaustive-search optimum")
    x = run.x if certified else ex_x
    at = scenario.with_height(x)
    stats = at.stats()
    ee = energy_efficiency(capacity_bound_irs(at.geometry, at.environment, at.radio, stats), mode_power(Mode.IRS, at.radio, at.power_model))
    return replace(
        run,
        problem="irs_height",
        x=x,
        objective=ee,
        guards=guards,
        certified=certified,
        exhaustive_x=ex_x,
        exhaustive_value=ex_value,
        gap=abs(run.x - ex_x) / ex_x,
        approx_exhaustive_x=approx_x,
        approx_gap=abs(run.x - approx_x),
        init_sensitivity=rerun.x,
        extras={**run.extras, "ratio_sum": run.objective},
    )


def optimize_uav_height(scenario, tol=QT_TOLERANCE, max_iter=QT_MAX_ITER):
    """EE-optimal altitude in UAV-only mode: max-min of the log mean link SNRs in epigraph form."""
    geom = scenario.geometry
    grid = height_grid(geom)
    log_reference = uav_log_reference(scenario, grid)
    restored = log_reference > 0
    if restored:
        logger.warning(f"flipped numerators negative; rescaled both links by log I_ref = {log_reference:.4f}")
    guards = tuple(check_concavity_uav(scenario, link, log_reference=log_reference) for link in LINKS)
    numerators, denominators = _uav_ratio_terms(scenario, log_reference)
    problem = QtProblem(
        "max_min_ratio", numerators, denominators, geom.h_min, geom.h_max, x0=math.sqrt(geom.h_min * geom.h_max), tol=tol, max_iter=max_iter
    )
    run = qt_max_min_ratio(problem)
    rerun = qt_max_min_ratio(replace(problem, x0=geom.h_min))

    ex_x, ex_value = exhaustive_search(lambda h: uav_height_objective_exact(scenario, h), grid)
    approx_x, _ = exhaustive_search(lambda h: uav_height_objective_approx(scenario, h), grid)
    certified = all(g.satisfied for g in guards)
    if not certified:
        logger.warning("UAV height guards violated; returning the exhaustive-search optimum")
    x = run.x if certified else ex_x
    at = scenario.with_height(x)
    ee = energy_efficiency(capacity_bound_uav(at.geometry, at.environment, at.radio), mode_power(Mode.UAV, at.radio, at.power_model))
    return replace(
        run,
        problem="uav_height",
        x=x,
        objective=ee,
        guards=guards,
        certified=certified,
        exhaustive_x=ex_x,
        exhaustive_value=ex_value,
        gap=abs(run.x - ex_x) / ex_x,
        approx_exhaustive_x=approx_x,
        approx_gap=abs(run.x - approx_x),
        init_sensitivity=rerun.x,
        sign_premise_restored=restored,
        extras={
            **run.extras,
            "log_reference": log_reference,
            "sign_premise": "restored" if restored else "held",
            "max_min_ratio": run.objective,
        },
    )
