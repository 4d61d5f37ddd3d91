import logging
import math
from dataclasses import dataclass, field, replace
from multiprocessing import Pool
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.stats import ncx2
from tqdm.auto import tqdm

from .channel_stats import RicianFading, double_rician_moments, sample_cascade_amplitude, sample_rician_power
from .geometry_env import element_offsets, exponent_at
from .performance import link_snr_scale
from .power import Mode, mode_power


logger = logging.getLogger(__name__)

MIN_TRIALS = 10_000
CI_SIGMAS = 3.0

# Substream indices of the counter-based generator.
STREAM_XU, STREAM_XD, STREAM_HU, STREAM_HD, STREAM_HIST = range(5)


def stream(seed, chunk, substream):
    """Independent Philox stream keyed by (seed, chunk, substream)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(chunk, substream))))


@dataclass(frozen=True)
class SimPlan:
    r"""
    Monte-Carlo run plan.

    Parameters:
        trials (`int`): number of channel realizations, at least 10⁴.
        seed (`int`): root seed; results depend only on (seed, trials, chunk_size, scenario).
        modes (`Tuple[Mode]`): modes to estimate.
        antithetic (`bool`): pair every Gaussian draw with its negation.
        keep_samples (`bool`): retain per-trial SNRs in the estimates.
        chunk_size (`int`): trials per RNG chunk; the reduction runs in chunk order.
        workers (`int`): process count; does not change the result.
        per_element_geometry (`bool`): form the IRS SNR from per-element distances and exponents.
    """

    trials: int
    seed: int = 0
    modes: Tuple[Mode, ...] = (Mode.UAV, Mode.IRS, Mode.INT)
    antithetic: bool = False
    keep_samples: bool = False
    chunk_size: int = 65_536
    workers: int = 1
    per_element_geometry: bool = False
    progress: bool = False

    def __post_init__(self):
        if self.trials < MIN_TRIALS:
            raise ValueError(f"`trials` must be at least {MIN_TRIALS}, got {self.trials}")
        if self.chunk_size < 1 or self.workers < 1:
            raise ValueError("`chunk_size` and `workers` must be positive")
        object.__setattr__(self, "modes", tuple(Mode(m) for m in self.modes))

    @classmethod
    def from_scenario(cls, scenario, **overrides):
        sim = scenario.sim
        kwargs = dict(
            trials=sim.trials,
            seed=sim.seed,
            antithetic=sim.antithetic,
            chunk_size=sim.chunk_size,
            workers=sim.workers,
            per_element_geometry=sim.per_element_geometry,
        )
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kwargs)

    def chunks(self):
        count = math.ceil(self.trials / self.chunk_size)
        return [(i, min(self.chunk_size, self.trials - i * self.chunk_size)) for i in range(count)]


@dataclass
class _Moments:
    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, values):
        if values.size == 0:
            return cls()
        mean = float(values.mean())
        return cls(values.size, mean, float(((values - mean) ** 2).sum()))

    def merge(self, other):
        if other.n == 0:
            return self
        if self.n == 0:
            return other
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n / n
        m2 = self.m2 + other.m2 + delta**2 * self.n * other.n / n
        return _Moments(n, mean, m2)

    @property
    def se(self):
        return math.sqrt(self.m2 / (self.n - 1) / self.n) if self.n > 1 else math.nan


@dataclass(frozen=True)
class ModeEstimate:
    mode: Mode
    trials: int
    outage: float
    outage_se: float
    capacity: float
    capacity_se: float
    mean_snr: float
    mean_snr_se: float
    samples: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def ci(self, metric):
        value, se = getattr(self, metric), getattr(self, f"{metric}_se")
        return value - CI_SIGMAS * se, value + CI_SIGMAS * se

    def as_row(self):
        lo, hi = self.ci("outage")
        return {
            "mode": self.mode.value,
            "trials": self.trials,
            "outage": self.outage,
            "outage_se": self.outage_se,
            "outage_ci_lo": lo,
            "outage_ci_hi": hi,
            "capacity_bps": self.capacity,
            "capacity_se": self.capacity_se,
            "mean_snr": self.mean_snr,
            "mean_snr_se": self.mean_snr_se,
            "provenance": "simulated",
        }


@dataclass(frozen=True)
class SimulationResult:
    estimates: Dict[Mode, ModeEstimate]
    selection_frequency: float
    selection_se: float
    trials: int
    seed: int

    def __getitem__(self, mode):
        return self.estimates[Mode(mode)]


@dataclass(frozen=True)
class _ChunkContext:
    fading_u: RicianFading
    fading_d: RicianFading
    scale_u: float
    scale_d: float
    irs_gain: float
    element_weights: Optional[np.ndarray]
    elements: int
    threshold: float
    bandwidth: float
    power_ratio: float
    need_uav: bool
    need_irs: bool


def _chunk_context(scenario, plan):
    geom, env, radio = scenario.geometry, scenario.environment, scenario.radio
    modes = set(plan.modes)
    need_uav = bool(modes & {Mode.UAV, Mode.INT})
    need_irs = bool(modes & {Mode.IRS, Mode.INT})
    V = radio.composite(env)
    h = geom.height
    weights = None
    if plan.per_element_geometry and scenario.irs.elements > 0:
        off_u, off_d = element_offsets(geom, scenario.irs.elements, scenario.irs.spacing)
        d_u, d_d = np.hypot(off_u, h), np.hypot(off_d, h)
        alpha_u = exponent_at(h, off_u, env, "u")
        alpha_d = exponent_at(h, off_d, env, "d")
        weights = np.sqrt(d_u ** (-alpha_u) * d_d ** (-alpha_d))
        irs_gain = V
    else:
        alpha_u = exponent_at(h, geom.offset_u, env, "u")
        alpha_d = exponent_at(h, geom.offset_d, env, "d")
        irs_gain = V * geom.slant_distance("u") ** (-alpha_u) * geom.slant_distance("d") ** (-alpha_d)
    power = scenario.power_model
    return _ChunkContext(
        fading_u=scenario.fading_u,
        fading_d=scenario.fading_d,
        scale_u=link_snr_scale(geom, env, radio, "u"),
        scale_d=link_snr_scale(geom, env, radio, "d"),
        irs_gain=irs_gain,
        element_weights=weights,
        elements=scenario.irs.elements,
        threshold=radio.threshold,
        bandwidth=radio.bandwidth,
        power_ratio=mode_power(Mode.IRS, radio, power) / mode_power(Mode.UAV, radio, power),
        need_uav=need_uav,
        need_irs=need_irs,
    )


def _mode_snrs(ctx, plan, chunk, size):
    snrs = {}
    if ctx.need_uav:
        x_u = sample_rician_power(ctx.fading_u, size, stream(plan.seed, chunk, STREAM_XU), plan.antithetic)
        x_d = sample_rician_power(ctx.fading_d, size, stream(plan.seed, chunk, STREAM_XD), plan.antithetic)
        snrs[Mode.UAV] = np.minimum(ctx.scale_u * x_u, ctx.scale_d * x_d)
    if ctx.need_irs:
        if ctx.elements == 0:
            snrs[Mode.IRS] = np.zeros(size)
        else:
            rngs = (stream(plan.seed, chunk, STREAM_HU), stream(plan.seed, chunk, STREAM_HD))
            z = sample_cascade_amplitude(
                ctx.fading_u, ctx.fading_d, ctx.elements, rngs, size=size, weights=ctx.element_weights, antithetic=plan.antithetic
            )
            snrs[Mode.IRS] = ctx.irs_gain * z**2
    if ctx.need_uav and ctx.need_irs:
        snrs[Mode.INT] = np.maximum(snrs[Mode.UAV], snrs[Mode.IRS])
    return snrs


def _simulate_chunk(task):
    ctx, plan, chunk, size = task
    snrs = _mode_snrs(ctx, plan, chunk, size)
    partial = {}
    for mode in plan.modes:
        snr = snrs[mode]
        rate = ctx.bandwidth * np.log1p(snr) / math.log(2.0)
        partial[mode] = (
            _Moments.of((snr < ctx.threshold).astype(float)),
            _Moments.of(rate),
            _Moments.of(snr),
            snr if plan.keep_samples else None,
        )
    selection = None
    if Mode.UAV in snrs and Mode.IRS in snrs:
        selection = _Moments.of((snrs[Mode.IRS] >= snrs[Mode.UAV] * ctx.power_ratio).astype(float))
    return partial, selection


def simulate(scenario, plan):
    """Estimate outage, ergodic capacity and mean SNR of every mode in ``plan.modes``."""
    ctx = _chunk_context(scenario, plan)
    tasks = [(ctx, plan, chunk, size) for chunk, size in plan.chunks()]
    bar = dict(total=len(tasks), desc="Monte-Carlo chunks", disable=not plan.progress)
    if plan.workers > 1:
        with Pool(processes=plan.workers) as pool:
            partials = list(tqdm(pool.imap(_simulate_chunk, tasks), **bar))
    else:
        partials = [_simulate_chunk(task) for task in tqdm(tasks, **bar)]

    estimates = {}
    for mode in plan.modes:
        outage, rate, snr, samples = _Moments(), _Moments(), _Moments(), []
        for partial, _ in partials:
            o, r, s, kept = partial[mode]
            outage, rate, snr = outage.merge(o), rate.merge(r), snr.merge(s)
            if kept is not None:
                samples.append(kept)
        p = outage.mean
        estimates[mode] = ModeEstimate(
            mode=mode,
            trials=plan.trials,
            outage=p,
            outage_se=math.sqrt(p * (1.0 - p) / plan.trials),
            capacity=rate.mean,
            capacity_se=rate.se,
            mean_snr=snr.mean,
            mean_snr_se=snr.se,
            samples=np.concatenate(samples) if samples else None,
        )
    selection = _Moments()
    for _, part in partials:
        if part is not None:
            selection = selection.merge(part)
    freq = selection.mean if selection.n else math.nan
    se = math.sqrt(freq * (1.0 - freq) / selection.n) if selection.n else math.nan
    return SimulationResult(estimates=estimates, selection_frequency=freq, selection_se=se, trials=plan.trials, seed=plan.seed)


def simulate_mode(scenario, plan, mode):
    mode = Mode(mode)
    if mode not in plan.modes:
        raise ValueError(f"mode {mode.value} is not in the plan")
    return simulate(scenario, plan)[mode]


def selection_frequency(scenario, plan):
    """Frequency of Γ_IRS ≥ Γ_UAV·P_IRS/P_UAV with its standard error."""
    result = simulate(scenario, replace(plan, modes=(Mode.UAV, Mode.IRS)))
    return result.selection_frequency, result.selection_se


@dataclass(frozen=True)
class CascadeHistogram:
    edges: np.ndarray
    density: np.ndarray
    reference: np.ndarray
    noncentrality: float
    sup_distance: float
    samples: int
    elements: int

    @property
    def centers(self):
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def mass(self):
        return float(np.sum(self.density * np.diff(self.edges)))


def empirical_pdf_of_cascade_power(scenario, plan, elements, bins=60):
    r"""
    Histogram of the standardized squared cascade X = (Z/σ_Z)² against the non-central
    chi-square density with one degree of freedom and non-centrality 2λ = μ_Z²/σ_Z².

    The sup-distance compares the empirical CDF with the reference CDF at the bin edges.
    """
    if elements < 1:
        raise ValueError("`elements` must be at least 1")
    moments = double_rician_moments(scenario.fading_u, scenario.fading_d, variant="classical")
    mu_z, sigma_z = elements * moments.mean, math.sqrt(elements * moments.variance)
    nc = (mu_z / sigma_z) ** 2
    reference = ncx2(1, nc)
    edges = np.linspace(reference.ppf(1e-4), reference.ppf(1.0 - 1e-4), bins + 1)

    draws = []
    for chunk, size in tqdm(plan.chunks(), desc="cascade histogram", disable=not plan.progress):
        rngs = (stream(plan.seed, chunk, STREAM_HU), stream(plan.seed, chunk, STREAM_HIST))
        z = sample_cascade_amplitude(scenario.fading_u, scenario.fading_d, elements, rngs, size=size, antithetic=plan.antithetic)
        draws.append((z / sigma_z) ** 2)
    x = np.sort(np.concatenate(draws))
    density, _ = np.histogram(x, bins=edges, density=True)
    empirical_cdf = np.searchsorted(x, edges, side="right") / x.size
    sup_distance = float(np.max(np.abs(empirical_cdf - reference.cdf(edges))))
    logger.info(f"cascade histogram N={elements}: sup-distance {sup_distance:.4f} over {x.size} samples")
    return CascadeHistogram(
        edges=edges,
        density=density,
        reference=reference.pdf(0.5 * (edges[1:] + edges[:-1])),
        noncentrality=nc,
        sup_distance=sup_distance,
        samples=int(x.size),
        elements=int(elements),
    )
