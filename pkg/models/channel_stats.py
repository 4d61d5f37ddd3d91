import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import gammainc, i0e
from scipy.stats import poisson

from .errors import NumericalError


logger = logging.getLogger(__name__)

SERIES_TOLERANCE = 1e-14
POISSON_TAIL = 1e-14
SERIES_CAP = 120
TRUNCATION_TOLERANCE = 1e-10
# Beyond this |z| the Kummer-transformed series is replaced by its asymptotic expansion.
ASYMPTOTIC_THRESHOLD = 500.0

CONVENTIONS = ("standardized", "unscaled")
MOMENT_VARIANTS = ("classical", "unit_scatter")


@dataclass(frozen=True)
class RicianFading:
    K: float
    omega: float = 1.0

    def __post_init__(self):
        if self.K < 0 or self.omega <= 0:
            raise ValueError("Rician fading needs `K` >= 0 and `omega` > 0")

    @classmethod
    def from_link(cls, params):
        return cls(K=params.K, omega=params.omega)

    @property
    def b(self):
        return (self.K + 1.0) / self.omega

    @property
    def los_amplitude(self):
        return math.sqrt(self.K * self.omega / (self.K + 1.0))

    @property
    def scatter_variance(self):
        """Variance of each Gaussian component of the scattered part."""
        return self.omega / (2.0 * (self.K + 1.0))


def _power_series(a, b, z, tol, max_terms):
    term, total = 1.0, 1.0
    for n in range(max_terms):
        term *= (a + n) / (b + n) * z / (n + 1)
        total += term
        if term == 0.0 or abs(term) <= tol * abs(total):
            return total
    raise NumericalError(f"1F1({a}; {b}; {z}) did not converge in {max_terms} terms")


def _asymptotic_negative(a, b, z, tol):
    # 1F1(a;b;z) ~ Γ(b)/Γ(b−a)·(−z)^{−a}·Σ (a)_n (1+a−b)_n / n! · (−z)^{−n}
    x = -z
    term, total = 1.0, 1.0
    for n in range(60):
        nxt = term * (a + n) * (1.0 + a - b + n) / ((n + 1) * x)
        if abs(nxt) >= abs(term):
            break
        term = nxt
        total += term
        if abs(term) <= tol * abs(total):
            break
    return gamma_fn(b) / gamma_fn(b - a) * x ** (-a) * total


def kummer_1f1(a, b, z, tol=SERIES_TOLERANCE, max_terms=2000):
    """Confluent hypergeometric ₁F₁(a; b; z) by power series.

    For z < 0 with b − a > 0 Kummer's transformation e^z·₁F₁(b−a; b; −z) is summed
    instead, so every term is positive.
    """
    if b <= 0 and float(b).is_integer():
        raise ValueError("`b` must not be a non-positive integer")
    if not math.isfinite(z):
        raise ValueError("`z` must be finite")
    if z < 0 and b - a > 0 and b > 0:
        if -z > ASYMPTOTIC_THRESHOLD:
            return _asymptotic_negative(a, b, z, tol)
        return math.exp(z) * _power_series(b - a, b, -z, tol, max_terms)
    return _power_series(a, b, z, tol, max_terms)


def series_length(K, tail=POISSON_TAIL, cap=SERIES_CAP):
    """Poisson truncation index: first ℓ past the mode whose weight drops below ``tail``."""
    if K == 0:
        return 0
    ell = int(math.floor(K))
    while ell < cap and poisson.pmf(ell, K) >= tail:
        ell += 1
    return min(ell, cap)


def rician_power_cdf(x, fading, ell_max=None, tol=TRUNCATION_TOLERANCE, return_residual=False):
    """CDF of the Rician power |h|² as a Poisson-weighted gamma mixture.

    The truncated sum is a lower bound; the neglected Poisson tail is returned as the residual.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("`x` must be non-negative")
    K, b = fading.K, fading.b
    ell_max = series_length(K) if ell_max is None else int(ell_max)
    ell = np.arange(ell_max + 1)
    weights = poisson.pmf(ell, K) if K > 0 else (ell == 0).astype(float)
    residual = float(poisson.sf(ell_max, K)) if K > 0 else 0.0
    if residual > tol:
        raise NumericalError(f"Rician series residual {residual:.3e} exceeds {tol:.1e} at K={K}, ell_max={ell_max}")
    cdf = np.tensordot(gammainc(ell[:, None] + 1.0, b * x.reshape(1, -1)).T, weights, axes=1).reshape(x.shape)
    cdf = np.clip(cdf, 0.0, 1.0)
    out = float(cdf) if cdf.ndim == 0 else cdf
    return (out, residual) if return_residual else out


def rician_power_pdf(x, fading):
    x = np.asarray(x, dtype=float)
    K, b = fading.K, fading.b
    y = 2.0 * np.sqrt(K * b * np.maximum(x, 0.0))
    pdf = np.where(x < 0, 0.0, b * np.exp(-K - b * x + y) * i0e(y))
    return float(pdf) if pdf.ndim == 0 else pdf


@dataclass(frozen=True)
class CascadeMoments:
    mean: float
    variance: float
    sigma2: float
    variant: str = "classical"


def double_rician_moments(fading_u, fading_d, variant="classical"):
    r"""
    Mean and variance of the per-element cascade amplitude |h_u||h_d|.

    Parameters:
        variant (`str`): ``"classical"`` uses the per-component scatter variance Ω/(2(K+1)) inside
            the Laguerre terms; ``"unit_scatter"`` keeps σ² = Ω_u·Ω_d and the argument −μ²/(2Ω).
    """
    sigma2 = fading_u.omega * fading_d.omega
    if variant == "classical":
        first = []
        for f in (fading_u, fading_d):
            s2 = f.scatter_variance
            first.append(math.sqrt(s2) * math.sqrt(math.pi / 2.0) * kummer_1f1(-0.5, 1.0, -f.K))
        mean = first[0] * first[1]
        variance = sigma2 - mean**2
    elif variant == "unit_scatter":
        sigma = math.sqrt(sigma2)
        arg_u = fading_u.los_amplitude**2 / (2.0 * fading_u.omega)
        arg_d = fading_d.los_amplitude**2 / (2.0 * fading_d.omega)
        laguerre = kummer_1f1(-0.5, 1.0, -arg_u) * kummer_1f1(-0.5, 1.0, -arg_d)
        mean = sigma * (math.pi / 2.0) * laguerre
        variance = 4.0 * sigma2 * (1.0 + arg_u) * (1.0 + arg_d) - mean**2
    else:
        raise ValueError(f"Unknown moments variant `{variant}`, expected one of {MOMENT_VARIANTS}")
    if variance < 0:
        raise NumericalError(f"negative cascade variance {variance:.3e} ({variant} variant)")
    return CascadeMoments(mean=mean, variance=variance, sigma2=sigma2, variant=variant)


@dataclass(frozen=True)
class ChannelStats:
    r"""
    CLT description of the IRS cascade Z and the composite SNR constants.

    Parameters:
        mu_z (`float`), sigma_z2 (`float`): mean and variance of Z.
        lam (`float`): non-centrality μ_Z²/(2σ_Z²); lam_prime its per-element increment.
        count (`int`): number of summed elements, N + offset.
        V (`float`, *optional*), t (`float`, *optional*): SNR composites, t = d_u^{α_u}·d_d^{α_d}/V.
    """

    mu_z: float
    sigma_z2: float
    lam: float
    lam_prime: float
    count: int
    elements: int
    sigma2: float
    nu: int = 1
    convention: str = "standardized"
    V: Optional[float] = None
    t: Optional[float] = None

    def with_link_budget(self, V, t):
        return replace(self, V=float(V), t=float(t))

    @property
    def mean_power(self):
        """E[X] of the squared cascade under the adopted convention."""
        return mean_cascade_power(self.lam, self.sigma_z2, self.nu, self.convention)


def mean_cascade_power(lam, sigma_z2, nu=1, convention="standardized"):
    if convention == "standardized":
        return sigma_z2 * (nu + 2.0 * lam)
    if convention == "unscaled":
        return nu + lam
    raise ValueError(f"Unknown cascade convention `{convention}`, expected one of {CONVENTIONS}")


def clt_params(elements, moments, offset=1, convention="standardized"):
    count = int(elements) + int(offset)
    if count < 1:
        raise ValueError("at least one summed element is required")
    lam_prime = moments.mean**2 / (2.0 * moments.variance)
    return ChannelStats(
        mu_z=count * moments.mean,
        sigma_z2=count * moments.variance,
        lam=count * lam_prime,
        lam_prime=lam_prime,
        count=count,
        elements=int(elements),
        sigma2=moments.sigma2,
        convention=convention,
    )


def cascade_composite(system_gain, uplink_power, eta_u, eta_d, noise_power):
    """V = Â²·p_u·η_u⁻¹·η_d⁻¹ / noise."""
    return system_gain**2 * uplink_power / (eta_u * eta_d * noise_power)


def _standard_normal(rng, shape, antithetic=False):
    if not antithetic:
        return rng.standard_normal(shape)
    half = (shape[0] + 1) // 2
    draws = rng.standard_normal((half,) + tuple(shape[1:]))
    return np.concatenate([draws, -draws], axis=0)[: shape[0]]


def sample_rician_amplitude(fading, size, rng, antithetic=False):
    shape = (size,) if np.isscalar(size) else tuple(size)
    s = math.sqrt(fading.scatter_variance)
    real = fading.los_amplitude + s * _standard_normal(rng, shape, antithetic)
    imag = s * _standard_normal(rng, shape, antithetic)
    return np.hypot(real, imag)


def sample_rician_power(fading, size, rng, antithetic=False):
    return sample_rician_amplitude(fading, size, rng, antithetic) ** 2


def sample_cascade_amplitude(fading_u, fading_d, elements, rng, size=None, weights=None, antithetic=False):
    """Draws of Z = Σ_k w_k·|h_u,k||h_d,k| with i.i.d. Rician amplitudes (w_k = 1 by default).

    ``rng`` is a single generator or a pair (uplink, downlink) of generators.
    """
    if elements < 1:
        raise ValueError("`elements` must be at least 1")
    rng_u, rng_d = rng if isinstance(rng, (tuple, list)) else (rng, rng)
    n = 1 if size is None else int(size)
    block = max(1, min(elements, (1 << 22) // max(n, 1)))
    z = np.zeros(n)
    for start in range(0, elements, block):
        width = min(block, elements - start)
        prod = sample_rician_amplitude(fading_u, (n, width), rng_u, antithetic)
        prod *= sample_rician_amplitude(fading_d, (n, width), rng_d, antithetic)
        if weights is not None:
            prod *= np.asarray(weights, dtype=float)[start:start + width]
        z += prod.sum(axis=1)
    return float(z[0]) if size is None else z
