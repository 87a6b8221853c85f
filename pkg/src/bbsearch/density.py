"""One-dimensional search-space densities.

Every density exposes ``pdf``, ``cdf``, ``sf``, ``interval_mass`` and
``quantile``. Interval masses are computed tail-aware (upper-tail
differences use the survival function), so truncating a density to a
bracket far out in a tail keeps full relative precision until the mass
genuinely underflows.

Densities serialize to a flat JSON object keyed by ``kind``::

    {"kind": "uniform", "low": 0.0, "high": 10.0}
    {"kind": "normal", "mu": 0.0, "sigma": 100.0}
    {"kind": "exponential", "scale": 10000.0}
    {"kind": "gaussian_mixture", "means": [...], "sigmas": [...], "weights": [...]}
    {"kind": "kde", "samples": [...], "bandwidth": 12.2}
    {"kind": "histogram", "edges": [...], "counts": [...]}
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import ClassVar, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr, ndtri

__all__ = [
    "DensityError",
    "FitError",
    "EmptyBracketError",
    "DensityModel",
    "Uniform",
    "Normal",
    "Exponential",
    "GaussianMixture",
    "KDE",
    "Histogram",
    "TruncatedDensity",
    "KlShiftSpec",
    "pdf",
    "cdf",
    "quantile",
    "truncate",
    "fit_mle",
    "fit_kde",
    "fit_histogram",
    "silverman_bandwidth",
    "kl_normal",
    "kl_shifted_normal",
    "density_from_dict",
]

# Kernel kind codes shared with bbsearch.kernels.
KIND_UNIFORM = 0
KIND_MIXTURE = 1
KIND_EXPONENTIAL = 2
KIND_HISTOGRAM = 3

MIN_MASS = 1e-300
QUANTILE_XTOL = 1e-9
QUANTILE_MAXITER = 200
_EMPTY = np.zeros(0)


class DensityError(ValueError):
    """Invalid density parameters or an out-of-domain query."""


class FitError(DensityError):
    """Samples cannot support the requested fit."""


class EmptyBracketError(DensityError):
    """The density assigns (numerically) no mass to a bracket."""


def _finite(x, name="x") -> float:
    x = float(x)
    if not math.isfinite(x):
        raise DensityError(f"{name} must be finite, got {x}")
    return x


def _positive(x, name) -> float:
    x = float(x)
    if not (math.isfinite(x) and x > 0):
        raise DensityError(f"{name} must be a positive finite number, got {x}")
    return x


def _check_q(q) -> float:
    q = float(q)
    if not 0.0 < q < 1.0:
        raise DensityError(f"quantile level must lie in (0, 1), got {q}")
    return q


def _segment_mass(za, zb):
    """Standard-normal mass on [za, zb], elementwise and tail-aware."""
    za = np.asarray(za, dtype=float)
    zb = np.asarray(zb, dtype=float)
    upper = ndtr(-za) - ndtr(-zb)
    lower = ndtr(zb) - ndtr(za)
    return np.where(za > 0, upper, lower)


class DensityModel:
    """Base class for immutable 1-D densities.

    Subclasses implement ``pdf``, ``cdf``, ``sf``, ``interval_mass``,
    ``_quantile``, ``support``, ``mean``, ``std``, ``sample`` and
    ``to_dict``. ``truncated_quantile`` has a generic root-finding
    implementation that closed-form kinds override.
    """

    kind: ClassVar[str] = ""
    analytic: ClassVar[bool] = True

    def cdf(self, x) -> float:
        raise NotImplementedError

    def sf(self, x) -> float:
        raise NotImplementedError

    def pdf(self, x) -> float:
        raise NotImplementedError

    def interval_mass(self, a, b) -> float:
        raise NotImplementedError

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def std(self) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def kernel_params(self) -> tuple[int, np.ndarray, np.ndarray, np.ndarray]:
        """Flat float arrays consumed by the compiled search kernels."""
        raise NotImplementedError

    @property
    def tolerance(self) -> float:
        return 1e-9 if self.analytic else 1e-6

    def quantile(self, q) -> float:
        return self._quantile(_check_q(q))

    def _quantile(self, q: float) -> float:
        a, b = self._root_bracket()
        return float(
            brentq(lambda x: self.cdf(x) - q, a, b, xtol=QUANTILE_XTOL, maxiter=QUANTILE_MAXITER)
        )

    def _root_bracket(self) -> tuple[float, float]:
        return self.support

    def truncated_quantile(self, low: float, high: float, mass: float, q: float) -> float:
        """Point x in [low, high] whose mass from ``low`` is ``q * mass``."""
        goal = q * mass
        x = brentq(
            lambda x: self.interval_mass(low, x) - goal,
            low,
            high,
            xtol=QUANTILE_XTOL,
            maxiter=QUANTILE_MAXITER,
        )
        return float(x)

    def truncate(self, low, high) -> "TruncatedDensity":
        return TruncatedDensity(self, low, high)


@dataclass(frozen=True)
class Uniform(DensityModel):
    low: float
    high: float
    kind: ClassVar[str] = "uniform"

    def __post_init__(self):
        lo, hi = _finite(self.low, "low"), _finite(self.high, "high")
        if not lo < hi:
            raise DensityError(f"uniform needs low < high, got [{lo}, {hi}]")
        object.__setattr__(self, "low", lo)
        object.__setattr__(self, "high", hi)

    @property
    def support(self):
        return (self.low, self.high)

    def pdf(self, x):
        x = _finite(x)
        return 1.0 / (self.high - self.low) if self.low <= x <= self.high else 0.0

    def cdf(self, x):
        x = _finite(x)
        return min(max((x - self.low) / (self.high - self.low), 0.0), 1.0)

    def sf(self, x):
        x = _finite(x)
        return min(max((self.high - x) / (self.high - self.low), 0.0), 1.0)

    def interval_mass(self, a, b):
        a = max(float(a), self.low)
        b = min(float(b), self.high)
        return max(b - a, 0.0) / (self.high - self.low)

    def _quantile(self, q):
        return self.low + q * (self.high - self.low)

    def truncated_quantile(self, low, high, mass, q):
        # Exact for integer brackets so a uniform prior reproduces the floor midpoint.
        lo = max(float(low), self.low)
        hi = min(float(high), self.high)
        return lo + q * (hi - lo)

    def mean(self):
        return 0.5 * (self.low + self.high)

    def std(self):
        return (self.high - self.low) / math.sqrt(12.0)

    def sample(self, rng, size):
        return rng.uniform(self.low, self.high, size)

    def to_dict(self):
        return {"kind": self.kind, "low": self.low, "high": self.high}

    def kernel_params(self):
        return KIND_UNIFORM, np.array([self.low]), np.array([self.high]), _EMPTY


@dataclass(frozen=True)
class Normal(DensityModel):
    mu: float
    sigma: float
    kind: ClassVar[str] = "normal"

    def __post_init__(self):
        object.__setattr__(self, "mu", _finite(self.mu, "mu"))
        object.__setattr__(self, "sigma", _positive(self.sigma, "sigma"))

    @property
    def support(self):
        return (-math.inf, math.inf)

    def _z(self, x):
        return (float(x) - self.mu) / self.sigma

    def pdf(self, x):
        z = self._z(_finite(x))
        return math.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2.0 * math.pi))

    def cdf(self, x):
        return float(ndtr(self._z(_finite(x))))

    def sf(self, x):
        return float(ndtr(-self._z(_finite(x))))

    def interval_mass(self, a, b):
        if b <= a:
            return 0.0
        return float(_segment_mass(self._z(a), self._z(b)))

    def _quantile(self, q):
        return self.mu + self.sigma * float(ndtri(q))

    def truncated_quantile(self, low, high, mass, q):
        below = float(ndtr(self._z(low))) + q * mass
        above = (1.0 - q) * mass + float(ndtr(-self._z(high)))
        z = float(ndtri(below)) if below <= above else -float(ndtri(above))
        return min(max(self.mu + self.sigma * z, float(low)), float(high))

    def mean(self):
        return self.mu

    def std(self):
        return self.sigma

    def sample(self, rng, size):
        return rng.normal(self.mu, self.sigma, size)

    def to_dict(self):
        return {"kind": self.kind, "mu": self.mu, "sigma": self.sigma}

    def kernel_params(self):
        return KIND_MIXTURE, np.array([self.mu]), np.array([self.sigma]), np.array([1.0])


@dataclass(frozen=True)
class Exponential(DensityModel):
    scale: float
    kind: ClassVar[str] = "exponential"

    def __post_init__(self):
        object.__setattr__(self, "scale", _positive(self.scale, "scale"))

    @property
    def support(self):
        return (0.0, math.inf)

    def pdf(self, x):
        x = _finite(x)
        return math.exp(-x / self.scale) / self.scale if x >= 0 else 0.0

    def cdf(self, x):
        x = _finite(x)
        return -math.expm1(-x / self.scale) if x > 0 else 0.0

    def sf(self, x):
        x = _finite(x)
        return math.exp(-x / self.scale) if x > 0 else 1.0

    def interval_mass(self, a, b):
        a = max(float(a), 0.0)
        b = max(float(b), 0.0)
        if b <= a:
            return 0.0
        return math.exp(-a / self.scale) * -math.expm1(-(b - a) / self.scale)

    def _quantile(self, q):
        return -self.scale * math.log1p(-q)

    def truncated_quantile(self, low, high, mass, q):
        a = max(float(low), 0.0)
        b = max(float(high), 0.0)
        frac = -math.expm1(-(b - a) / self.scale)
        return min(a - self.scale * math.log1p(-q * frac), b)

    def mean(self):
        return self.scale

    def std(self):
        return self.scale

    def sample(self, rng, size):
        return rng.exponential(self.scale, size)

    def to_dict(self):
        return {"kind": self.kind, "scale": self.scale}

    def kernel_params(self):
        return KIND_EXPONENTIAL, _EMPTY, np.array([self.scale]), _EMPTY


class _MixtureMath:
    """Shared Gaussian-mixture evaluation over ``_means/_sigmas/_weights``."""

    _means: np.ndarray
    _sigmas: np.ndarray
    _weights: np.ndarray

    @property
    def support(self):
        return (-math.inf, math.inf)

    def pdf(self, x):
        z = (_finite(x) - self._means) / self._sigmas
        return float(np.sum(self._weights * np.exp(-0.5 * z * z) / self._sigmas) / math.sqrt(2 * math.pi))

    def cdf(self, x):
        z = (_finite(x) - self._means) / self._sigmas
        return float(min(np.dot(self._weights, ndtr(z)), 1.0))

    def sf(self, x):
        z = (_finite(x) - self._means) / self._sigmas
        return float(min(np.dot(self._weights, ndtr(-z)), 1.0))

    def interval_mass(self, a, b):
        if b <= a:
            return 0.0
        za = (float(a) - self._means) / self._sigmas
        zb = (float(b) - self._means) / self._sigmas
        return float(np.dot(self._weights, _segment_mass(za, zb)))

    def _root_bracket(self):
        return (
            float(np.min(self._means - 40 * self._sigmas)),
            float(np.max(self._means + 40 * self._sigmas)),
        )

    def mean(self):
        return float(np.dot(self._weights, self._means))

    def std(self):
        m = self.mean()
        second = np.dot(self._weights, self._sigmas**2 + self._means**2)
        return float(math.sqrt(max(second - m * m, 0.0)))

    def sample(self, rng, size):
        comp = rng.choice(len(self._weights), size=size, p=self._weights)
        return rng.normal(self._means[comp], self._sigmas[comp])

    def kernel_params(self):
        return KIND_MIXTURE, self._means, self._sigmas, self._weights


@dataclass(frozen=True)
class GaussianMixture(_MixtureMath, DensityModel):
    means: tuple[float, ...]
    sigmas: tuple[float, ...]
    weights: tuple[float, ...]
    kind: ClassVar[str] = "gaussian_mixture"

    def __post_init__(self):
        means = tuple(_finite(m, "mean") for m in self.means)
        sigmas = tuple(_positive(s, "sigma") for s in self.sigmas)
        weights = tuple(float(w) for w in self.weights)
        if not (len(means) == len(sigmas) == len(weights) >= 1):
            raise DensityError("mixture needs equally many means, sigmas and weights")
        if any(not (w >= 0 and math.isfinite(w)) for w in weights):
            raise DensityError("mixture weights must be nonnegative")
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise DensityError(f"mixture weights must sum to 1, got {math.fsum(weights)}")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "sigmas", sigmas)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def bimodal(cls, mu1, sigma1, mu2, sigma2, w1=0.5) -> "GaussianMixture":
        return cls((mu1, mu2), (sigma1, sigma2), (w1, 1.0 - w1))

    @cached_property
    def _means(self):
        return np.asarray(self.means)

    @cached_property
    def _sigmas(self):
        return np.asarray(self.sigmas)

    @cached_property
    def _weights(self):
        return np.asarray(self.weights)

    def to_dict(self):
        return {
            "kind": self.kind,
            "means": list(self.means),
            "sigmas": list(self.sigmas),
            "weights": list(self.weights),
        }


@dataclass(frozen=True)
class KDE(_MixtureMath, DensityModel):
    """Equal-weight Gaussian kernels centred on the samples."""

    samples: tuple[float, ...]
    bandwidth: float
    kind: ClassVar[str] = "kde"
    analytic: ClassVar[bool] = False

    def __post_init__(self):
        samples = tuple(_finite(s, "sample") for s in self.samples)
        if len(samples) < 2:
            raise FitError(f"kde needs at least 2 samples, got {len(samples)}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "bandwidth", _positive(self.bandwidth, "bandwidth"))

    @cached_property
    def _means(self):
        return np.asarray(self.samples)

    @cached_property
    def _sigmas(self):
        return np.full(len(self.samples), self.bandwidth)

    @cached_property
    def _weights(self):
        return np.full(len(self.samples), 1.0 / len(self.samples))

    def to_dict(self):
        return {"kind": self.kind, "samples": list(self.samples), "bandwidth": self.bandwidth}


@dataclass(frozen=True)
class Histogram(DensityModel):
    """Piecewise-constant density with a piecewise-linear CDF."""

    edges: tuple[float, ...]
    counts: tuple[float, ...]
    kind: ClassVar[str] = "histogram"
    analytic: ClassVar[bool] = False

    def __post_init__(self):
        edges = tuple(_finite(e, "edge") for e in self.edges)
        counts = tuple(float(c) for c in self.counts)
        if len(edges) != len(counts) + 1 or not counts:
            raise DensityError("histogram needs len(edges) == len(counts) + 1 >= 2")
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise DensityError("histogram edges must be strictly increasing")
        if any(c < 0 or not math.isfinite(c) for c in counts) or sum(counts) <= 0:
            raise DensityError("histogram counts must be nonnegative with positive total")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "counts", counts)

    @cached_property
    def _edges(self):
        return np.asarray(self.edges)

    @cached_property
    def _probs(self):
        c = np.asarray(self.counts)
        return c / c.sum()

    @cached_property
    def _cum(self):
        cum = np.concatenate([[0.0], np.cumsum(self._probs)])
        cum[-1] = 1.0
        return cum

    @property
    def support(self):
        return (self.edges[0], self.edges[-1])

    def pdf(self, x):
        x = _finite(x)
        if not self.edges[0] <= x <= self.edges[-1]:
            return 0.0
        j = min(int(np.searchsorted(self._edges, x, side="right")) - 1, len(self.counts) - 1)
        return float(self._probs[j] / (self._edges[j + 1] - self._edges[j]))

    def cdf(self, x):
        return float(np.interp(_finite(x), self._edges, self._cum))

    def sf(self, x):
        return 1.0 - self.cdf(x)

    def interval_mass(self, a, b):
        if b <= a:
            return 0.0
        return max(float(np.interp(b, self._edges, self._cum) - np.interp(a, self._edges, self._cum)), 0.0)

    def _invert(self, c: float) -> float:
        j = int(np.searchsorted(self._cum, c, side="left"))
        j = min(max(j, 1), len(self.edges) - 1)
        lo_c, hi_c = self._cum[j - 1], self._cum[j]
        frac = 0.0 if hi_c <= lo_c else (c - lo_c) / (hi_c - lo_c)
        return float(self._edges[j - 1] + frac * (self._edges[j] - self._edges[j - 1]))

    def _quantile(self, q):
        return self._invert(q)

    def truncated_quantile(self, low, high, mass, q):
        c = float(np.interp(low, self._edges, self._cum)) + q * mass
        return min(max(self._invert(c), float(low)), float(high))

    def mean(self):
        mids = 0.5 * (self._edges[:-1] + self._edges[1:])
        return float(np.dot(self._probs, mids))

    def std(self):
        a, b = self._edges[:-1], self._edges[1:]
        second = np.dot(self._probs, (a * a + a * b + b * b) / 3.0)
        m = self.mean()
        return float(math.sqrt(max(second - m * m, 0.0)))

    def sample(self, rng, size):
        j = rng.choice(len(self.counts), size=size, p=self._probs)
        return rng.uniform(self._edges[j], self._edges[j + 1])

    def to_dict(self):
        return {"kind": self.kind, "edges": list(self.edges), "counts": list(self.counts)}

    def kernel_params(self):
        return KIND_HISTOGRAM, self._edges, _EMPTY, self._cum


@dataclass(frozen=True)
class TruncatedDensity:
    """``base`` restricted to ``[low, high]`` and renormalized."""

    base: DensityModel
    low: float
    high: float
    mass: float = field(init=False)

    def __post_init__(self):
        low, high = _finite(self.low, "low"), _finite(self.high, "high")
        if not low < high:
            raise DensityError(f"truncation needs low < high, got [{low}, {high}]")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)
        mass = self.base.interval_mass(low, high)
        if not mass > MIN_MASS:
            raise EmptyBracketError(
                f"{self.base.kind} density has no mass on [{low}, {high}] (mass={mass:.3g})"
            )
        object.__setattr__(self, "mass", mass)

    @property
    def kind(self) -> str:
        return self.base.kind

    @property
    def tolerance(self) -> float:
        return self.base.tolerance

    @property
    def support(self):
        return (self.low, self.high)

    def pdf(self, x) -> float:
        x = _finite(x)
        if not self.low <= x <= self.high:
            return 0.0
        return self.base.pdf(x) / self.mass

    def interval_mass(self, a, b) -> float:
        a, b = max(float(a), self.low), min(float(b), self.high)
        if b <= a:
            return 0.0
        return self.base.interval_mass(a, b) / self.mass

    def cdf(self, x) -> float:
        x = _finite(x)
        if x <= self.low:
            return 0.0
        if x >= self.high:
            return 1.0
        return min(self.base.interval_mass(self.low, x) / self.mass, 1.0)

    def sf(self, x) -> float:
        x = _finite(x)
        if x <= self.low:
            return 1.0
        if x >= self.high:
            return 0.0
        return min(self.base.interval_mass(x, self.high) / self.mass, 1.0)

    def quantile(self, q) -> float:
        q = _check_q(q)
        return self.base.truncated_quantile(self.low, self.high, self.mass, q)

    def median(self) -> float:
        return self.base.truncated_quantile(self.low, self.high, self.mass, 0.5)

    def truncate(self, low, high) -> "TruncatedDensity":
        return TruncatedDensity(self.base, max(float(low), self.low), min(float(high), self.high))

    def to_dict(self) -> dict:
        return {"kind": "truncated", "base": self.base.to_dict(), "low": self.low, "high": self.high}


def pdf(model, x) -> float:
    return model.pdf(x)


def cdf(model, x) -> float:
    """Probability mass of ``model`` at or below ``x``."""
    return model.cdf(x)


def quantile(model, q) -> float:
    """Inverse CDF; ``q`` must lie strictly inside (0, 1)."""
    return model.quantile(q)


def truncate(model, low, high) -> TruncatedDensity:
    """Restrict ``model`` to ``[low, high]`` and renormalize.

    Raises
    ------
    EmptyBracketError
        If the bracket mass is at or below 1e-300.
    """
    return model.truncate(low, high)


def _clean_samples(samples, minimum=2) -> np.ndarray:
    x = np.asarray(list(samples), dtype=float)
    if x.ndim != 1 or len(x) < minimum:
        raise FitError(f"need at least {minimum} samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise FitError("samples must be finite")
    return x


def fit_mle(kind: str, samples: Sequence[float]) -> DensityModel:
    """Maximum-likelihood fit of a parametric family.

    ``normal`` uses the sample mean and population standard deviation,
    ``exponential`` the sample mean as scale, ``uniform`` the sample range.
    """
    x = _clean_samples(samples)
    if kind == "normal":
        sigma = float(np.std(x))
        if sigma <= 0:
            raise FitError("normal fit needs samples with nonzero variance")
        return Normal(float(np.mean(x)), sigma)
    if kind == "exponential":
        if np.any(x < 0):
            raise FitError("exponential fit needs nonnegative samples")
        scale = float(np.mean(x))
        if scale <= 0:
            raise FitError("exponential fit needs a positive sample mean")
        return Exponential(scale)
    if kind == "uniform":
        if x.min() == x.max():
            raise FitError("uniform fit needs at least two distinct samples")
        return Uniform(float(x.min()), float(x.max()))
    raise FitError(f"no MLE fit for kind {kind!r}")


def silverman_bandwidth(samples) -> float:
    """Rule-of-thumb ``1.06 * std * n**(-1/5)`` with the population std."""
    x = np.asarray(samples, dtype=float)
    return 1.06 * float(np.std(x)) * len(x) ** -0.2


def fit_kde(samples: Sequence[float], bandwidth: float | str = "auto") -> KDE:
    x = _clean_samples(samples)
    if bandwidth == "auto":
        bw = silverman_bandwidth(x)
        if not bw > 0:
            raise FitError("identical samples give a zero automatic bandwidth")
    else:
        bw = float(bandwidth)
        if not (bw > 0 and math.isfinite(bw)):
            raise FitError(f"bandwidth must be positive, got {bandwidth!r}")
    return KDE(tuple(x.tolist()), bw)


def fit_histogram(samples: Sequence[float], bins: int = 50) -> Histogram:
    x = _clean_samples(samples)
    if bins < 1:
        raise FitError("need at least one bin")
    if x.min() == x.max():
        raise FitError("histogram fit needs at least two distinct samples")
    counts, edges = np.histogram(x, bins=bins)
    return Histogram(tuple(edges.tolist()), tuple(float(c) for c in counts))


@dataclass(frozen=True)
class KlShiftSpec:
    """Normal prior displaced from ``N(mu1, sigma1)`` by a given KL divergence."""

    mu1: float
    sigma1: float
    divergence: float

    def __post_init__(self):
        _finite(self.mu1, "mu1")
        _positive(self.sigma1, "sigma1")
        d = float(self.divergence)
        if not (d >= 0 and math.isfinite(d)):
            raise DensityError(f"divergence must be a nonnegative number, got {d}")

    @property
    def mu2(self) -> float:
        return self.mu1 + math.sqrt(2.0 * self.divergence * self.sigma1**2)


def kl_shifted_normal(spec: KlShiftSpec) -> Normal:
    # Equal widths; the mean moves up (the positive root).
    return Normal(spec.mu2, spec.sigma1)


def kl_normal(p: DensityModel, q: DensityModel) -> float:
    """KL(p || q) for two normal densities."""
    if not (isinstance(p, Normal) and isinstance(q, Normal)):
        raise DensityError("kl_normal is defined for normal densities only")
    s1, s2 = p.sigma, q.sigma
    return math.log(s2 / s1) + (s1 * s1 + (p.mu - q.mu) ** 2) / (2.0 * s2 * s2) - 0.5


_FROM_DICT = {
    "uniform": lambda d: Uniform(d["low"], d["high"]),
    "normal": lambda d: Normal(d["mu"], d["sigma"]),
    "exponential": lambda d: Exponential(d["scale"]),
    "gaussian_mixture": lambda d: GaussianMixture(tuple(d["means"]), tuple(d["sigmas"]), tuple(d["weights"])),
    "kde": lambda d: fit_kde(d["samples"], d.get("bandwidth", "auto")),
    "histogram": lambda d: Histogram(tuple(d["edges"]), tuple(d["counts"])),
}


def density_from_dict(spec: dict):
    """Inverse of ``to_dict`` for every kind, including truncations."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise DensityError(f"density spec must be an object with a 'kind' field, got {spec!r}")
    kind = spec["kind"]
    if kind == "truncated":
        return TruncatedDensity(density_from_dict(spec["base"]), spec["low"], spec["high"])
    try:
        build = _FROM_DICT[kind]
    except KeyError:
        raise DensityError(f"unknown density kind {kind!r}") from None
    try:
        return build(spec)
    except KeyError as exc:
        raise DensityError(f"{kind} density spec is missing field {exc.args[0]!r}") from None
