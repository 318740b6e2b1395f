"""
Seeded synthetic series, used as oracles for calibration and acceptance tests.

Randomness comes from a counter-based generator (Philox) keyed by (seed, stream):
any stream can be regenerated independently of the others, on any platform.
"""

import dataclasses
import logging
from typing import ClassVar, Optional

import numpy as np
import runez
import scipy.linalg
import scipy.signal

from wk_stationarity.config import ConfigError
from wk_stationarity.ingest import TickSeries

LOG = logging.getLogger(__name__)
FBM_MAX_SAMPLES = 2**18
CHOLESKY_MAX_SAMPLES = 4096
HEAVY_TAIL_Q = 7 / 5  # Kurtosis of q-Gaussian is finite only for q < 7/5
DEFAULT_START = "2020-01-01T00:00:00Z"


def random_generator(seed, stream=0):
    """Counter-based, splittable generator: one independent stream per (seed, stream) pair"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream,))))


@dataclasses.dataclass(frozen=True)
class GeneratorSpec:
    """What to generate, `params` are kind-specific (see `defaults`)"""

    kind: str
    n: int = 2**17
    seed: int = 0
    params: dict = dataclasses.field(default_factory=dict)
    stream: int = 0
    level: float = 100.0
    start: str = DEFAULT_START
    step: int = 60

    defaults: ClassVar[dict] = {
        "gaussian_iid": {"sigma": 1.0},
        "ar1": {"phi": 0.5, "sigma": 1.0},
        "random_walk": {"sigma": 1.0},
        "fbm": {"hurst": 0.5, "sigma": 1.0},
        "qgaussian": {"q": 1.5, "scale": 1.0},
        "variance_switch": {"sigma1": 1.0, "sigma2": 3.0, "switch": None},
    }

    def __post_init__(self):
        if self.kind not in self.defaults:
            raise ConfigError(f"Unknown generator '{self.kind}', expecting one of {', '.join(self.defaults)}")

        unknown = sorted(set(self.params) - set(self.defaults[self.kind]))
        if unknown:
            raise ConfigError(f"Unknown parameter(s) for {self.kind}: {', '.join(unknown)}")

        if self.n < 2:
            raise ConfigError(f"Generator needs n >= 2, got {self.n}")

        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"Seed must be a 64-bit unsigned integer, got {self.seed}")

        if self.level <= 0:
            raise ConfigError(f"Level must be > 0, got {self.level}")

    def __repr__(self):
        params = runez.joined(f"{k}={v}" for k, v in sorted(self.resolved_params.items()))
        return f"{self.kind}(n={self.n}, seed={self.seed}, stream={self.stream}, {params})"

    @property
    def label(self):
        return f"{self.kind}-{self.seed}"

    @property
    def resolved_params(self):
        result = dict(self.defaults[self.kind])
        result.update(self.params)
        return result


def _positive(name, value):
    if not value > 0:
        raise ConfigError(f"Parameter '{name}' must be > 0, got {value}")

    return float(value)


def _gaussian_iid(rng, n, sigma):
    return rng.normal(0.0, _positive("sigma", sigma), n)


def _ar1(rng, n, phi, sigma):
    if not -1 < phi < 1:
        raise ConfigError(f"AR(1) parameter 'phi' must be within (-1, 1), got {phi}")

    noise = rng.normal(0.0, _positive("sigma", sigma), n)
    noise[0] /= np.sqrt(1 - phi * phi)  # Start from the stationary distribution
    return scipy.signal.lfilter([1.0], [1.0, -phi], noise)


def _random_walk(rng, n, sigma):
    return np.cumsum(rng.normal(0.0, _positive("sigma", sigma), n))


def fgn_autocovariance(hurst, n):
    """Autocovariance of unit-variance fractional Gaussian noise at lags 0..n-1"""
    k = np.arange(n, dtype=float)
    h2 = 2 * hurst
    return 0.5 * (np.abs(k + 1) ** h2 - 2 * k**h2 + np.abs(k - 1) ** h2)


def fractional_gaussian_noise(rng, n, hurst):
    """
    Exact fGn synthesis by circulant embedding (Davies-Harte), with full Cholesky factorization as fallback

    Parameters
    ----------
    rng : numpy.random.Generator
        Source of randomness
    n : int
        Number of samples
    hurst : float
        Hurst exponent, within (0, 1)

    Returns
    -------
    numpy.ndarray
        Unit-variance fractional Gaussian noise
    """
    if not 0 < hurst < 1:
        raise ConfigError(f"Hurst exponent must be within (0, 1), got {hurst}")

    if n > FBM_MAX_SAMPLES:
        raise ConfigError(f"fBm exact synthesis is limited to {FBM_MAX_SAMPLES} samples, got {n}")

    acov = fgn_autocovariance(hurst, n + 1)
    row = np.concatenate((acov, acov[-2:0:-1]))
    eigenvalues = np.fft.fft(row).real
    m = len(row)
    if eigenvalues.min() >= -1e-10 * eigenvalues.max():
        noise = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        return np.fft.fft(np.sqrt(np.maximum(eigenvalues, 0) / m) * noise)[:n].real

    if n > CHOLESKY_MAX_SAMPLES:
        raise ConfigError(f"Circulant embedding failed for H={hurst}, and n={n} is too large for Cholesky factorization")

    LOG.debug("Circulant embedding not non-negative for H=%s, falling back to Cholesky", hurst)
    lower = scipy.linalg.cholesky(scipy.linalg.toeplitz(acov[:n]), lower=True)
    return lower @ rng.standard_normal(n)


def _fbm(rng, n, hurst, sigma):
    return _positive("sigma", sigma) * np.cumsum(fractional_gaussian_noise(rng, n, hurst))


def q_logarithm(x, q):
    """ln_q(x) = (x^(1-q) - 1) / (1 - q), ln_1 = ln"""
    if q == 1:
        return np.log(x)

    return (np.power(x, 1 - q) - 1) / (1 - q)


def qgaussian_sample(q, scale=1.0, seed=0, n=1, stream=0, rng=None):
    """
    Parameters
    ----------
    q : float
        Shape, within (1, 3) (q -> 1 approaches the normal distribution)
    scale : float
        Scale factor
    seed : int
        Seed
    n : int
        Number of draws
    stream : int
        Independent stream to use
    rng : numpy.random.Generator | None
        Generator to use (instead of seed/stream)

    Returns
    -------
    numpy.ndarray
        Draws from the q-Gaussian, via the generalized Box-Muller transform
    """
    if not 1 < q < 3:
        raise ConfigError(f"q-Gaussian shape 'q' must be within (1, 3), got {q}")

    scale = _positive("scale", scale)
    rng = rng or random_generator(seed, stream)
    q_prime = (1 + q) / (3 - q)
    u1 = 1.0 - rng.random(n)  # Within (0, 1]
    u2 = rng.random(n)
    radius = np.sqrt(-2 * q_logarithm(u1, q_prime))
    return scale * radius * np.cos(2 * np.pi * u2)


def is_heavy_tailed(q):
    """Whether q-Gaussian with shape `q` has infinite kurtosis"""
    return q >= HEAVY_TAIL_Q


def sample_kurtosis(q, samples) -> Optional[float]:
    """Excess kurtosis of `samples`, None when the q-Gaussian they come from has no finite kurtosis"""
    if is_heavy_tailed(q):
        return None

    centered = np.asarray(samples) - np.mean(samples)
    return float(np.mean(centered**4) / np.mean(centered**2) ** 2 - 3)


def _qgaussian(rng, n, q, scale):
    return qgaussian_sample(q, scale=scale, n=n, rng=rng)


def _variance_switch(rng, n, sigma1, sigma2, switch):
    switch = n // 2 if switch is None else int(switch)
    if not 0 < switch < n:
        raise ConfigError(f"Switch point must be within (0, {n}), got {switch}")

    sigma = np.where(np.arange(n) < switch, _positive("sigma1", sigma1), _positive("sigma2", sigma2))
    return sigma * rng.standard_normal(n)


GENERATORS = {
    "gaussian_iid": _gaussian_iid,
    "ar1": _ar1,
    "random_walk": _random_walk,
    "fbm": _fbm,
    "qgaussian": _qgaussian,
    "variance_switch": _variance_switch,
}


def raw_sample(spec: GeneratorSpec):
    """Zero-centered draws of given spec (before offsetting to positive price levels)"""
    rng = random_generator(spec.seed, spec.stream)
    return GENERATORS[spec.kind](rng, spec.n, **spec.resolved_params)


@runez.log.timeit("Synthetic generation")
def generate(spec: GeneratorSpec):
    """
    Parameters
    ----------
    spec : GeneratorSpec
        What to generate

    Returns
    -------
    TickSeries
        Deterministic for given spec, offset so that the lowest "price" equals `spec.level`
    """
    values = raw_sample(spec)
    values = values - values.min() + spec.level
    LOG.debug("Generated %s", spec)
    return TickSeries(values, start=spec.start, step=spec.step, label=spec.label)
