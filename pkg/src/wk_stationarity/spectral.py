"""
Spectral estimators: sample autocorrelation, unitary DFT, one-sided PSD, and the Fourier transform of the autocorrelation.

Conventions:
- DFT is unitary: x̂(f_k) = (1/√N) Σ x(t) exp(-2πi f_k t), with f_k = k / (N · step) in Hz
- One-sided storage over k = 0..N//2, two-sided power folded (bins 1..ceil(N/2)-1 doubled)
- Autocorrelation uses the biased (divide-by-N) estimator, C(0) = 1
"""

import dataclasses
import enum
import logging
from typing import Optional

import numpy as np
import pandas as pd
import runez
import scipy.fft

from wk_stationarity.config import counted, DataError
from wk_stationarity.series import as_array

LOG = logging.getLogger(__name__)
SEGMENT_CHUNK = 64  # Segments processed at once by ensemble estimators (bounds memory on very long series)
SPECTRA_COLUMNS = ["frequency_hz", "value", "kind", "smoothed"]


class SpectrumKind(enum.Enum):
    psd = "psd"
    ft_acf = "ft_acf"


@dataclasses.dataclass(frozen=True, eq=False)
class Acf:
    """
    Sample autocorrelation C(s), s = 0..s_max, with the variance and mean it was normalized with

    `rescale_var` is the variance `ft_autocorr()` rescales with (defaults to `sigma2`), ensembles use the squared mean
    of per-segment RMS there, while `sigma2` remains the variance of all samples about `mu`
    """

    values: np.ndarray
    sigma2: float
    mu: float
    n: int
    segments: int = 1
    rescale_var: Optional[float] = None

    def __post_init__(self):
        if self.rescale_var is None:
            object.__setattr__(self, "rescale_var", self.sigma2)

    @property
    def lags(self):
        return np.arange(len(self.values))

    @property
    def s_max(self):
        return len(self.values) - 1


@dataclasses.dataclass(frozen=True, eq=False)
class ComplexSpectrum:
    frequencies: np.ndarray
    values: np.ndarray
    normalization: str = "unitary"


@dataclasses.dataclass(frozen=True, eq=False)
class Spectrum:
    """Frequency-indexed real curve (power spectral density, or transformed autocorrelation)"""

    frequencies: np.ndarray
    values: np.ndarray
    kind: SpectrumKind = SpectrumKind.psd
    smoothed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", SpectrumKind(self.kind))
        if len(self.frequencies) != len(self.values):
            raise DataError(f"Spectrum has {len(self.frequencies)} frequencies, but {len(self.values)} values")

    def __repr__(self):
        text = "%s%s" % ("smoothed " if self.smoothed else "", self.kind.value)
        return "%s (%s)" % (text, counted(self, "bin"))

    def __len__(self):
        return len(self.values)

    @property
    def df(self):
        """Grid spacing in Hz"""
        return float(self.frequencies[1] - self.frequencies[0])

    def same_grid(self, other):
        return len(self) == len(other) and np.array_equal(self.frequencies, other.frequencies)

    def check_grid(self, other):
        if not self.same_grid(other):
            raise DataError(f"Frequency grid mismatch between {self} and {other}")

    def with_values(self, values, smoothed=None):
        return dataclasses.replace(self, values=values, smoothed=self.smoothed if smoothed is None else smoothed)

    def to_frame(self):
        return pd.DataFrame(
            {
                "frequency_hz": self.frequencies,
                "value": self.values,
                "kind": self.kind.value,
                "smoothed": self.smoothed,
            },
            columns=SPECTRA_COLUMNS,
        )


@dataclasses.dataclass(frozen=True)
class EnsemblePlan:
    """Cut series in consecutive, non-overlapping segments of `segment_len` samples"""

    segment_len: int = 10000
    drop_remainder: bool = True

    def __post_init__(self):
        if self.segment_len < 2:
            raise DataError(f"Ensemble segment length must be >= 2, got {self.segment_len}")

    def segment_count(self, n):
        count = n // self.segment_len
        if count < 1:
            raise DataError(f"Ensemble segment length {self.segment_len} exceeds series length {n}")

        return count


def fold(n):
    """Weights folding two-sided power into one-sided storage over k = 0..n//2"""
    weights = np.ones(n // 2 + 1)
    weights[1 : (n + 1) // 2] = 2.0
    return weights


def frequencies(n, step=60):
    """One-sided frequency grid in Hz, f_k = k / (n · step)"""
    return np.fft.rfftfreq(n, d=step)


def _biased_acov(centered, s_max):
    n = centered.shape[-1]
    nfft = scipy.fft.next_fast_len(2 * n - 1, real=True)
    spectrum = scipy.fft.rfft(centered, n=nfft, axis=-1)
    acov = scipy.fft.irfft(spectrum.real**2 + spectrum.imag**2, n=nfft, axis=-1)
    return acov[..., : s_max + 1] / n


def _checked_s_max(s_max, n):
    if s_max is None:
        return n - 1

    if not 0 <= s_max < n:
        raise DataError(f"Max lag {s_max} must be within [0, {n - 1}]")

    return int(s_max)


def autocorrelation(x, s_max=None):
    """
    Parameters
    ----------
    x : numpy.ndarray | wk_stationarity.series.NormalizedSeries
        Series to characterize
    s_max : int | None
        Largest lag to compute (default: N - 1)

    Returns
    -------
    Acf
        C(s) = (1/N) Σ_{t=1}^{N-s} (x_t - μ)(x_{t+s} - μ) / σ²
    """
    values = as_array(x)
    n = len(values)
    s_max = _checked_s_max(s_max, n)
    mu = float(np.mean(values))
    centered = values - mu
    sigma2 = float(np.mean(centered * centered))
    if sigma2 == 0:
        raise DataError("Can't compute autocorrelation of a zero-variance series")

    acov = _biased_acov(centered, s_max)
    acov[0] = sigma2
    return Acf(acov / sigma2, sigma2=sigma2, mu=mu, n=n)


def circular_autocovariance(x):
    """γ(s) = (1/N) Σ_t x_t x_{(t+s) mod N}, s = 0..N-1 (no mean removal)"""
    values = as_array(x)
    transformed = np.fft.fft(values)
    return np.fft.ifft(np.abs(transformed) ** 2).real / len(values)


def dft(x, step=60):
    """Unitary DFT, frequencies f_k = k / (N · step) for k = 0..N-1"""
    values = as_array(x)
    n = len(values)
    if n < 2:
        raise DataError("DFT needs at least 2 samples")

    return ComplexSpectrum(np.arange(n) / (n * step), np.fft.fft(values) / np.sqrt(n))


def psd(x, step=60):
    """One-sided power spectral density |x̂(f)|², folded"""
    values = as_array(x)
    n = len(values)
    if n < 2:
        raise DataError("PSD needs at least 2 samples")

    transformed = np.fft.rfft(values) / np.sqrt(n)
    power = transformed.real**2 + transformed.imag**2
    return Spectrum(frequencies(n, step), power * fold(n), kind=SpectrumKind.psd)


def ft_autocorr(acf: Acf, sigma2=None, n=None, step=60, like=None):
    """
    Parameters
    ----------
    acf : Acf
        Autocorrelation to transform
    sigma2 : float | None
        Variance to rescale with (default: `acf.rescale_var`)
    n : int | None
        Length of the frequency grid (default: length of series `acf` was computed on)
    step : int
        Sampling interval in seconds
    like : Spectrum | None
        If given, result must be on the same grid as this spectrum

    Returns
    -------
    Spectrum
        σ² + 2σ² Re[Σ_{s=1}^{s_max} C(s) exp(-2πi f_k s)], folded like `psd()`
    """
    sigma2 = acf.rescale_var if sigma2 is None else sigma2
    n = acf.n if n is None else n
    if acf.s_max >= n:
        raise DataError(f"Autocorrelation has lags up to {acf.s_max}, can't transform on a grid of {n} samples")

    one_sided = np.array(acf.values, dtype=float)
    one_sided[0] = 0.0
    transformed = np.fft.rfft(one_sided, n=n).real
    result = Spectrum(frequencies(n, step), fold(n) * (sigma2 + 2.0 * sigma2 * transformed), kind=SpectrumKind.ft_acf)
    if like is not None:
        like.check_grid(result)

    return result


def _segments(values, plan: EnsemblePlan):
    count = plan.segment_count(len(values))
    used = count * plan.segment_len
    remainder = len(values) - used
    if remainder:
        if plan.drop_remainder:
            LOG.debug("Dropping %s (not a full segment)", counted(remainder, "trailing sample"))

        else:
            LOG.debug("Keeping %s as a short final segment", counted(remainder, "trailing sample"))

    return values[:used].reshape(count, plan.segment_len), values[used:]


def _chunks(segments):
    for i in range(0, len(segments), SEGMENT_CHUNK):
        yield segments[i : i + SEGMENT_CHUNK]


def _ensemble_psd(segments, step):
    total = np.zeros(segments.shape[1] // 2 + 1)
    for chunk in _chunks(segments):
        centered = chunk - chunk.mean(axis=1, keepdims=True)
        transformed = np.fft.rfft(centered, axis=1) / np.sqrt(segments.shape[1])
        total += (transformed.real**2 + transformed.imag**2).sum(axis=0)

    n = segments.shape[1]
    return Spectrum(frequencies(n, step), total / len(segments) * fold(n), kind=SpectrumKind.psd)


def _segment_acfs(chunk, s_max, first_index):
    centered = chunk - chunk.mean(axis=1, keepdims=True)
    variances = (centered * centered).mean(axis=1)
    flat = np.flatnonzero(variances == 0)
    if len(flat):
        raise DataError(f"Ensemble segment #{first_index + flat[0] + 1} has zero variance")

    acov = _biased_acov(centered, s_max)
    acov[:, 0] = variances
    return acov / variances[:, None]


def _ensemble_acf(segments, tail, s_max):
    n = segments.shape[1]
    s_max = _checked_s_max(s_max, n)
    used = np.concatenate((segments.ravel(), tail))
    mu = float(np.mean(used))
    total = np.zeros(s_max + 1)
    counts = np.zeros(s_max + 1)
    rms = []
    for i, chunk in enumerate(_chunks(segments)):
        total += _segment_acfs(chunk, s_max, i * SEGMENT_CHUNK).sum(axis=0)
        counts += len(chunk)
        rms.extend(np.sqrt(((chunk - mu) ** 2).mean(axis=1)))

    if len(tail) >= 2:
        tail_lags = min(s_max, len(tail) - 1)
        total[: tail_lags + 1] += _segment_acfs(tail[None, :], tail_lags, len(segments))[0]
        counts[: tail_lags + 1] += 1
        rms.append(np.sqrt(np.mean((tail - mu) ** 2)))

    sigma2 = float(np.mean((used - mu) ** 2))
    rescale_var = float(np.mean(rms)) ** 2
    return Acf(total / counts, sigma2=sigma2, mu=mu, n=n, segments=len(rms), rescale_var=rescale_var)


@runez.log.timeit("Ensemble average")
def ensemble_average(x, plan=None, which="psd", step=60, s_max=None):
    """
    Parameters
    ----------
    x : numpy.ndarray | wk_stationarity.series.NormalizedSeries
        Series to characterize
    plan : EnsemblePlan | None
        How to cut `x` in segments
    which : str
        'psd' or 'acf'
    step : int
        Sampling interval in seconds
    s_max : int | None
        Largest lag for 'acf' (default: segment length - 1)

    Returns
    -------
    Spectrum | Acf
        Statistic computed per segment, arithmetically averaged across segments.

        Segments are mean-removed for the PSD, and each segment's autocorrelation is normalized with its own mean and variance.
        `sigma2` is the variance of all used samples about their global mean. The transformed autocorrelation is rescaled
        with `rescale_var`, the squared average over segments of their RMS about the global mean, this keeps
        segment-level level shifts and variance changes visible.
    """
    plan = plan or EnsemblePlan()
    values = as_array(x)
    segments, tail = _segments(values, plan)
    if which == "psd":
        return _ensemble_psd(segments, step)

    if which == "acf":
        if plan.drop_remainder:
            tail = tail[:0]

        return _ensemble_acf(segments, tail, s_max)

    raise DataError(f"Unknown ensemble statistic '{which}', expecting 'psd' or 'acf'")


def spectra_frame(*spectra):
    """Spectra stacked in one frame, as written to CSV (frequency_hz, value, kind, smoothed)"""
    return pd.concat([s.to_frame() for s in spectra], ignore_index=True)


def save_spectra(path, *spectra):
    runez.ensure_folder(runez.to_path(path).parent, logger=None)
    spectra_frame(*spectra).to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return path


def load_spectra(path):
    """
    Parameters
    ----------
    path : str | pathlib.Path
        CSV file, as written by `save_spectra()`

    Returns
    -------
    dict[SpectrumKind, Spectrum]
        Spectra found in file, by kind
    """
    path = runez.to_path(path)
    if not path.exists():
        raise DataError(f"Spectra file {runez.short(path)} does not exist")

    frame = pd.read_csv(path, float_precision="round_trip")
    missing = [x for x in SPECTRA_COLUMNS if x not in frame.columns]
    if missing:
        raise DataError(f"{runez.short(path)}: missing column(s) {', '.join(missing)}")

    result = {}
    for kind, group in frame.groupby("kind", sort=True):
        smoothed = bool(group["smoothed"].astype(str).str.lower().eq("true").all())
        spectrum = Spectrum(group["frequency_hz"].to_numpy(dtype=float), group["value"].to_numpy(dtype=float), kind=kind, smoothed=smoothed)
        result[spectrum.kind] = spectrum

    return result
