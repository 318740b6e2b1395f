import dataclasses
import logging
import math

import numpy as np
import scipy.signal

from wk_stationarity.config import ConfigError, DataError
from wk_stationarity.spectral import Spectrum

LOG = logging.getLogger(__name__)
DEFAULT_SMOOTH_HZ = 3.97e-5


@dataclasses.dataclass(frozen=True, eq=False)
class SgKernel:
    """Savitzky-Golay convolution weights, smoothing the central point of a 2m+1 window with a polynomial of given order"""

    half_width: int
    order: int
    weights: np.ndarray

    @property
    def window_len(self):
        return 2 * self.half_width + 1


def savgol_coeffs(window_len, order):
    """
    Parameters
    ----------
    window_len : int
        Odd window length, >= 3
    order : int
        Polynomial order, 0 <= order < window_len

    Returns
    -------
    SgKernel
        Central-point least-squares smoothing weights
    """
    if window_len < 3 or window_len % 2 == 0:
        raise ConfigError(f"Savitzky-Golay window must be odd and >= 3, got {window_len}")

    if not 0 <= order < window_len:
        raise ConfigError(f"Savitzky-Golay order must be within [0, {window_len - 1}], got {order}")

    weights = scipy.signal.savgol_coeffs(window_len, order, use="dot")
    weights = (weights + weights[::-1]) / 2
    weights = weights / weights.sum()
    return SgKernel(window_len // 2, order, weights)


def _edge_weights(count, order, pos):
    """Least-squares weights evaluating, at position `pos`, a polynomial fitted on `count` consecutive points"""
    offsets = np.arange(count, dtype=float) - pos
    vandermonde = np.vander(offsets, N=order + 1, increasing=True)
    return np.linalg.pinv(vandermonde)[0]


def requested_bins(window_hz, spectrum: Spectrum):
    """Odd number of bins `window_hz` spans on the grid of `spectrum`, before clipping to what the spectrum can hold"""
    if len(spectrum) < 3:
        raise DataError(f"Can't smooth {spectrum}: at least 3 bins are needed")

    spacing = np.diff(spectrum.frequencies)
    df = float(spacing[0])
    if df <= 0 or not np.allclose(spacing, df, rtol=1e-9, atol=0):
        raise DataError(f"Can't smooth {spectrum}: frequency grid is not uniform")

    bins = math.floor(window_hz / df + 0.5)
    if bins % 2 == 0:
        bins += 1

    return bins


def hz_to_bins(window_hz, spectrum: Spectrum):
    """
    Parameters
    ----------
    window_hz : float
        Smoothing window width in Hz
    spectrum : Spectrum
        Spectrum to be smoothed (uniform grid, >= 3 bins)

    Returns
    -------
    int
        Odd number of bins, within [3, largest odd <= len(spectrum)]
    """
    bins = requested_bins(window_hz, spectrum)
    count = len(spectrum)
    largest = count if count % 2 else count - 1
    if bins < 3:
        LOG.warning("Smoothing window %g Hz is narrower than 3 bins (bin width %g Hz), using 3 bins", window_hz, spectrum.df)
        return 3

    if bins > largest:
        LOG.warning("Smoothing window %g Hz spans more than the %s available bins, using %s", window_hz, count, largest)
        return largest

    return bins


def smooth_values(values, kernel: SgKernel):
    """Apply `kernel`, refitting truncated windows (of reduced order if needed) at both edges"""
    values = np.asarray(values, dtype=float)
    m = kernel.half_width
    n = len(values)
    result = np.empty(n)
    result[m : n - m] = np.convolve(values, kernel.weights[::-1], mode="valid")
    for i in range(min(m, n)):
        count = min(i + m + 1, n)
        weights = _edge_weights(count, min(kernel.order, count - 1), pos=i)
        result[i] = weights @ values[:count]
        result[n - 1 - i] = weights @ values[::-1][:count]

    return result


def smooth_spectrum(spec: Spectrum, window_hz=DEFAULT_SMOOTH_HZ, order=1):
    """
    Parameters
    ----------
    spec : Spectrum
        Unsmoothed spectrum
    window_hz : float
        Smoothing window width in Hz
    order : int
        Savitzky-Golay polynomial order (1: local linear fit)

    Returns
    -------
    Spectrum
        Smoothed spectrum, on the same grid, with same kind
    """
    if spec.smoothed:
        raise DataError(f"{spec} is already smoothed")

    bins = hz_to_bins(window_hz, spec)
    kernel = savgol_coeffs(bins, order)
    LOG.debug("Smoothing %s over %s bins (order %s)", spec, bins, order)
    return spec.with_values(smooth_values(spec.values, kernel), smoothed=True)
