"""
Return / trend decomposition of a price series.

Windows are centered on each sample t, covering indices [t - floor((w-1)/2), t + ceil((w-1)/2)] clipped to [1, N].
Near the edges windows are truncated, and averages are normalized by the exact count of samples they include.
"""

import dataclasses
import logging
import re
from typing import Optional

import numpy as np

from wk_stationarity.config import counted, DataError

LOG = logging.getLogger(__name__)
RX_WINDOW = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*([a-z]+)\s*$")

# Minutes per unit, per calendar ('trading' counts trading minutes of a compacted exchange series)
CALENDAR_UNITS = {
    "continuous": {"min": 1, "h": 60, "day": 1440, "week": 7 * 1440, "month": 30 * 1440, "year": 365 * 1440},
    "trading": {"min": 1, "h": 60, "day": 390, "week": 5 * 390, "month": 21 * 390, "year": 252 * 390},
}
UNIT_ALIASES = {
    "m": "min",
    "mins": "min",
    "minute": "min",
    "minutes": "min",
    "hour": "h",
    "hours": "h",
    "d": "day",
    "days": "day",
    "w": "week",
    "weeks": "week",
    "months": "month",
    "y": "year",
    "years": "year",
}


@dataclasses.dataclass(frozen=True)
class WindowLen:
    """Window length Δt, in samples, remembering how it was expressed"""

    samples: int
    text: str = None

    def __post_init__(self):
        if self.text is None:
            object.__setattr__(self, "text", str(self.samples))

    def __repr__(self):
        if self.text == str(self.samples):
            return self.text

        return "%s (%s samples)" % (self.text, self.samples)

    @classmethod
    def parse(cls, spec, n, step=60, calendar="continuous"):
        """
        Parameters
        ----------
        spec : str | int | WindowLen
            Window as number of samples (1024), wall-clock ("60min", "1week", "12months"), or "full" (all N samples)
        n : int
            Length of the series the window applies to
        step : int
            Sampling interval in seconds
        calendar : str
            'continuous' (24/7 series) or 'trading' (compacted exchange hours), 'auto' counts as continuous here

        Returns
        -------
        WindowLen
            Window length in samples, 1 <= samples <= n
        """
        if isinstance(spec, WindowLen):
            samples, text = spec.samples, spec.text

        elif isinstance(spec, (int, np.integer)) and not isinstance(spec, bool):
            samples, text = int(spec), str(spec)

        else:
            text = str(spec).strip()
            samples = cls._parsed_samples(text.lower(), n, step, calendar)

        if not 1 <= samples <= n:
            raise DataError(f"Window {text} ({counted(samples, 'sample')}) must be within [1, {n}] for this series")

        return cls(samples, text)

    @staticmethod
    def _parsed_samples(text, n, step, calendar):
        if text == "full":
            return n

        if text.isdigit():
            return int(text)

        m = RX_WINDOW.match(text)
        unit = m and UNIT_ALIASES.get(m.group(2), m.group(2))
        if calendar == "auto":
            calendar = "continuous"

        minutes = CALENDAR_UNITS.get(calendar, {}).get(unit)
        if not minutes:
            raise DataError(f"Invalid window '{text}', expecting samples (eg: 1024), or a duration (eg: 60min, 1week, 12months, full)")

        samples = int(round(float(m.group(1)) * minutes * 60 / step))
        LOG.debug("Window %s -> %s (%s calendar, %ss step)", text, counted(samples, "sample"), calendar, step)
        return samples


@dataclasses.dataclass(frozen=True, eq=False)
class ReturnSeries:
    """Price differences; `t0` is the base index (1-based) for X(t) = I(t0 + t) - I(t0), None for lag-1 returns"""

    values: np.ndarray
    parent_label: str = None
    t0: Optional[int] = None


@dataclasses.dataclass(frozen=True, eq=False)
class TrendSeries:
    values: np.ndarray
    window_used: int


@dataclasses.dataclass(frozen=True, eq=False)
class DetrendedSeries:
    values: np.ndarray
    window_used: int


@dataclasses.dataclass(frozen=True, eq=False)
class SigmaSeries:
    values: np.ndarray
    window_used: int


@dataclasses.dataclass(frozen=True, eq=False)
class NormalizedSeries:
    """Standard score x**(t); `floor_hits` lists the indices where the windowed std fell below `sigma_floor`"""

    values: np.ndarray
    delta1: Optional[int]
    delta2: int
    sigma_floor: float = 0.0
    floor_hits: np.ndarray = dataclasses.field(default_factory=lambda: np.zeros(0, dtype=int))

    def __len__(self):
        return len(self.values)


def as_array(series):
    """Values of given series-like object, as a float array"""
    values = getattr(series, "values", series)
    return np.asarray(values, dtype=float)


def window_bounds(n, w):
    """
    Parameters
    ----------
    n : int
        Series length
    w : int
        Window length

    Returns
    -------
    (numpy.ndarray, numpy.ndarray)
        For each 0-based index: first index in window, and (exclusive) end of window, clipped to [0, n]
    """
    lo = (w - 1) // 2
    hi = w - 1 - lo
    idx = np.arange(n)
    return np.maximum(idx - lo, 0), np.minimum(idx + hi, n - 1) + 1


def _window_sums(values, start, stop):
    cumulative = np.concatenate(([0.0], np.cumsum(values)))
    return cumulative[stop] - cumulative[start]


def _checked_window(w, n, minimum=1):
    w = w.samples if isinstance(w, WindowLen) else int(w)
    if not minimum <= w <= n:
        raise DataError(f"Window {w} must be within [{minimum}, {n}] (series has {counted(n, 'sample')})")

    return w


def price_return(series, t0=None):
    """
    Parameters
    ----------
    series : wk_stationarity.ingest.TickSeries | DetrendedSeries | numpy.ndarray
        Index levels I(t)
    t0 : int | None
        Base index (1-based): X(t) = I(t0 + t) - I(t0), for t = 1..N-t0
        Default (None): lag-1 returns x(t) = I(t) - I(t-1)

    Returns
    -------
    ReturnSeries
        Price returns
    """
    values = as_array(series)
    label = getattr(series, "label", None)
    if t0 is None:
        return ReturnSeries(np.diff(values), parent_label=label)

    n = len(values)
    if not 1 <= t0 <= n:
        raise DataError(f"Base index t0={t0} out of range [1, {n}]")

    return ReturnSeries(values[t0:] - values[t0 - 1], parent_label=label, t0=t0)


def moving_average(series, w):
    """
    Parameters
    ----------
    series : wk_stationarity.ingest.TickSeries | DetrendedSeries | numpy.ndarray
        Series to average
    w : int | WindowLen
        Window length Δ₁t in samples

    Returns
    -------
    TrendSeries
        Centered moving average, truncated windows at the edges normalized by their sample count
    """
    values = as_array(series)
    n = len(values)
    w = _checked_window(w, n)
    start, stop = window_bounds(n, w)
    # Sums are accumulated around the median, so that flat stretches sum to exactly 0
    center = np.median(values)
    sums = _window_sums(values - center, start, stop)
    return TrendSeries(sums / (stop - start) + center, window_used=w)


def detrend(series, trend):
    """x*(t) = series(t) - trend(t)"""
    values = as_array(series)
    trend_values = as_array(trend)
    if len(values) != len(trend_values):
        raise DataError(f"Can't detrend: series has {len(values)} samples, trend has {len(trend_values)}")

    return DetrendedSeries(values - trend_values, window_used=getattr(trend, "window_used", None))


def rolling_std(x, w):
    """
    Parameters
    ----------
    x : DetrendedSeries | ReturnSeries | numpy.ndarray
        Series to characterize
    w : int | WindowLen
        Window length Δ₂t in samples

    Returns
    -------
    SigmaSeries
        Population standard deviation over the same windows as `moving_average()`
    """
    values = as_array(x)
    n = len(values)
    w = _checked_window(w, n, minimum=2)
    start, stop = window_bounds(n, w)
    count = stop - start
    centered = values - np.median(values)
    mean = _window_sums(centered, start, stop) / count
    mean_sq = _window_sums(centered * centered, start, stop) / count
    variance = np.maximum(mean_sq - mean * mean, 0.0)
    # Flat windows (forward-filled weekends...) must yield exactly 0, cumulative sums leave rounding residue there
    changes = np.concatenate(([0], np.cumsum(values[1:] != values[:-1])))
    variance[changes[stop - 1] == changes[start]] = 0.0
    return SigmaSeries(np.sqrt(variance), window_used=w)


def standard_score(x, sigma, delta1=None):
    """
    Parameters
    ----------
    x : DetrendedSeries | ReturnSeries | numpy.ndarray
        Detrended returns x*(t)
    sigma : SigmaSeries
        Windowed standard deviation of `x`
    delta1 : int | None
        Detrending window that produced `x` (for reference)

    Returns
    -------
    NormalizedSeries
        x**(t) = x*(t) / max(sigma(t), sigma_floor), with sigma_floor = 1e-12 * std(x)
    """
    values = as_array(x)
    sigma_values = as_array(sigma)
    if len(values) != len(sigma_values):
        raise DataError(f"Can't normalize: series has {len(values)} samples, sigma has {len(sigma_values)}")

    global_std = float(np.std(values))
    if global_std == 0:
        raise DataError("Can't normalize a series with zero variance")

    sigma_floor = 1e-12 * global_std
    hits = np.flatnonzero(sigma_values < sigma_floor)
    if len(hits):
        LOG.warning("Windowed std below floor %.3g at %s", sigma_floor, counted(hits, "sample"))

    normalized = values / np.maximum(sigma_values, sigma_floor)
    delta1 = delta1 if delta1 is not None else getattr(x, "window_used", None)
    return NormalizedSeries(normalized, delta1=delta1, delta2=getattr(sigma, "window_used", None), sigma_floor=sigma_floor, floor_hits=hits)
