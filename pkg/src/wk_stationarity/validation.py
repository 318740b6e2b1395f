"""
Validation sweep over fractional Gaussian noise (the increments of fractional Brownian motion).

For each Hurst exponent H, the ensemble PSD and the rescaled transform of the ensemble autocorrelation of a generated
series are compared bin by bin (percentage difference, smoothed with a centered moving average). Stationary fGn of any H
should keep both curves together, the resulting H x frequency map shows where the estimators drift apart.
"""

import dataclasses
import logging

import numpy as np
import pandas as pd
import runez

from wk_stationarity import percentage_difference
from wk_stationarity.config import ConfigError, counted, DataError
from wk_stationarity.series import moving_average
from wk_stationarity.spectral import ensemble_average, EnsemblePlan, ft_autocorr
from wk_stationarity.synth import fractional_gaussian_noise, random_generator

LOG = logging.getLogger(__name__)
DEFAULT_HURST = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
SIGNIFICANCE_Z = 1.96
SWEEP_COLUMNS = ["hurst", "frequency_hz", "pct_diff"]


def significance_band(n, z=SIGNIFICANCE_Z):
    """Half-width of the band sample autocorrelations of `n` iid samples stay within (95% for z = 1.96)"""
    if n < 1:
        raise DataError(f"Can't compute significance band for {n} samples")

    return z / np.sqrt(n)


@dataclasses.dataclass(frozen=True, eq=False)
class HurstSweep:
    """Smoothed percentage difference between ensemble PSD and transformed autocorrelation, one row per Hurst exponent"""

    hurst: np.ndarray
    frequencies: np.ndarray
    pct_diff: np.ndarray
    acfs: tuple
    window: int

    def __repr__(self):
        return "fGn sweep over %s x %s" % (runez.plural(self.hurst, "Hurst exponent"), counted(self.frequencies, "bin"))

    @property
    def medians(self):
        """Median smoothed percentage difference per Hurst exponent"""
        return np.nanmedian(self.pct_diff, axis=1)

    @property
    def samples_used(self):
        first = self.acfs[0]
        return first.n * first.segments

    def to_frame(self):
        count = len(self.frequencies)
        return pd.DataFrame(
            {
                "hurst": np.repeat(self.hurst, count),
                "frequency_hz": np.tile(self.frequencies, len(self.hurst)),
                "pct_diff": self.pct_diff.ravel(),
            },
            columns=SWEEP_COLUMNS,
        )

    def save(self, path):
        runez.ensure_folder(runez.to_path(path).parent, logger=None)
        self.to_frame().to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
        return path


def parsed_hurst(text):
    """
    Parameters
    ----------
    text : str | list | tuple | None
        Comma separated Hurst exponents (eg: "0.3,0.5,0.7"), None for the default grid

    Returns
    -------
    tuple[float]
        Sorted, distinct exponents, each within (0, 1)
    """
    if not text:
        return DEFAULT_HURST

    try:
        values = sorted({float(x) for x in runez.flattened(text, split=",")})

    except ValueError:
        raise ConfigError(f"Invalid Hurst exponents '{text}', expecting a comma separated list of numbers") from None

    bad = [x for x in values if not 0 < x < 1]
    if bad:
        raise ConfigError(f"Hurst exponents must be within (0, 1), got {runez.joined(bad, delimiter=', ')}")

    return tuple(values)


@runez.log.timeit("fGn sweep")
def hurst_sweep(hurst_values=DEFAULT_HURST, n=2**17, segment_len=10000, seed=0, step=60, window=50):
    """
    Parameters
    ----------
    hurst_values : list[float]
        Hurst exponents to sweep
    n : int
        Number of fGn samples generated per exponent
    segment_len : int
        Ensemble segment length
    seed : int
        Random seed, the same draw is used for every exponent
    step : int
        Sampling interval in seconds
    window : int
        Moving average window (in bins) smoothing the percentage difference

    Returns
    -------
    HurstSweep
        Smoothed percentage difference per exponent and frequency (zero frequency excluded)
    """
    if not len(hurst_values):
        raise ConfigError("No Hurst exponents to sweep")

    plan = EnsemblePlan(segment_len)
    rows = []
    acfs = []
    grid = None
    for hurst in hurst_values:
        x = fractional_gaussian_noise(random_generator(seed), n, hurst)
        power = ensemble_average(x, plan, which="psd", step=step)
        acf = ensemble_average(x, plan, which="acf", step=step)
        ftac = ft_autocorr(acf, n=plan.segment_len, step=step, like=power)
        pct = percentage_difference(ftac, power)[1:]
        if not np.all(np.isfinite(pct)):
            raise DataError(f"H={hurst}: transformed autocorrelation vanishes on {counted(int(np.isnan(pct).sum()), 'bin')}")

        smoothed = moving_average(pct, min(window, len(pct))).values
        LOG.debug("H=%s: median smoothed difference %.4g", hurst, np.nanmedian(smoothed))
        rows.append(smoothed)
        acfs.append(acf)
        grid = power.frequencies[1:]

    return HurstSweep(np.array(hurst_values, dtype=float), grid, np.vstack(rows), tuple(acfs), window)
