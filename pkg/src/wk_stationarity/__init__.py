"""
Designed to be used via wk-stationarity CLI.
Can be used programmatically too, example usage:

    from wk_stationarity import StationarityTest
    from wk_stationarity.config import TestConfig
    from wk_stationarity.ingest import load_csv, to_tick_series

    series = to_tick_series(load_csv("spx.csv"))
    verdict = StationarityTest(series, TestConfig(delta2="10min")).evaluate()
"""

import concurrent.futures
import dataclasses
import json
import logging
from typing import Optional

import numpy as np
import runez

from wk_stationarity.config import ConfigError, counted, DataError, TestConfig
from wk_stationarity.ingest import TickSeries
from wk_stationarity.series import detrend, moving_average, price_return, rolling_std, standard_score, WindowLen
from wk_stationarity.smoothing import hz_to_bins, requested_bins, smooth_spectrum
from wk_stationarity.spectral import ensemble_average, EnsemblePlan, ft_autocorr, Spectrum

LOG = logging.getLogger(__name__)
MIN_BAND_BINS = 8


@dataclasses.dataclass(frozen=True, eq=False)
class WkComparison:
    """Smoothed PSD and smoothed, rescaled transform of the autocorrelation, compared bin by bin over `band`"""

    psd_smoothed: Spectrum
    ftac_smoothed: Spectrum
    pointwise: np.ndarray
    distance: float
    band: tuple
    metric: str


@dataclasses.dataclass(frozen=True, eq=False)
class Verdict:
    """Stationarity decision: stationary <=> distance < threshold"""

    stationary: bool
    distance: float
    threshold: float
    config: TestConfig
    label: str
    delta1: WindowLen
    delta2: WindowLen
    n_samples: int
    band: tuple
    diagnostics: dict
    comparison: Optional[WkComparison] = None

    def __repr__(self):
        state = runez.green("stationary") if self.stationary else runez.red("non-stationary")
        return "%s delta2=%s: %s (distance %.4g, threshold %s)" % (self.label, self.delta2, state, self.distance, self.threshold)

    def to_record(self, **extra):
        """Machine-readable record (one JSON line per verdict)"""
        record = {
            "label": self.label,
            "delta1": self.delta1.text,
            "delta1_samples": self.delta1.samples,
            "delta2": self.delta2.text,
            "delta2_samples": self.delta2.samples,
            "metric": self.config.metric,
            "distance": self.distance,
            "threshold": self.threshold,
            "stationary": self.stationary,
            "n_samples": self.n_samples,
            "band": list(self.band),
        }
        record.update(self.diagnostics)
        record.update(extra)
        return record

    def to_json(self, **extra):
        """One JSON line, NaN values (eg: no usable bin for `mean_pct_diff`) are emitted as null"""
        record = {k: _json_value(v) for k, v in self.to_record(**extra).items()}
        return json.dumps(record, sort_keys=True, allow_nan=False)


def _json_value(value):
    if isinstance(value, float) and not np.isfinite(value):
        return None

    return value


def percentage_difference(a: Spectrum, b: Spectrum):
    """
    Parameters
    ----------
    a : Spectrum
        Reference spectrum (denominator)
    b : Spectrum
        Spectrum to compare with reference

    Returns
    -------
    numpy.ndarray
        |a_i - b_i| / |a_i| per bin, NaN where a_i = 0
    """
    a.check_grid(b)
    denominator = np.abs(a.values)
    zero = denominator == 0
    if zero.any():
        LOG.debug("Excluding %s with zero reference value", counted(int(zero.sum()), "bin"))

    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(zero, np.nan, np.abs(a.values - b.values) / np.where(zero, 1.0, denominator))


def pointwise_discrepancy(psd_smoothed: Spectrum, ftac_smoothed: Spectrum, metric="median_log_ratio"):
    """Per-bin discrepancy the `metric` aggregates (NaN on bins that can't be used)"""
    psd_smoothed.check_grid(ftac_smoothed)
    if metric == "median_log_ratio":
        p = psd_smoothed.values
        f = ftac_smoothed.values
        usable = (p > 0) & (f > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(usable, np.abs(np.log10(np.where(usable, p, 1.0) / np.where(usable, f, 1.0))), np.nan)

    if metric == "mean_pct_diff":
        return percentage_difference(ftac_smoothed, psd_smoothed)

    raise ConfigError(f"Unknown metric '{metric}'")


def band_mask(spectrum: Spectrum, band):
    f_lo, f_hi = band
    if not f_lo < f_hi:
        raise DataError(f"Invalid band [{f_lo}, {f_hi}]: f_lo must be < f_hi")

    return (spectrum.frequencies >= f_lo) & (spectrum.frequencies <= f_hi)


def default_band(spectrum: Spectrum, skip_low=5, skip_high=0.1):
    """Frequency band excluding the lowest `skip_low` bins, and the top `skip_high` fraction of bins"""
    count = len(spectrum)
    last = count - 1 - int(np.floor(skip_high * count))
    if last <= skip_low:
        raise DataError(f"Spectrum of {counted(count, 'bin')} is too short for default band")

    return float(spectrum.frequencies[skip_low]), float(spectrum.frequencies[last])


def wk_distance(psd_smoothed: Spectrum, ftac_smoothed: Spectrum, band=None, metric="median_log_ratio"):
    """
    Parameters
    ----------
    psd_smoothed : Spectrum
        Smoothed power spectral density
    ftac_smoothed : Spectrum
        Smoothed, rescaled Fourier transform of the autocorrelation
    band : (float, float) | None
        Frequency band [f_lo, f_hi] in Hz to consider (default: all bins)
    metric : str
        median_log_ratio: median of |log10(psd / ftac)|, mean_pct_diff: mean of |ftac - psd| / |ftac|

    Returns
    -------
    float
        Distance >= 0 (0: perfect match)
    """
    pointwise = pointwise_discrepancy(psd_smoothed, ftac_smoothed, metric=metric)
    if band is not None:
        pointwise = pointwise[band_mask(psd_smoothed, band)]

    usable = pointwise[np.isfinite(pointwise)]
    if len(usable) < MIN_BAND_BINS:
        raise DataError(f"Only {counted(len(usable), 'usable bin')} in band, need at least {MIN_BAND_BINS}")

    if metric == "median_log_ratio":
        return float(np.median(usable))

    return float(np.mean(usable))


class StationarityTest:
    """
    Drives the test of one series: detrending (done once), then normalization and spectral comparison per Δ₂t.
    Pipeline: moving_average(Δ₁t) -> detrend -> return -> rolling_std(Δ₂t) -> standard_score -> ensemble psd and acf
    -> ft_autocorr -> smooth both -> wk_distance
    """

    def __init__(self, series: TickSeries, cfg: TestConfig = None):
        self.series = series
        self.cfg = cfg or TestConfig()
        self.calendar = series.resolved_calendar(self.cfg.calendar)
        self.delta1 = self.window(self.cfg.delta1, len(series))
        self.plan = EnsemblePlan(self.cfg.ensemble_len, drop_remainder=self.cfg.drop_remainder)

    def __repr__(self):
        return "%s, delta1=%s" % (self.series, self.delta1)

    def window(self, spec, n):
        return WindowLen.parse(spec, n, step=self.series.step, calendar=self.calendar)

    @runez.cached_property
    def trend(self):
        return moving_average(self.series, self.delta1)

    @runez.cached_property
    def detrended(self):
        """Detrended index I*(t)"""
        return detrend(self.series, self.trend)

    @runez.cached_property
    def returns(self):
        """Detrended returns x*(t)"""
        t0 = 1 if self.cfg.returns == "base" else None
        return price_return(self.detrended, t0=t0)

    def normalized(self, delta2=None):
        delta2 = self.resolved_delta2(delta2)
        sigma = rolling_std(self.returns, delta2)
        return standard_score(self.returns, sigma, delta1=self.delta1.samples)

    def resolved_delta2(self, delta2=None):
        delta2 = self.cfg.delta2 if delta2 is None else delta2
        return self.window(delta2, len(self.returns.values))

    def compare(self, normalized):
        """Smoothed ensemble PSD vs smoothed transform of the ensemble autocorrelation"""
        n = len(normalized.values)
        if n < self.plan.segment_len:
            raise DataError(f"Insufficient data: {counted(n, 'return')}, ensemble segments need {self.plan.segment_len}")

        step = self.series.step
        power = ensemble_average(normalized, self.plan, which="psd", step=step)
        acf = ensemble_average(normalized, self.plan, which="acf", step=step, s_max=self.cfg.s_max)
        ftac = ft_autocorr(acf, n=self.plan.segment_len, step=step, like=power)
        psd_smoothed = smooth_spectrum(power, self.cfg.smooth_hz, self.cfg.smooth_order)
        ftac_smoothed = smooth_spectrum(ftac, self.cfg.smooth_hz, self.cfg.smooth_order)
        band = self.cfg.band or default_band(power, self.cfg.band_skip_low, self.cfg.band_skip_high)
        distance = wk_distance(psd_smoothed, ftac_smoothed, band=band, metric=self.cfg.metric)
        pointwise = pointwise_discrepancy(psd_smoothed, ftac_smoothed, metric=self.cfg.metric)
        comparison = WkComparison(psd_smoothed, ftac_smoothed, pointwise, distance, band, self.cfg.metric)
        return comparison, acf

    def evaluate(self, delta2=None):
        """
        Parameters
        ----------
        delta2 : str | int | WindowLen | None
            Normalization window Δ₂t (default: from config)

        Returns
        -------
        Verdict
            Stationarity verdict, with full comparison retained for reporting
        """
        delta2 = self.resolved_delta2(delta2)
        normalized = self.normalized(delta2)
        comparison, acf = self.compare(normalized)
        in_band = band_mask(comparison.psd_smoothed, comparison.band)
        pct = percentage_difference(comparison.ftac_smoothed, comparison.psd_smoothed)[in_band]
        n = len(normalized.values)
        smooth_bins = hz_to_bins(self.cfg.smooth_hz, comparison.psd_smoothed)
        diagnostics = {
            "calendar": self.calendar,
            "sigma_floor_hits": len(normalized.floor_hits),
            "segments": acf.segments,
            "remainder_dropped": n % self.plan.segment_len if self.cfg.drop_remainder else 0,
            "band_bins": int(in_band.sum()),
            "smooth_bins": smooth_bins,
            "smooth_clipped": smooth_bins != requested_bins(self.cfg.smooth_hz, comparison.psd_smoothed),
            "mean_pct_diff": float(np.nanmean(pct)),
        }
        verdict = Verdict(
            stationary=bool(comparison.distance < self.cfg.threshold),
            distance=comparison.distance,
            threshold=self.cfg.threshold,
            config=self.cfg,
            label=self.series.label,
            delta1=self.delta1,
            delta2=delta2,
            n_samples=len(self.series),
            band=comparison.band,
            diagnostics=diagnostics,
            comparison=comparison,
        )
        LOG.debug("%s: %s", self, verdict)
        return verdict

    def scan(self, delta2_list, jobs=None):
        """One verdict per Δ₂t, in given order"""
        if not delta2_list:
            raise ConfigError("No normalization windows to scan")

        windows = [self.resolved_delta2(x) for x in delta2_list]
        jobs = jobs or self.cfg.jobs
        _ = self.returns  # Detrend once, before fanning out
        if jobs > 1 and len(windows) > 1:
            with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as executor:
                return list(executor.map(self.evaluate, windows))

        return [self.evaluate(x) for x in windows]

    def max_stationary_window(self, candidates):
        """Largest candidate Δ₂t yielding a stationary verdict (None if none does)"""
        windows = [self.resolved_delta2(x) for x in candidates]
        samples = [x.samples for x in windows]
        if samples != sorted(samples, reverse=True):
            raise ConfigError(f"Candidate windows must be sorted in descending order: {runez.joined(windows, delimiter=', ')}")

        for window in windows:
            verdict = self.evaluate(window)
            if verdict.stationary:
                return window


@runez.log.timeit("Stationarity test")
def test_stationarity(series: TickSeries, cfg: TestConfig = None):
    """Stationarity verdict for `series`, with settings `cfg`"""
    return StationarityTest(series, cfg).evaluate()


@runez.log.timeit("Window scan")
def scan_windows(series: TickSeries, cfg_base: TestConfig, delta2_list, jobs=None):
    """One verdict per normalization window Δ₂t in `delta2_list`, all other settings fixed"""
    return StationarityTest(series, cfg_base).scan(delta2_list, jobs=jobs)


def max_stationary_window(series: TickSeries, cfg_base: TestConfig, candidates):
    """First (largest) of the descending `candidates` under which `series` is stationary, None when all fail"""
    return StationarityTest(series, cfg_base).max_stationary_window(candidates)


def first_stationary(verdicts):
    """Largest Δ₂t among `verdicts` that yielded a stationary verdict"""
    for verdict in sorted(verdicts, key=lambda v: v.delta2.samples, reverse=True):
        if verdict.stationary:
            return verdict.delta2
