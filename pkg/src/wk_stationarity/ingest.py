import dataclasses
import enum
import logging
from typing import Optional

import numpy as np
import pandas as pd
import runez

from wk_stationarity.config import counted, DataError

LOG = logging.getLogger(__name__)
ISO_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


class GapPolicy(enum.Enum):
    """How missing minutes (nights, weekends, outages) are resolved into a contiguous sample index"""

    compact = "compact"
    ffill = "ffill"
    error = "error"

    @classmethod
    def _missing_(cls, value):
        if value == "forward-fill":
            return cls.ffill


@dataclasses.dataclass(frozen=True)
class CsvSchema:
    """Which columns hold timestamps and prices, and how timestamps are expressed"""

    time_col: str = "timestamp"
    price_col: str = "price"
    time_format: str = "iso8601"


@dataclasses.dataclass(frozen=True, eq=False)
class RawTickTable:
    """Timestamped prices, as loaded (sorted ascending, no duplicates, prices > 0)"""

    timestamps: pd.DatetimeIndex
    prices: np.ndarray
    source: Optional[str] = None

    def __len__(self):
        return len(self.prices)

    @property
    def rows(self):
        return list(zip(self.timestamps, self.prices))


@dataclasses.dataclass(frozen=True, eq=False)
class TickSeries:
    """
    Uniformly indexed price levels I(t), t = 1..N

    `origin_map` (when present) maps each sample index to the timestamp it was observed at (UTC, datetime64[ns]),
    compacted series have gaps in their `origin_map`, while their sample index is contiguous.
    """

    values: np.ndarray
    start: pd.Timestamp
    step: int = 60
    origin_map: Optional[np.ndarray] = None
    label: str = "series"

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or len(values) < 2:
            raise DataError(f"Series '{self.label}' needs at least 2 samples, got {values.size}")

        if not np.all(np.isfinite(values)):
            raise DataError(f"Series '{self.label}' has non-finite values")

        if self.step <= 0:
            raise DataError(f"Series '{self.label}' has invalid step {self.step}")

        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "start", utc_timestamp(self.start))
        if self.origin_map is not None:
            origin_map = np.array(self.origin_map, dtype="datetime64[ns]")
            if len(origin_map) != len(values):
                raise DataError(f"Series '{self.label}': origin map has {len(origin_map)} entries, expecting {len(values)}")

            if np.any(np.diff(origin_map) <= np.timedelta64(0, "ns")):
                raise DataError(f"Series '{self.label}': origin map must be strictly increasing")

            origin_map.flags.writeable = False
            object.__setattr__(self, "origin_map", origin_map)

    def __repr__(self):
        return "%s (%s, step %ss)" % (self.label, counted(self, "sample"), self.step)

    def __len__(self):
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, TickSeries):
            return NotImplemented

        return (
            self.step == other.step
            and self.label == other.label
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.timestamps, other.timestamps)
        )

    __hash__ = None

    @property
    def timestamps(self):
        """Original timestamp of each sample, as UTC datetime64[ns]"""
        if self.origin_map is not None:
            return self.origin_map

        start = np.datetime64(self.start.tz_convert(None).to_datetime64(), "ns")
        return start + np.arange(len(self)) * np.timedelta64(self.step, "s")

    @property
    def end(self):
        return utc_timestamp(self.timestamps[-1])

    @property
    def has_gaps(self):
        """True if some consecutive samples were observed more than `step` seconds apart (compacted nights, weekends...)"""
        if self.origin_map is None:
            return False

        return bool(np.any(np.diff(self.origin_map) > np.timedelta64(self.step, "s")))

    def resolved_calendar(self, calendar="auto"):
        """Calendar wall-clock windows of this series convert with, 'auto' picks 'trading' for compacted series with gaps"""
        if calendar == "auto":
            return "trading" if self.has_gaps else "continuous"

        return calendar

    def relabeled(self, label):
        return dataclasses.replace(self, label=label)


def utc_timestamp(value):
    """
    Parameters
    ----------
    value : str | int | datetime.datetime | numpy.datetime64 | pd.Timestamp
        Instant to convert, naive values are considered to be UTC

    Returns
    -------
    pd.Timestamp
        Timezone-aware UTC timestamp
    """
    ts = pd.Timestamp(value)
    if ts.tzinfo is None:
        return ts.tz_localize("UTC")

    return ts.tz_convert("UTC")


def parse_bound(text, end=False):
    """Date-only `end` bounds cover the whole day: '2020-12-31' -> 2020-12-31T23:59:59.999999999Z"""
    ts = utc_timestamp(text)
    if end and isinstance(text, str) and len(text.strip()) == 10:
        ts = ts + pd.Timedelta(days=1) - pd.Timedelta(1, "ns")

    return ts


def _first_bad_row(mask):
    return int(np.flatnonzero(mask)[0]) + 1


def _parsed_times(column, time_format):
    if time_format == "iso8601":
        return pd.to_datetime(column, utc=True, errors="coerce", format="ISO8601")

    numbers = pd.to_numeric(column, errors="coerce")
    unit = "ms" if time_format == "epoch_ms" else "s"
    return pd.to_datetime(numbers, unit=unit, utc=True, errors="coerce")


@runez.log.timeit("Loading CSV")
def load_csv(path, schema=None):
    """
    Parameters
    ----------
    path : str | pathlib.Path
        CSV file with a header row
    schema : CsvSchema | None
        Columns to use

    Returns
    -------
    RawTickTable
        Rows sorted by timestamp
    """
    schema = schema or CsvSchema()
    path = runez.to_path(path)
    if not path.exists():
        raise DataError(f"Input file {runez.short(path)} does not exist")

    try:
        frame = pd.read_csv(path, dtype=str, skipinitialspace=True, keep_default_na=False)

    except (OSError, UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataError(f"Can't read {runez.short(path)}: {e}") from e

    missing = [x for x in (schema.time_col, schema.price_col) if x not in frame.columns]
    if missing:
        raise DataError(f"{runez.short(path)}: missing column(s) {', '.join(missing)}, available: {', '.join(frame.columns)}")

    if frame.empty:
        raise DataError(f"{runez.short(path)} has no data rows")

    times = _parsed_times(frame[schema.time_col], schema.time_format)
    if times.isna().any():
        row = _first_bad_row(times.isna().to_numpy())
        raise DataError(f"{runez.short(path)}: unparseable {schema.time_format} timestamp at row {row}: {frame[schema.time_col].iloc[row - 1]!r}")

    prices = pd.to_numeric(frame[schema.price_col], errors="coerce").to_numpy(dtype=float)
    if np.isnan(prices).any():
        row = _first_bad_row(np.isnan(prices))
        raise DataError(f"{runez.short(path)}: unparseable price at row {row}: {frame[schema.price_col].iloc[row - 1]!r}")

    if not np.isfinite(prices).all():
        row = _first_bad_row(~np.isfinite(prices))
        raise DataError(f"{runez.short(path)}: non-finite price at row {row}: {frame[schema.price_col].iloc[row - 1]}")

    bad = prices <= 0
    if bad.any():
        row = _first_bad_row(bad)
        raise DataError(f"{runez.short(path)}: non-positive price at row {row}: {frame[schema.price_col].iloc[row - 1]}")

    timestamps = pd.DatetimeIndex(times)
    order = np.argsort(timestamps.asi8, kind="stable")
    timestamps = timestamps[order]
    prices = prices[order]
    duplicated = timestamps.duplicated()
    if duplicated.any():
        i = int(np.flatnonzero(duplicated)[0])
        rows = sorted(int(order[j]) + 1 for j in (i - 1, i))
        raise DataError(f"{runez.short(path)}: duplicate timestamp {timestamps[i].strftime(ISO_FORMAT)} at rows {rows[0]} and {rows[1]}")

    LOG.debug("Loaded %s from %s", counted(prices, "row"), runez.short(path))
    return RawTickTable(timestamps, prices, source=str(path))


def to_tick_series(table: RawTickTable, policy=GapPolicy.compact, step=60, label=None):
    """
    Parameters
    ----------
    table : RawTickTable
        Loaded rows
    policy : GapPolicy | str
        compact: renumber present samples 1..N, ffill: fill every missing step with last price, error: any gap is an error
    step : int
        Sampling interval in seconds
    label : str | None
        Label of resulting series

    Returns
    -------
    TickSeries
        Contiguous series
    """
    policy = GapPolicy(policy)
    label = label or "series"
    if not len(table):
        raise DataError("Can't build a series from an empty table")

    timestamps = table.timestamps.tz_convert(None).to_numpy(dtype="datetime64[ns]")
    prices = np.asarray(table.prices, dtype=float)
    delta = np.timedelta64(step, "s")
    if policy is GapPolicy.compact:
        return TickSeries(prices, start=timestamps[0], step=step, origin_map=timestamps, label=label)

    offsets = (timestamps - timestamps[0]) % delta
    if np.any(offsets != np.timedelta64(0, "ns")):
        row = _first_bad_row(offsets != np.timedelta64(0, "ns"))
        raise DataError(f"Timestamp {utc_timestamp(timestamps[row - 1]).strftime(ISO_FORMAT)} is not aligned on a {step}s grid")

    if policy is GapPolicy.error:
        gaps = np.flatnonzero(np.diff(timestamps) > delta)
        if len(gaps):
            missing = utc_timestamp(timestamps[gaps[0]] + delta)
            raise DataError(f"Gap in data: first missing sample at {missing.strftime(ISO_FORMAT)}")

        return TickSeries(prices, start=timestamps[0], step=step, origin_map=timestamps, label=label)

    grid = pd.date_range(timestamps[0], timestamps[-1], freq=pd.Timedelta(seconds=step))
    filled = pd.Series(prices, index=pd.DatetimeIndex(timestamps)).reindex(grid).ffill()
    inserted = len(grid) - len(prices)
    if inserted:
        LOG.debug("Forward-filled %s", counted(inserted, "missing sample"))

    return TickSeries(filled.to_numpy(), start=timestamps[0], step=step, origin_map=grid.to_numpy(dtype="datetime64[ns]"), label=label)


def slice_by_dates(series: TickSeries, start, end):
    """
    Parameters
    ----------
    series : TickSeries
        Series to slice
    start : str | pd.Timestamp
        First instant to include
    end : str | pd.Timestamp
        Last instant to include

    Returns
    -------
    TickSeries
        Samples whose original timestamp lies in [start, end], renumbered from 1
    """
    start = utc_timestamp(start)
    end = utc_timestamp(end)
    if start >= end:
        raise DataError(f"Invalid slice: start {start.strftime(ISO_FORMAT)} is not before end {end.strftime(ISO_FORMAT)}")

    timestamps = series.timestamps
    lo = np.datetime64(start.tz_convert(None).to_datetime64(), "ns")
    hi = np.datetime64(end.tz_convert(None).to_datetime64(), "ns")
    mask = (timestamps >= lo) & (timestamps <= hi)
    count = int(mask.sum())
    if count < 2:
        raise DataError(f"Slice {start.strftime(ISO_FORMAT)} -> {end.strftime(ISO_FORMAT)} of '{series.label}' has {counted(count, 'sample')}")

    selected = timestamps[mask]
    return TickSeries(series.values[mask], start=selected[0], step=series.step, origin_map=selected, label=series.label)


def save_csv(series: TickSeries, path):
    """Write `series` in the format `load_csv()` reads by default (timestamp, price)"""
    stamps = pd.DatetimeIndex(series.timestamps).strftime(ISO_FORMAT)
    frame = pd.DataFrame({"timestamp": stamps, "price": series.values})
    runez.ensure_folder(runez.to_path(path).parent, logger=None)
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return path


def save_values(values, path):
    """Write intermediate stage `values` (detrended, normalized...) as t,value with t = 1..N"""
    values = np.asarray(getattr(values, "values", values), dtype=float)
    frame = pd.DataFrame({"t": np.arange(1, len(values) + 1), "value": values})
    runez.ensure_folder(runez.to_path(path).parent, logger=None)
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return path
