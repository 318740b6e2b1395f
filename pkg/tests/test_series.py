import numpy as np
import pytest

from wk_stationarity.config import DataError
from wk_stationarity.series import detrend, moving_average, price_return, rolling_std, SigmaSeries, standard_score, window_bounds, WindowLen


def brute_force_average(values, w):
    """Mean of samples with index in [t - floor((w-1)/2), t + ceil((w-1)/2)], clipped to the series"""
    lo = (w - 1) // 2
    hi = w - 1 - lo
    padded = np.concatenate((np.full(lo, np.nan), values, np.full(hi, np.nan)))
    return np.nanmean(np.lib.stride_tricks.sliding_window_view(padded, w), axis=1)


def test_price_return():
    assert price_return(np.array([100.0, 101, 103])).values.tolist() == [1, 2]
    assert not np.any(price_return(np.full(10, 7.5)).values)
    based = price_return(np.array([5.0, 9.0]), t0=1)
    assert based.values.tolist() == [4]
    assert based.t0 == 1
    assert price_return(np.array([5.0, 9.0, 12.0]), t0=1).values.tolist() == [4, 7]

    with pytest.raises(DataError, match="out of range"):
        price_return(np.array([5.0, 9.0]), t0=3)


def test_window_len():
    assert WindowLen.parse("60min", 10**6).samples == 60
    assert WindowLen.parse("60min", 10**6, step=30).samples == 120
    assert WindowLen.parse("1.5h", 10**6).samples == 90
    assert WindowLen.parse("2hours", 10**6).samples == 120
    assert WindowLen.parse("1week", 10**6).samples == 7 * 1440
    assert WindowLen.parse("1week", 10**6, calendar="trading").samples == 5 * 390
    assert WindowLen.parse("12months", 10**6).samples == 12 * 30 * 1440
    assert WindowLen.parse("1year", 10**6, calendar="trading").samples == 252 * 390
    assert WindowLen.parse("full", 1234).samples == 1234
    assert WindowLen.parse(1024, 2000).samples == 1024
    assert WindowLen.parse("1024", 2000).samples == 1024
    assert WindowLen.parse(WindowLen(10, "10min"), 2000).text == "10min"

    assert str(WindowLen(1024)) == "1024"
    assert str(WindowLen.parse("10min", 100)) == "10min (10 samples)"

    with pytest.raises(DataError, match="Invalid window 'foo'"):
        WindowLen.parse("foo", 100)

    with pytest.raises(DataError, match="must be within"):
        WindowLen.parse(0, 100)

    with pytest.raises(DataError, match="must be within"):
        WindowLen.parse("1week", 100)


def test_window_bounds():
    for w in range(1, 1001):
        start, stop = window_bounds(3000, w)
        assert stop[1500] - start[1500] == w
        assert start[1500] == 1500 - (w - 1) // 2

    # Even windows extend one more sample forward than backward
    start, stop = window_bounds(5, 4)
    assert start.tolist() == [0, 0, 1, 2, 3]
    assert stop.tolist() == [3, 4, 5, 5, 5]

    start, stop = window_bounds(5, 5)
    assert start.tolist() == [0, 0, 0, 1, 2]
    assert stop.tolist() == [3, 4, 5, 5, 5]

    start, stop = window_bounds(1, 1)
    assert start.tolist() == [0]
    assert stop.tolist() == [1]


def test_moving_average():
    values = np.array([1.0, 2, 3, 4, 5])
    trend = moving_average(values, 3)
    assert trend.values.tolist() == [1.5, 2, 3, 4, 4.5]
    assert trend.window_used == 3
    assert moving_average(values, WindowLen(5)).values[2] == 3

    for w in (1, 2, 7, 50, 100):
        assert np.all(moving_average(np.full(100, 3.7), w).values == 3.7)

    with pytest.raises(DataError, match="must be within"):
        moving_average(values, 6)


def test_moving_average_brute_force():
    rng = np.random.default_rng(12345)
    for _ in range(1000):
        n = int(rng.integers(1, 600))
        w = int(rng.integers(1, n + 1))
        values = 50 + rng.normal(size=n)
        expected = brute_force_average(values, w)
        np.testing.assert_allclose(moving_average(values, w).values, expected, rtol=1e-12, atol=0)

    for n, w in ((10**4, 1), (10**4, 2), (10**4, 63), (9999, 64)):
        values = 50 + rng.normal(size=n)
        np.testing.assert_allclose(moving_average(values, w).values, brute_force_average(values, w), rtol=1e-12, atol=0)


def test_detrend():
    series = np.array([1.0, 2, 4])
    assert detrend(series, np.array([1.0, 2, 3])).values.tolist() == [0, 0, 1]
    assert not np.any(detrend(series, series).values)

    ramp = np.arange(1, 102, dtype=float)
    detrended = detrend(ramp, moving_average(ramp, 11))
    assert detrended.window_used == 11
    assert np.all(detrended.values[5:-5] == 0)

    rng = np.random.default_rng(7)
    n = 2**14
    noise = rng.normal(size=n)
    detrended = detrend(noise, moving_average(noise, 101))
    assert abs(np.mean(detrended.values[50:-50])) < 5 / np.sqrt(n)

    with pytest.raises(DataError, match="Can't detrend"):
        detrend(series, np.zeros(2))


def test_rolling_std():
    sigma = rolling_std(np.array([1.0, -1, 1, -1]), 4)
    assert sigma.values[1] == 1
    assert sigma.window_used == 4
    assert not np.any(rolling_std(np.full(20, 2.5), 5).values)

    rng = np.random.default_rng(3)
    x = rng.normal(size=500)
    for a in (-3.5, 1e-3, 42.0):
        np.testing.assert_allclose(rolling_std(a * x, 17).values, abs(a) * rolling_std(x, 17).values, rtol=1e-9)

    with pytest.raises(DataError, match="must be within .2, 4."):
        rolling_std(np.array([1.0, -1, 1, -1]), 1)


def test_standard_score(logged):
    normalized = standard_score(np.array([2.0, -2]), SigmaSeries(np.array([1.0, 2]), window_used=2))
    assert normalized.values.tolist() == [2, -1]
    assert normalized.delta2 == 2
    assert not len(normalized.floor_hits)

    x = np.array([1.0, -1, 1, -1, 1, -1])
    assert np.allclose(standard_score(x, np.full(6, 2.0)).values, x / 2)

    rng = np.random.default_rng(11)
    x = rng.normal(size=1000)
    reference = standard_score(x, rolling_std(x, 60)).values
    for a in (1e-4, 3.0, 1e5):
        scaled = standard_score(a * x, rolling_std(a * x, 60)).values
        np.testing.assert_allclose(scaled, reference, rtol=1e-9)

    with pytest.raises(DataError, match="Can't normalize"):
        standard_score(x, np.ones(10))

    with pytest.raises(DataError, match="zero variance"):
        standard_score(np.zeros(10), np.zeros(10))


def test_sigma_floor(logged):
    rng = np.random.default_rng(5)
    x = np.concatenate((rng.normal(size=100), np.zeros(50), rng.normal(size=100)))
    sigma = rolling_std(x, 10)
    normalized = standard_score(x, sigma, delta1=1000)
    assert normalized.delta1 == 1000
    assert normalized.delta2 == 10
    assert len(normalized.floor_hits) == 41  # Windows lying entirely within the flat stretch
    assert np.all(np.isfinite(normalized.values))
    assert not np.any(normalized.values[normalized.floor_hits])
    assert "Windowed std below floor" in logged.pop()


def test_normalized_iid():
    rng = np.random.default_rng(2024)
    x = rng.normal(size=2**17)
    normalized = standard_score(x, rolling_std(x, 60))
    output_std = rolling_std(normalized, 60).values[60:-60]
    assert abs(np.median(output_std) - 1) < 0.1
    assert np.mean(np.abs(output_std - 1) < 0.1) > 0.5
