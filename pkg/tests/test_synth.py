import numpy as np
import pytest
import scipy.stats

from wk_stationarity.config import ConfigError
from wk_stationarity.spectral import autocorrelation
from wk_stationarity.synth import (
    fgn_autocovariance,
    generate,
    GeneratorSpec,
    is_heavy_tailed,
    qgaussian_sample,
    random_generator,
    raw_sample,
    sample_kurtosis,
)


def test_generate():
    spec = GeneratorSpec("gaussian_iid", n=1000, seed=3)
    assert spec.label == "gaussian_iid-3"
    assert str(spec) == "gaussian_iid(n=1000, seed=3, stream=0, sigma=1.0)"

    series = generate(spec)
    assert series == generate(GeneratorSpec("gaussian_iid", n=1000, seed=3))
    assert series != generate(GeneratorSpec("gaussian_iid", n=1000, seed=4))
    assert len(series) == 1000
    assert series.label == "gaussian_iid-3"
    assert series.step == 60
    assert series.values.min() == 100
    assert str(series.start) == "2020-01-01 00:00:00+00:00"

    shifted = generate(GeneratorSpec("random_walk", n=500, seed=3, level=5, start="2021-06-01T00:00:00Z", step=30))
    assert shifted.values.min() == 5
    assert shifted.step == 30
    assert str(shifted.end) == "2021-06-01 04:09:30+00:00"


def test_streams():
    a = random_generator(7, stream=0).normal(size=10)
    assert np.array_equal(a, random_generator(7, stream=0).normal(size=10))
    assert not np.array_equal(a, random_generator(7, stream=1).normal(size=10))
    assert not np.array_equal(a, random_generator(8, stream=0).normal(size=10))

    one = raw_sample(GeneratorSpec("ar1", n=100, seed=1, stream=0))
    two = raw_sample(GeneratorSpec("ar1", n=100, seed=1, stream=1))
    assert not np.array_equal(one, two)


def test_invalid_specs():
    with pytest.raises(ConfigError, match="Unknown generator 'foo'"):
        GeneratorSpec("foo")

    with pytest.raises(ConfigError, match="Unknown parameter.s. for ar1: hurst"):
        GeneratorSpec("ar1", params={"hurst": 0.5})

    with pytest.raises(ConfigError, match="n >= 2"):
        GeneratorSpec("gaussian_iid", n=1)

    with pytest.raises(ConfigError, match="64-bit"):
        GeneratorSpec("gaussian_iid", seed=-1)

    with pytest.raises(ConfigError, match="'phi' must be within"):
        raw_sample(GeneratorSpec("ar1", n=10, params={"phi": 1.0}))

    with pytest.raises(ConfigError, match="'sigma' must be > 0"):
        raw_sample(GeneratorSpec("gaussian_iid", n=10, params={"sigma": 0}))

    with pytest.raises(ConfigError, match="Hurst exponent must be within"):
        raw_sample(GeneratorSpec("fbm", n=10, params={"hurst": 1.2}))

    with pytest.raises(ConfigError, match="limited to 262144 samples"):
        raw_sample(GeneratorSpec("fbm", n=2**18 + 1))

    with pytest.raises(ConfigError, match="Switch point must be within"):
        raw_sample(GeneratorSpec("variance_switch", n=10, params={"switch": 10}))


def test_ar1():
    x = raw_sample(GeneratorSpec("ar1", n=10**5, seed=11, params={"phi": 0.6}))
    assert autocorrelation(x, s_max=1).values[1] == pytest.approx(0.6, abs=0.02)


def test_fbm():
    assert fgn_autocovariance(0.5, 4).tolist() == [1, 0, 0, 0]

    n = 2**14
    x = raw_sample(GeneratorSpec("fbm", n=n, seed=5, params={"hurst": 0.5}))
    lags = np.abs(autocorrelation(np.diff(x), s_max=50).values[1:])
    assert np.all(lags < 4 / np.sqrt(n))
    assert np.sum(lags < 3 / np.sqrt(n)) >= 47

    s = np.arange(1, 101)
    for seed, hurst in enumerate((0.3, 0.5, 0.7)):
        x = raw_sample(GeneratorSpec("fbm", n=2**17, seed=6 + seed, params={"hurst": hurst}))
        variances = [np.mean((x[k:] - x[:-k]) ** 2) for k in s]
        slope = np.polyfit(np.log(s), np.log(variances), 1)[0]
        assert slope == pytest.approx(2 * hurst, abs=0.1)


def test_variance_switch():
    x = raw_sample(GeneratorSpec("variance_switch", n=20000, seed=2))
    assert np.std(x[:10000]) == pytest.approx(1, rel=0.05)
    assert np.std(x[10000:]) == pytest.approx(3, rel=0.05)

    x = raw_sample(GeneratorSpec("variance_switch", n=20000, seed=2, params={"switch": 5000, "sigma2": 0.5}))
    assert np.std(x[5000:]) == pytest.approx(0.5, rel=0.05)


def test_qgaussian():
    n = 10**5
    near_normal = qgaussian_sample(1.001, seed=1, n=n)
    normal = random_generator(2).normal(size=n)
    assert scipy.stats.ks_2samp(near_normal, normal).statistic < 0.02
    assert sample_kurtosis(1.001, near_normal) == pytest.approx(0, abs=0.1)

    x = qgaussian_sample(1.5, scale=2.0, seed=3, n=n)
    assert abs(np.mean(x)) < 4 * np.std(x) / np.sqrt(n)
    assert np.array_equal(x, qgaussian_sample(1.5, scale=2.0, seed=3, n=n))
    assert not is_heavy_tailed(1.3)

    heavy = qgaussian_sample(2, seed=4, n=n)
    assert is_heavy_tailed(2)
    assert sample_kurtosis(2, heavy) is None
    assert np.all(np.isfinite(heavy))

    series = generate(GeneratorSpec("qgaussian", n=1000, seed=1, params={"q": 1.2, "scale": 0.5}))
    assert series.values.min() == 100

    with pytest.raises(ConfigError, match="'q' must be within .1, 3."):
        qgaussian_sample(3, n=10)

    with pytest.raises(ConfigError, match="'q' must be within"):
        qgaussian_sample(1, n=10)
