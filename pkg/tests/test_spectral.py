import numpy as np
import pytest

from wk_stationarity.config import DataError
from wk_stationarity.smoothing import smooth_spectrum
from wk_stationarity.spectral import (
    Acf,
    autocorrelation,
    circular_autocovariance,
    dft,
    ensemble_average,
    EnsemblePlan,
    fold,
    ft_autocorr,
    load_spectra,
    psd,
    save_spectra,
    Spectrum,
    SpectrumKind,
)


def test_autocorrelation():
    acf = autocorrelation(np.array([1.0, -1, 1, -1]))
    assert acf.values[0] == 1
    assert acf.values[1] == pytest.approx(-0.75)
    assert acf.sigma2 == 1
    assert acf.mu == 0
    assert acf.s_max == 3
    assert acf.lags.tolist() == [0, 1, 2, 3]

    rng = np.random.default_rng(42)
    x = 3 + 2 * rng.normal(size=1000)
    acf = autocorrelation(x, s_max=50)
    assert len(acf.values) == 51
    assert acf.values[0] == 1
    assert np.all(np.abs(acf.values) <= 1 + 1e-12)
    np.testing.assert_allclose(autocorrelation(x[::-1], s_max=50).values, acf.values, rtol=0, atol=1e-12)

    # Brute-force evaluation of the biased estimator
    centered = x - x.mean()
    expected = [np.sum(centered[: len(x) - s] * centered[s:]) / len(x) / np.mean(centered**2) for s in range(51)]
    np.testing.assert_allclose(acf.values, expected, rtol=0, atol=1e-12)

    with pytest.raises(DataError, match="Max lag 4 must be within"):
        autocorrelation(np.array([1.0, -1, 1, -1]), s_max=4)

    with pytest.raises(DataError, match="zero-variance"):
        autocorrelation(np.ones(10))


def test_autocorrelation_white_noise():
    n = 10**5
    x = np.random.default_rng(1).normal(size=n)
    lags = np.abs(autocorrelation(x, s_max=100).values[1:])
    assert np.all(lags < 4 / np.sqrt(n))
    assert np.sum(lags < 3 / np.sqrt(n)) >= 97


def test_dft():
    n = 64
    assert not np.any(dft(np.zeros(n)).values)

    t = np.arange(n)
    transformed = dft(np.cos(2 * np.pi * 5 * t / n), step=60)
    power = np.abs(transformed.values) ** 2
    assert power[5] == pytest.approx(n / 4)
    assert power[n - 5] == pytest.approx(n / 4)
    assert np.all(np.delete(power, [5, n - 5]) < 1e-10)
    assert transformed.frequencies[1] == pytest.approx(1 / (n * 60))
    assert transformed.normalization == "unitary"

    rng = np.random.default_rng(0)
    x = rng.normal(size=n)
    y = rng.normal(size=n)
    np.testing.assert_allclose(dft(2.5 * x - 3 * y).values, 2.5 * dft(x).values - 3 * dft(y).values, rtol=0, atol=1e-10)

    for exponent in range(7, 15):
        x = rng.normal(size=2**exponent)
        assert np.sum(np.abs(dft(x).values) ** 2) == pytest.approx(np.sum(x**2), rel=1e-10)

    with pytest.raises(DataError):
        dft(np.ones(1))


def test_psd():
    assert not np.any(psd(np.zeros(32)).values)

    n = 128
    t = np.arange(n)
    spectrum = psd(np.cos(2 * np.pi * 9 * t / n))
    assert spectrum.kind is SpectrumKind.psd
    assert len(spectrum) == n // 2 + 1
    assert spectrum.values[9] == pytest.approx(n / 2)
    assert np.all(np.delete(spectrum.values, 9) < 1e-10)
    assert spectrum.df == pytest.approx(1 / (n * 60))

    rng = np.random.default_rng(9)
    for n in (127, 128, 1000, 1001):
        x = rng.normal(size=n)
        assert np.sum(psd(x).values) == pytest.approx(np.sum(x**2), rel=1e-10)
        np.testing.assert_allclose(psd(np.roll(x, 17)).values, psd(x).values, rtol=1e-10, atol=1e-10)

    assert fold(6).tolist() == [1, 2, 2, 1]
    assert fold(7).tolist() == [1, 2, 2, 2]


def test_circular_wiener_khinchin():
    rng = np.random.default_rng(64)
    for _ in range(100):
        x = rng.normal(size=64)
        brute_force = np.array([np.mean(x * np.roll(x, -s)) for s in range(64)])
        np.testing.assert_allclose(circular_autocovariance(x), brute_force, rtol=0, atol=1e-12)
        power = np.abs(dft(x).values) ** 2
        transformed = np.fft.fft(brute_force).real
        np.testing.assert_allclose(transformed, power, rtol=1e-10, atol=1e-10 * power.max())


def test_ft_autocorr():
    # White noise limit: flat at sigma2 (folded: doubled on interior bins)
    delta = Acf(np.concatenate(([1.0], np.zeros(9))), sigma2=2.0, mu=0.0, n=10)
    spectrum = ft_autocorr(delta)
    assert spectrum.kind is SpectrumKind.ft_acf
    np.testing.assert_allclose(spectrum.values, 2.0 * fold(10))
    np.testing.assert_allclose(ft_autocorr(delta, sigma2=0.5).values, 0.5 * fold(10))

    # Transform of the full-lag biased autocorrelation is the periodogram of the demeaned series
    x = np.random.default_rng(4).normal(size=500) + 7
    expected = psd(x - x.mean()).values
    np.testing.assert_allclose(ft_autocorr(autocorrelation(x)).values, expected, rtol=0, atol=1e-9 * expected.max())

    with pytest.raises(DataError, match="Frequency grid mismatch"):
        ft_autocorr(autocorrelation(x), like=psd(x[:400]))

    with pytest.raises(DataError, match="can't transform on a grid of 100 samples"):
        ft_autocorr(autocorrelation(x), n=100)


def test_ensemble_of_one():
    x = np.random.default_rng(8).normal(size=1000) + 1.5
    plan = EnsemblePlan(1000)
    power = ensemble_average(x, plan, which="psd")
    np.testing.assert_allclose(power.values, psd(x - x.mean()).values, rtol=1e-12, atol=1e-12)

    acf = ensemble_average(x, plan, which="acf")
    direct = autocorrelation(x)
    assert acf.segments == 1
    assert acf.sigma2 == pytest.approx(direct.sigma2, rel=1e-12)
    np.testing.assert_allclose(acf.values, direct.values, rtol=0, atol=1e-12)

    with pytest.raises(DataError, match="Unknown ensemble statistic"):
        ensemble_average(x, plan, which="foo")


def test_ensemble_variance_reduction():
    x = np.random.default_rng(32).normal(size=32 * 4096)
    plan = EnsemblePlan(4096)
    averaged = ensemble_average(x, plan, which="psd").values[1:2048]
    single = [np.var(psd(s - s.mean()).values[1:2048]) for s in x.reshape(32, 4096)]
    ratio = np.var(averaged) / np.mean(single)
    assert 0.7 / 32 < ratio < 1.4 / 32


def test_ensemble_segments():
    x = np.random.default_rng(25).normal(size=25)
    acf = ensemble_average(x, EnsemblePlan(10), which="acf")
    assert acf.segments == 2
    assert acf.s_max == 9
    assert len(ensemble_average(x, EnsemblePlan(10), which="psd")) == 6

    kept = ensemble_average(x, EnsemblePlan(10, drop_remainder=False), which="acf", s_max=6)
    assert kept.segments == 3
    assert kept.s_max == 6
    assert kept.values[0] == 1

    with pytest.raises(DataError, match="exceeds series length"):
        ensemble_average(x, EnsemblePlan(30))

    with pytest.raises(DataError, match="must be >= 2"):
        EnsemblePlan(1)

    flat = np.concatenate((x[:10], np.ones(10)))
    with pytest.raises(DataError, match="segment #2 has zero variance"):
        ensemble_average(flat, EnsemblePlan(10), which="acf")


def test_ensemble_white_noise_identity():
    x = np.random.default_rng(17).normal(size=2**17)
    plan = EnsemblePlan()
    power = ensemble_average(x, plan, which="psd")
    acf = ensemble_average(x, plan, which="acf")
    assert acf.segments == 13
    ftac = ft_autocorr(acf, n=plan.segment_len, like=power)
    psd_smoothed = smooth_spectrum(power).values[5:4500]
    ftac_smoothed = smooth_spectrum(ftac).values[5:4500]
    assert np.median(np.abs(ftac_smoothed - psd_smoothed) / psd_smoothed) < 0.05


def test_spectrum(temp_folder):
    with pytest.raises(DataError, match="3 frequencies, but 2 values"):
        Spectrum(np.arange(3.0), np.ones(2))

    spectrum = Spectrum(np.arange(5) / 300, np.arange(5.0), kind="ft_acf")
    assert spectrum.kind is SpectrumKind.ft_acf
    assert str(spectrum) == "ft_acf (5 bins)"
    assert str(spectrum.with_values(np.ones(5), smoothed=True)) == "smoothed ft_acf (5 bins)"

    x = np.random.default_rng(2).normal(size=300)
    power = smooth_spectrum(psd(x), window_hz=1e-4)
    ftac = smooth_spectrum(ft_autocorr(autocorrelation(x)), window_hz=1e-4)
    save_spectra("out/sample.spectra.csv", power, ftac)
    with open("out/sample.spectra.csv") as fh:
        assert fh.readline() == "frequency_hz,value,kind,smoothed\n"

    loaded = load_spectra("out/sample.spectra.csv")
    assert sorted(k.value for k in loaded) == ["ft_acf", "psd"]
    assert loaded[SpectrumKind.psd].smoothed
    assert np.array_equal(loaded[SpectrumKind.psd].values, power.values)
    assert np.array_equal(loaded[SpectrumKind.ft_acf].frequencies, ftac.frequencies)

    with pytest.raises(DataError, match="does not exist"):
        load_spectra("out/no-such-file.csv")


def test_ensemble_variance():
    x = 2 + 3 * np.random.default_rng(13).normal(size=10500)
    acf = ensemble_average(x, EnsemblePlan(1000), which="acf")
    assert acf.segments == 10
    assert acf.sigma2 == pytest.approx(np.var(x[:10000]), rel=1e-12)
    assert acf.mu == pytest.approx(np.mean(x[:10000]), rel=1e-12)

    # Rescaling uses the squared mean RMS over segments, which never exceeds the variance
    assert acf.rescale_var <= acf.sigma2
    assert acf.rescale_var == pytest.approx(acf.sigma2, rel=0.01)
    np.testing.assert_allclose(ft_autocorr(acf).values, ft_autocorr(acf, sigma2=acf.rescale_var).values, rtol=1e-15)

    kept = ensemble_average(x, EnsemblePlan(1000, drop_remainder=False), which="acf")
    assert kept.segments == 11
    assert kept.sigma2 == pytest.approx(np.var(x), rel=1e-12)

    single = autocorrelation(x)
    assert single.rescale_var == single.sigma2
