import contextlib
import dataclasses
import logging

import click
import runez
import yaml
from runez.render import PrettyTable

from wk_stationarity import first_stationary, scan_windows, StationarityTest, test_stationarity
from wk_stationarity.config import CALENDARS, ConfigError, counted, GAP_MODES, METRICS, PROFILES, RETURN_MODES, TIME_FORMATS, WkError, WKG
from wk_stationarity.ingest import CsvSchema, load_csv, parse_bound, save_csv, save_values, slice_by_dates, to_tick_series
from wk_stationarity.manifest import ArtifactType, RunManifest
from wk_stationarity.report import render_acf, render_reports, render_sweep
from wk_stationarity.spectral import save_spectra
from wk_stationarity.synth import generate, GeneratorSpec, raw_sample, sample_kurtosis
from wk_stationarity.validation import hurst_sweep, parsed_hurst, significance_band

LOG = logging.getLogger(__name__)


@contextlib.contextmanager
def usage_errors_exit_1():
    try:
        yield

    except click.UsageError as e:
        e.exit_code = 1
        raise


class WkGroup(click.Group):
    """Usage errors exit with code 1, library errors abort with their own exit code (2 for data errors)"""

    def make_context(self, info_name, args, parent=None, **extra):
        with usage_errors_exit_1():
            return super().make_context(info_name, args, parent=parent, **extra)

    def invoke(self, ctx):
        try:
            with usage_errors_exit_1():
                return super().invoke(ctx)

        except WkError as e:
            runez.abort(str(e), code=e.exit_code)


@runez.click.group(cls=WkGroup)
@runez.click.version()
@runez.click.color()
@click.option("--config", "-c", metavar="PATH", default="wk-stationarity.toml", show_default=True, help="Path to config file(s) to use")
@click.option("--quiet", "-q", is_flag=True, help="Turn off DEBUG logging")
@click.option("--profile", type=click.Choice(PROFILES), default="segment", show_default=True, help="Settings profile to use")
def main(config, quiet, profile):
    """
    Test stationarity of time series, via the Wiener-Khinchin theorem
    """
    level = logging.INFO if quiet else logging.DEBUG
    runez.system.AbortException = SystemExit
    runez.log.setup(
        debug=not quiet,
        level=level,
        console_format="%(levelname)s %(message)s",
        console_level=level,
        default_logger=LOG.info,
        locations=None,
    )
    WKG.grab_config(config, profile=profile)


def _applied(func, options):
    for option in reversed(options):
        func = option(func)

    return func


def output_option(func):
    return click.option("--output", "-o", metavar="PATH", help="Folder where to write artifacts (default: from config)")(func)


def input_options(func):
    """Where to read prices from, and how"""
    options = [
        click.option("--input", "-i", "input_path", metavar="PATH", required=True, help="CSV file with timestamps and prices"),
        click.option("--time-col", metavar="NAME", help="Column holding timestamps"),
        click.option("--price-col", metavar="NAME", help="Column holding prices"),
        click.option("--time-format", type=click.Choice(TIME_FORMATS), help="How timestamps are expressed"),
        click.option("--gaps", type=click.Choice(GAP_MODES), help="How missing samples are handled"),
        click.option("--step", type=int, metavar="SECONDS", help="Sampling interval"),
        click.option("--start", metavar="DATE", help="Use samples from this date on"),
        click.option("--end", metavar="DATE", help="Use samples up to this date (inclusive)"),
        click.option("--label", metavar="NAME", help="Label of series (default: input file name)"),
    ]
    return _applied(func, options)


def test_options(func):
    """Settings overriding configured [test] values"""
    options = [
        click.option("--delta1", metavar="WINDOW", help="Detrending window (eg: 1week, 1year, full, 10080)"),
        click.option("--delta2", metavar="WINDOW", help="Normalization window (eg: 60min, 10min, 1024)"),
        click.option("--ensemble-len", type=int, metavar="N", help="Ensemble segment length, in samples"),
        click.option("--smooth-hz", type=float, metavar="HZ", help="Savitzky-Golay window width"),
        click.option("--smooth-order", type=int, metavar="N", help="Savitzky-Golay polynomial order"),
        click.option("--band", metavar="LO,HI", help="Frequency band to compare, in Hz"),
        click.option("--metric", type=click.Choice(METRICS), help="Distance between smoothed spectra"),
        click.option("--threshold", type=float, metavar="TAU", help="Stationary when distance < threshold"),
        click.option("--returns", type=click.Choice(RETURN_MODES), help="lag-1 returns, or returns relative to first sample"),
        click.option("--calendar", type=click.Choice(CALENDARS), help="How wall-clock windows convert to samples"),
        click.option("--jobs", "-j", type=int, metavar="N", help="Threads to use for window scans"),
    ]
    return _applied(func, options)


def _parsed_band(text):
    if not text:
        return None

    try:
        lo, hi = (float(x) for x in text.split(","))
        return lo, hi

    except ValueError:
        raise ConfigError(f"Invalid band '{text}', expecting 'f_lo,f_hi' in Hz") from None


def _load_series(input_path, time_col, price_col, time_format, gaps, step, start, end, label):
    cfg = WKG.config.input_config(time_col=time_col, price_col=price_col, time_format=time_format, gaps=gaps, step=step)
    schema = CsvSchema(cfg.time_col, cfg.price_col, cfg.time_format)
    table = load_csv(input_path, schema)
    series = to_tick_series(table, policy=cfg.gaps, step=cfg.step, label=label or runez.to_path(input_path).stem)
    if start or end:
        lo = parse_bound(start) if start else series.start
        hi = parse_bound(end, end=True) if end else series.end
        series = slice_by_dates(series, lo, hi)

    LOG.debug("Loaded %s", series)
    return series, cfg


def _test_config(band=None, **overrides):
    return WKG.config.test_config(band=_parsed_band(band), **overrides)


def _manifest(command, output, label, input_path=None, config=None):
    folders = WKG.get_folders(base=".", output=output, label=label)
    options = click.get_current_context().params
    manifest = RunManifest(command, folders.output, config=config, options=options)
    if input_path:
        manifest.add_input(input_path)

    return folders, manifest


def _finalize(manifest):
    path = manifest.write()
    print("Wrote %s, manifest: %s" % (runez.plural(manifest.artifacts, "artifact"), runez.short(path)))


def _full_config(test_cfg=None, input_cfg=None, **extra):
    result = {"profile": WKG.config.profile}
    if input_cfg is not None:
        result["input"] = dataclasses.asdict(input_cfg)

    if test_cfg is not None:
        result["test"] = test_cfg.to_dict()

    result.update(extra)
    return result


def _write_verdicts(manifest, folders, verdicts):
    lines = []
    for verdict in verdicts:
        name = folders.formatted("{label}.d2-%s.spectra.csv" % verdict.delta2.samples)
        comparison = verdict.comparison
        path = save_spectra(folders.output / name, comparison.psd_smoothed, comparison.ftac_smoothed)
        manifest.add(path, ArtifactType.spectra)
        lines.append(verdict.to_json(spectra=name))

    path = folders.artifact("{label}.verdicts.jsonl")
    runez.write(path, "\n".join(lines) + "\n", logger=LOG.debug)
    manifest.add(path, ArtifactType.verdicts)
    return path


@main.command()
@input_options
@output_option
def ingest(input_path, time_col, price_col, time_format, gaps, step, start, end, label, output):
    """Load a price CSV, resolve gaps, and write the contiguous series"""
    series, cfg = _load_series(input_path, time_col, price_col, time_format, gaps, step, start, end, label)
    folders, manifest = _manifest("ingest", output, series.label, input_path=input_path, config=_full_config(input_cfg=cfg))
    path = save_csv(series, folders.artifact("{label}.csv"))
    manifest.add(path, ArtifactType.series)
    print("%s: %s -> %s" % (runez.bold(series), series.start.strftime("%Y-%m-%d %H:%M"), series.end.strftime("%Y-%m-%d %H:%M")))
    _finalize(manifest)


def _parsed_params(params):
    result = {}
    for text in params:
        key, _, value = text.partition("=")
        if not key or not value:
            raise ConfigError(f"Invalid parameter '{text}', expecting key=value")

        result[key.strip()] = yaml.safe_load(value)

    return result


@main.command()
@click.option("-n", "n", type=int, default=2**17, show_default=True, help="Number of samples")
@click.option("--seed", type=int, default=0, show_default=True, help="Random seed")
@click.option("--stream", type=int, default=0, show_default=True, help="Independent sub-stream to draw from")
@click.option("--param", "-p", "params", multiple=True, metavar="KEY=VALUE", help="Generator parameter (eg: hurst=0.7)")
@click.option("--level", type=float, default=100.0, show_default=True, help="Lowest price level")
@click.option("--start", default="2020-01-01T00:00:00Z", show_default=True, help="First timestamp")
@click.option("--step", type=int, default=60, show_default=True, metavar="SECONDS", help="Sampling interval")
@output_option
@click.argument("kind", type=click.Choice(sorted(GeneratorSpec.defaults)))
def synth(n, seed, stream, params, level, start, step, output, kind):
    """Generate a synthetic series, in ingest CSV format"""
    spec = GeneratorSpec(kind, n=n, seed=seed, params=_parsed_params(params), stream=stream, level=level, start=start, step=step)
    series = generate(spec)
    generator = {"kind": kind, "n": n, "seed": seed, "stream": stream, "level": level, "params": spec.resolved_params}
    folders, manifest = _manifest("synth", output, spec.label, config=_full_config(generator=generator))
    path = save_csv(series, folders.artifact("{label}.csv"))
    manifest.add(path, ArtifactType.series)
    print(runez.bold(spec))
    if kind == "qgaussian":
        kurtosis = sample_kurtosis(spec.resolved_params["q"], raw_sample(spec))
        print("excess kurtosis: %s" % ("infinite (heavy-tailed)" if kurtosis is None else "%.4g" % kurtosis))

    _finalize(manifest)


@main.command()
@input_options
@click.option("--delta1", metavar="WINDOW", help="Detrending window (eg: 1week, 1year, full, 10080)")
@click.option("--calendar", type=click.Choice(CALENDARS), help="How wall-clock windows convert to samples")
@output_option
def detrend(input_path, time_col, price_col, time_format, gaps, step, start, end, label, delta1, calendar, output):
    """Write the detrended index I*(t) = I(t) - moving average"""
    series, input_cfg = _load_series(input_path, time_col, price_col, time_format, gaps, step, start, end, label)
    cfg = _test_config(delta1=delta1, calendar=calendar)
    config = _full_config(cfg, input_cfg)
    folders, manifest = _manifest("detrend", output, series.label, input_path=input_path, config=config)
    wk = StationarityTest(series, cfg)
    path = save_values(wk.detrended, folders.artifact("{label}.detrended.csv"))
    manifest.add(path, ArtifactType.series)
    print("%s detrended with delta1=%s" % (runez.bold(series), wk.delta1))
    _finalize(manifest)


@main.command()
@input_options
@test_options
@output_option
def normalize(input_path, time_col, price_col, time_format, gaps, step, start, end, label, output, **overrides):
    """Write the normalized returns x**(t) = x*(t) / sigma(t)"""
    series, input_cfg = _load_series(input_path, time_col, price_col, time_format, gaps, step, start, end, label)
    cfg = _test_config(**overrides)
    folders, manifest = _manifest("normalize", output, series.label, input_path=input_path, config=_full_config(cfg, input_cfg))
    wk = StationarityTest(series, cfg)
    normalized = wk.normalized()
    path = save_values(normalized, folders.artifact("{label}.normalized.csv"))
    manifest.add(path, ArtifactType.series)
    hits = len(normalized.floor_hits)
    print("%s normalized with delta1=%s, delta2=%s" % (runez.bold(series), wk.delta1, wk.resolved_delta2()))
    if hits:
        print("sigma floor hit at %s" % counted(hits, "sample"))

    _finalize(manifest)


@main.command(name="test")
@input_options
@test_options
@output_option
def test_cmd(input_path, time_col, price_col, time_format, gaps, step, start, end, label, output, **overrides):
    """Test stationarity of a series, for one normalization window"""
    series, input_cfg = _load_series(input_path, time_col, price_col, time_format, gaps, step, start, end, label)
    cfg = _test_config(**overrides)
    folders, manifest = _manifest("test", output, series.label, input_path=input_path, config=_full_config(cfg, input_cfg))
    verdict = test_stationarity(series, cfg)
    _write_verdicts(manifest, folders, [verdict])
    print(verdict)
    _finalize(manifest)


def _verdict_rows(verdicts):
    for v in verdicts:
        state = runez.green("stationary") if v.stationary else runez.red("non-stationary")
        yield v.delta2.text, v.delta2.samples, "%.4g" % v.distance, v.threshold, state


@main.command()
@input_options
@test_options
@output_option
def scan(input_path, time_col, price_col, time_format, gaps, step, start, end, label, output, delta2, jobs, **overrides):
    """
    Test stationarity of a series for several normalization windows

    \b
    Windows are given as a comma separated list, for example:
        --delta2 60min,40min,20min,10min
    """  # noqa: D301
    series, input_cfg = _load_series(input_path, time_col, price_col, time_format, gaps, step, start, end, label)
    cfg = _test_config(jobs=jobs, **overrides)
    windows = runez.flattened(delta2 or cfg.delta2, split=",")
    config = _full_config(cfg, input_cfg, windows=windows)
    folders, manifest = _manifest("scan", output, series.label, input_path=input_path, config=config)
    verdicts = scan_windows(series, cfg, windows, jobs=jobs)
    _write_verdicts(manifest, folders, verdicts)
    table = PrettyTable("delta2,samples,distance,threshold,verdict")
    table.add_rows(*_verdict_rows(verdicts))
    print(table)
    best = first_stationary(verdicts)
    print("Max stationary window for %s: %s" % (runez.bold(series.label), runez.green(str(best)) if best else runez.red("none")))
    _finalize(manifest)


@main.command()
@click.option("--from", "source", metavar="PATH", required=True, help="Folder with artifacts from 'test' or 'scan'")
@output_option
def report(source, output):
    """Render paired-spectrum plots (SVG) from previously emitted artifacts"""
    folders, manifest = _manifest("report", output or source, "report", config=_full_config())
    for path in sorted(runez.to_path(source).glob("*.verdicts.jsonl")):
        manifest.add_input(path)

    for path in render_reports(source, folders.output):
        manifest.add(path, ArtifactType.figure)
        print("Rendered %s" % runez.short(path))

    _finalize(manifest)


@main.command()
@click.option("--hurst", metavar="LIST", help="Comma separated Hurst exponents (default: 0.1 to 0.9, by 0.1)")
@click.option("-n", "n", type=int, default=2**17, show_default=True, help="Number of samples generated per exponent")
@click.option("--ensemble-len", type=int, metavar="N", help="Ensemble segment length (default: from config)")
@click.option("--seed", type=int, default=0, show_default=True, help="Random seed")
@click.option("--window", type=int, default=50, show_default=True, help="Moving average window smoothing the difference, in bins")
@click.option("--max-lag", type=int, default=100, show_default=True, help="Largest lag shown on autocorrelation plot")
@output_option
def validate(hurst, n, ensemble_len, seed, window, max_lag, output):
    """Sweep fractional Gaussian noise over Hurst exponents, and plot PSD vs FT of autocorrelation agreement"""
    cfg = _test_config(ensemble_len=ensemble_len)
    hurst_values = parsed_hurst(hurst)
    sweep_cfg = {"hurst": list(hurst_values), "n": n, "ensemble_len": cfg.ensemble_len, "seed": seed, "window": window}
    folders, manifest = _manifest("validate", output, "fgn-sweep", config=_full_config(sweep=sweep_cfg))
    sweep = hurst_sweep(hurst_values, n=n, segment_len=cfg.ensemble_len, seed=seed, window=window)
    manifest.add(sweep.save(folders.artifact("{label}.csv")), ArtifactType.sweep)
    manifest.add(render_sweep(sweep, folders.artifact("{label}.svg")), ArtifactType.figure)
    manifest.add(render_acf(sweep, folders.artifact("{label}.acf.svg"), max_lag=max_lag), ArtifactType.figure)
    table = PrettyTable("H,median % difference")
    table.add_rows(*(("%g" % h, "%.3g" % (100 * m)) for h, m in zip(sweep.hurst, sweep.medians)))
    print(table)
    print("ACF significance band: ±%.4g (%s)" % (significance_band(sweep.samples_used), counted(sweep.samples_used, "sample")))
    _finalize(manifest)


@main.command()
def diagnostics():
    """Show diagnostics info"""
    with runez.Anchored("."):
        config = WKG.config.represented()
        print(PrettyTable.two_column_diagnostics(_diagnostics(), config))


def _diagnostics():
    yield "config", WKG.config.config_files_report()
    yield "profile", WKG.config.profile
    yield from runez.SYS_INFO.diagnostics()


if __name__ == "__main__":
    from wk_stationarity.cli import main

    main()
