"""
Paired-spectrum figures (log-log, PSD and transformed autocorrelation overlaid), rendered from emitted artifacts only.
Also renders the fGn validation sweep: Hurst exponent x frequency map, and autocorrelations with their iid significance band.
"""

import json
import logging

import numpy as np
import runez

from wk_stationarity.config import DataError
from wk_stationarity.spectral import load_spectra, SpectrumKind
from wk_stationarity.validation import significance_band

LOG = logging.getLogger(__name__)
SVG_HASHSALT = "wk-stationarity"
VERDICTS_SUFFIX = ".verdicts.jsonl"


def load_verdicts(path):
    """
    Parameters
    ----------
    path : str | pathlib.Path
        JSONL file, as written by the `test` or `scan` commands

    Returns
    -------
    list[dict]
        One record per verdict
    """
    path = runez.to_path(path)
    records = []
    with open(path) as fh:
        for i, line in enumerate(fh, start=1):
            line = line.strip()
            if line:
                try:
                    records.append(json.loads(line))

                except json.JSONDecodeError as e:
                    raise DataError(f"{runez.short(path)}: invalid JSON at line {i}: {e}") from e

    return records


def verdict_files(folder):
    folder = runez.to_path(folder)
    if not folder.is_dir():
        raise DataError(f"Folder {runez.short(folder)} does not exist")

    files = sorted(folder.glob("*" + VERDICTS_SUFFIX))
    if not files:
        raise DataError(f"No *{VERDICTS_SUFFIX} files in {runez.short(folder)}, run 'test' or 'scan' first")

    return files


def figure_title(record):
    state = "stationary" if record.get("stationary") else "non-stationary"
    return "%s: %s\ndelta1=%s, delta2=%s, %s=%.4g (threshold %s)" % (
        record.get("label"),
        state,
        record.get("delta1"),
        record.get("delta2"),
        record.get("metric"),
        record.get("distance"),
        record.get("threshold"),
    )


def _positive(spectrum):
    keep = (spectrum.frequencies > 0) & (spectrum.values > 0)
    return spectrum.frequencies[keep], spectrum.values[keep]


def render_figure(record, spectra, path):
    """Render one SVG: smoothed PSD and smoothed FT of the ACF vs frequency, on base-10 log-log axes"""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    psd = spectra.get(SpectrumKind.psd)
    ftac = spectra.get(SpectrumKind.ft_acf)
    if psd is None or ftac is None:
        raise DataError(f"Spectra for {record.get('label')} must hold both 'psd' and 'ft_acf'")

    with matplotlib.rc_context({"svg.hashsalt": SVG_HASHSALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(8, 5))
        ax.loglog(*_positive(psd), label="PSD", color="#1f77b4")
        ax.loglog(*_positive(ftac), label="FT of autocorrelation", color="#d62728", linestyle="--")
        band = record.get("band")
        if band and band[0] > 0:
            ax.axvspan(band[0], band[1], color="gray", alpha=0.08, label="compared band")

        ax.set_title(figure_title(record), fontsize=10)
        ax.set_xlabel("Frequency (Hz)")
        ax.set_ylabel("Power")
        ax.grid(True, which="both", linestyle=":", alpha=0.4)
        ax.legend(loc="lower left")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)

    return path


def render_reports(folder, output=None):
    """
    Parameters
    ----------
    folder : str | pathlib.Path
        Folder holding `*.verdicts.jsonl` files, and the spectra CSV files they refer to
    output : str | pathlib.Path | None
        Where to write SVG files (default: same as `folder`)

    Returns
    -------
    list[pathlib.Path]
        Rendered SVG files, one per verdict record
    """
    folder = runez.to_path(folder)
    output = runez.to_path(output) if output else folder
    sources = verdict_files(folder)
    runez.ensure_folder(output, logger=None)
    rendered = []
    for path in sources:
        for record in load_verdicts(path):
            name = record.get("spectra")
            if not name:
                LOG.warning("Verdict %s delta2=%s in %s has no spectra file, skipping", record.get("label"), record.get("delta2"), path.name)
                continue

            spectra = load_spectra(folder / name)
            target = output / name.replace(".spectra.csv", ".svg")
            rendered.append(render_figure(record, spectra, target))
            LOG.debug("Rendered %s", runez.short(target))

    if not rendered:
        raise DataError(f"No verdict with spectra found in {runez.short(folder)}")

    return rendered


def render_sweep(sweep, path):
    """Render the Hurst exponent x frequency map of the smoothed percentage difference (SVG)"""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": SVG_HASHSALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(8, 5))
        mesh = ax.pcolormesh(sweep.frequencies, sweep.hurst, 100 * sweep.pct_diff, shading="nearest", cmap="viridis")
        ax.set_xscale("log")
        ax.set_xlabel("Frequency (Hz)")
        ax.set_ylabel("Hurst exponent H")
        ax.set_title("fGn: PSD vs FT of autocorrelation, moving average over %s bins" % sweep.window, fontsize=10)
        fig.colorbar(mesh, ax=ax, label="Percentage difference (%)")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)

    return path


def render_acf(sweep, path, max_lag=100):
    """Render ensemble autocorrelations (lags 1..max_lag) of each swept exponent, with the iid significance band (SVG)"""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    band = significance_band(sweep.samples_used)
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASHSALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(8, 5))
        colors = plt.get_cmap("viridis")(np.linspace(0, 1, len(sweep.hurst)))
        for hurst, acf, color in zip(sweep.hurst, sweep.acfs, colors):
            lags = acf.lags[1 : max_lag + 1]
            ax.plot(lags, acf.values[1 : max_lag + 1], color=color, label="H=%g" % hurst)

        ax.axhspan(-band, band, color="gray", alpha=0.2, label="±%.3g (95%% iid band)" % band)
        ax.axhline(0, color="gray", linewidth=0.8)
        ax.set_xlabel("Lag (samples)")
        ax.set_ylabel("Autocorrelation")
        ax.set_title("Ensemble autocorrelation of fGn (%s samples)" % sweep.samples_used, fontsize=10)
        ax.legend(loc="upper right", fontsize=8)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)

    return path
