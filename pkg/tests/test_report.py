import pytest
import runez

from wk_stationarity.config import DataError
from wk_stationarity.report import figure_title, load_verdicts, render_reports, verdict_files


def test_figure_title():
    record = {"label": "spx", "stationary": False, "delta1": "1week", "delta2": "60min", "metric": "median_log_ratio", "distance": 0.0345678}
    record["threshold"] = 0.01
    assert figure_title(record) == "spx: non-stationary\ndelta1=1week, delta2=60min, median_log_ratio=0.03457 (threshold 0.01)"


def test_verdict_files(temp_folder):
    with pytest.raises(DataError, match="does not exist"):
        verdict_files("results")

    runez.ensure_folder("results", logger=None)
    with pytest.raises(DataError, match="run 'test' or 'scan' first"):
        verdict_files("results")

    runez.write("results/b.verdicts.jsonl", '{"label": "b"}\n\n', logger=None)
    runez.write("results/a.verdicts.jsonl", '{"label": "a"}\n{"label": "a2"}\n', logger=None)
    assert [p.name for p in verdict_files("results")] == ["a.verdicts.jsonl", "b.verdicts.jsonl"]
    assert load_verdicts("results/a.verdicts.jsonl") == [{"label": "a"}, {"label": "a2"}]
    assert load_verdicts("results/b.verdicts.jsonl") == [{"label": "b"}]

    runez.write("results/c.verdicts.jsonl", '{"label": "c"}\n{"label"\n', logger=None)
    with pytest.raises(DataError, match="invalid JSON at line 2"):
        load_verdicts("results/c.verdicts.jsonl")


def test_nothing_to_render(temp_folder, logged):
    runez.write("results/a.verdicts.jsonl", '{"label": "a", "delta2": "60min"}\n', logger=None)
    with pytest.raises(DataError, match="No verdict with spectra found"):
        render_reports("results")
    assert "has no spectra file, skipping" in logged.pop()

    runez.write("results/a.verdicts.jsonl", '{"label": "a", "delta2": "60min", "spectra": "a.spectra.csv"}\n', logger=None)
    with pytest.raises(DataError, match="does not exist"):
        render_reports("results")
