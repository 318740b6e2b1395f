import numpy as np
import runez
from runez.conftest import cli, logged, temp_folder

from wk_stationarity.cli import main
from wk_stationarity.ingest import TickSeries

# These are fixtures, satisfying linters with an assert
assert logged
assert temp_folder

# Ensure common logging setup is done throughout all tests (even tests not invoking cli)
runez.log.setup(debug=True, console_format="%(levelname)s %(message)s", locations=None)

cli.default_main = main


def price_series(returns, level=100.0, label="sample", step=60):
    """Series whose lag-1 returns are exactly `returns` (up to float rounding)"""
    returns = np.asarray(returns, dtype=float)
    values = np.concatenate(([0.0], np.cumsum(returns)))
    values = values - values.min() + level
    return TickSeries(values, start="2020-01-01T00:00:00Z", step=step, label=label)


def write_prices(path, rows, header="timestamp,price"):
    lines = [header]
    lines.extend("%s,%s" % row for row in rows)
    runez.write(path, "\n".join(lines) + "\n", logger=None)
    return path
