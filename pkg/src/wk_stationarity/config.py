import dataclasses
import logging
import os
from typing import ClassVar, Optional, Tuple, Union

import runez
import yaml

try:
    import tomllib

except ImportError:  # pragma: no cover, python < 3.11
    import tomli as tomllib

LOG = logging.getLogger(__name__)

DEFAULT_CONFIG = """
[folders]
output = "out"

[input]
time_col = "timestamp"
price_col = "price"
time_format = "iso8601"
gaps = "compact"
step = 60

[test]
delta1 = "1week"
delta2 = "60min"
ensemble_len = 10000
smooth_hz = 3.97e-5
smooth_order = 1
metric = "median_log_ratio"
threshold = 0.01
returns = "lag1"
calendar = "auto"
drop_remainder = true
band_skip_low = 5
band_skip_high = 0.1
jobs = 1

# Full-history runs detrend over one year (segments use one week)
[full.test]
delta1 = "1year"
"""

PROFILES = ("segment", "full")
METRICS = ("median_log_ratio", "mean_pct_diff")
RETURN_MODES = ("lag1", "base")
CALENDARS = ("auto", "continuous", "trading")
TIME_FORMATS = ("iso8601", "epoch_s", "epoch_ms")
GAP_MODES = ("compact", "ffill", "error")


class WkError(Exception):
    """Base class for all errors reported by this package"""

    exit_code = 1


class ConfigError(WkError):
    """Invalid configuration (unknown key, type mismatch, invalid value)"""

    exit_code = 1


class DataError(WkError):
    """Input data can't be processed (unparseable row, gap, insufficient samples...)"""

    exit_code = 2


def counted(countable, singular):
    """Like runez.plural(), but with the exact count (runez abbreviates large counts, eg: 20000 -> 20K)"""
    count = len(countable) if hasattr(countable, "__len__") else int(countable)
    return "%s %s" % (count, singular if count == 1 else runez.plural(singular))


def _is_int(value):
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _is_window(value):
    return _is_int(value) or isinstance(value, str)


def _is_band(value):
    return isinstance(value, (list, tuple)) and len(value) == 2 and all(_is_number(x) for x in value)


@dataclasses.dataclass(frozen=True)
class TestConfig:
    """
    Settings of one stationarity test

    Windows are kept as given ("60min", "1week", 1024, "full"), and resolved to sample counts against the series being tested.
    `band` is an optional [f_lo, f_hi] interval in Hz, when not given: the lowest `band_skip_low` bins and the top
    `band_skip_high` fraction of bins are excluded.
    """

    __test__: ClassVar[bool] = False  # Not a pytest test class

    delta1: Union[str, int] = "1week"
    delta2: Union[str, int] = "60min"
    ensemble_len: int = 10000
    smooth_hz: float = 3.97e-5
    smooth_order: int = 1
    band: Optional[Tuple[float, float]] = None
    metric: str = "median_log_ratio"
    threshold: float = 0.01
    returns: str = "lag1"
    calendar: str = "auto"
    drop_remainder: bool = True
    s_max: Optional[int] = None
    band_skip_low: int = 5
    band_skip_high: float = 0.1
    jobs: int = 1

    validators: ClassVar[dict] = {
        "delta1": (_is_window, "a window length"),
        "delta2": (_is_window, "a window length"),
        "ensemble_len": (_is_int, "an integer"),
        "smooth_hz": (_is_number, "a number"),
        "smooth_order": (_is_int, "an integer"),
        "band": (_is_band, "a [f_lo, f_hi] pair"),
        "metric": (lambda x: x in METRICS, "one of %s" % ", ".join(METRICS)),
        "threshold": (_is_number, "a number"),
        "returns": (lambda x: x in RETURN_MODES, "one of %s" % ", ".join(RETURN_MODES)),
        "calendar": (lambda x: x in CALENDARS, "one of %s" % ", ".join(CALENDARS)),
        "drop_remainder": (lambda x: isinstance(x, bool), "a boolean"),
        "s_max": (_is_int, "an integer"),
        "band_skip_low": (_is_int, "an integer"),
        "band_skip_high": (_is_number, "a number"),
        "jobs": (_is_int, "an integer"),
    }

    def __post_init__(self):
        for field in dataclasses.fields(self):
            value = getattr(self, field.name)
            if value is not None or field.name not in ("band", "s_max"):
                is_valid, expected = self.validators[field.name]
                if not is_valid(value):
                    raise ConfigError(f"Invalid value for '{field.name}': {value!r}, expecting {expected}")

        if self.band is not None:
            object.__setattr__(self, "band", (float(self.band[0]), float(self.band[1])))
            if not 0 <= self.band[0] < self.band[1]:
                raise ConfigError(f"Invalid value for 'band': {list(self.band)}, f_lo must be < f_hi")

        self._check_positive("threshold", "ensemble_len", "smooth_hz", "jobs")
        if self.ensemble_len < 2:
            raise ConfigError(f"Invalid value for 'ensemble_len': {self.ensemble_len}, must be >= 2")

        if self.smooth_order < 0:
            raise ConfigError(f"Invalid value for 'smooth_order': {self.smooth_order}, must be >= 0")

        if self.band_skip_low < 0 or not 0 <= self.band_skip_high < 1:
            raise ConfigError("Invalid band skip settings: 'band_skip_low' must be >= 0, 'band_skip_high' within [0, 1)")

    def _check_positive(self, *names):
        for name in names:
            value = getattr(self, name)
            if value <= 0:
                raise ConfigError(f"Invalid value for '{name}': {value}, must be > 0")

    def with_overrides(self, **overrides):
        """
        Parameters
        ----------
        **overrides
            Values to override, `None` values are ignored (ie: CLI flag not given)

        Returns
        -------
        TestConfig
            New config, with given overrides applied
        """
        overrides = {k: v for k, v in overrides.items() if v is not None}
        unknown = sorted(set(overrides) - set(self.validators))
        if unknown:
            raise ConfigError(f"Unknown setting(s): {', '.join(unknown)}")

        return dataclasses.replace(self, **overrides)

    def to_dict(self):
        result = dataclasses.asdict(self)
        if self.band is not None:
            result["band"] = list(self.band)

        return result


@dataclasses.dataclass(frozen=True)
class InputConfig:
    """How to read price CSV files"""

    time_col: str = "timestamp"
    price_col: str = "price"
    time_format: str = "iso8601"
    gaps: str = "compact"
    step: int = 60

    def __post_init__(self):
        if self.time_format not in TIME_FORMATS:
            raise ConfigError(f"Invalid value for 'time_format': {self.time_format!r}, expecting one of {', '.join(TIME_FORMATS)}")

        if self.gaps not in GAP_MODES:
            raise ConfigError(f"Invalid value for 'gaps': {self.gaps!r}, expecting one of {', '.join(GAP_MODES)}")

        if not _is_int(self.step) or self.step <= 0:
            raise ConfigError(f"Invalid value for 'step': {self.step!r}, expecting a positive integer (seconds)")

    def with_overrides(self, **overrides):
        return dataclasses.replace(self, **{k: v for k, v in overrides.items() if v is not None})


KNOWN_SECTIONS = {
    "folders": {"output"},
    "input": {f.name for f in dataclasses.fields(InputConfig)},
    "test": set(TestConfig.validators),
}


class Config:
    """Overall config, the 1st found (most specific) setting wins"""

    def __init__(self, paths=None, profile=None):
        """
        Parameters
        ----------
        paths : str | list | None
            Path(s) to config file(s)
        profile : str | None
            Profile to use ('segment' or 'full'), settings under [<profile>] win over top-level ones
        """
        self.paths = runez.flattened(paths, split=",")
        self.profile = profile or "segment"
        if self.profile not in PROFILES:
            raise ConfigError(f"Invalid profile '{self.profile}', expecting one of {', '.join(PROFILES)}")

        self.default = ConfigSource("default config", self.parsed_toml(DEFAULT_CONFIG, "default config"))
        self._sources = []  # type: list[ConfigSource]
        self.by_path = {}
        for path in self.paths:
            self.load(path)

    def __repr__(self):
        return "%s [%s]" % (runez.plural(self._sources, "config source"), self.profile)

    def completions(self, **given):
        res = {"profile": self.profile}
        res.update(given)
        return res

    def get_value(self, *key, by_profile=True):
        """
        Parameters
        ----------
        key : str | tuple
            Key to look up, tuple represents hierarchy, ie: a/b -> (a, b)
        by_profile : bool
            If True, value can be configured by profile

        Returns
        -------
            Associated value, if any
        """
        value, _ = self.get_entry(*key, by_profile=by_profile)
        return value

    def get_entry(self, *key, by_profile=True):
        """
        Parameters
        ----------
        key : str | tuple
            Key to look up, tuple represents hierarchy, ie: a/b -> (a, b)
        by_profile : bool
            If True, value can be configured by profile

        Returns
        -------
        (str | int | float | bool | dict | list | None, ConfigSource | None)
            Associated value (if any), together with the source that defined it
        """
        keys = ((self.profile, *key), key) if by_profile else (key,)
        for k in keys:
            for source in self._sources:
                v = source.get_value(k)
                if v is not None:
                    return v, source

        for k in keys:
            v = self.default.get_value(k)
            if v is not None:
                return v, self.default

        return None, None

    def test_config(self, **overrides):
        """
        Parameters
        ----------
        **overrides
            Settings given on the command line (these win over configured values)

        Returns
        -------
        TestConfig
            Fully resolved test settings
        """
        values = {}
        for name in TestConfig.validators:
            value = self.get_value("test", name)
            if value is not None:
                values[name] = value

        return TestConfig(**values).with_overrides(**overrides)

    def input_config(self, **overrides):
        values = {}
        for name in KNOWN_SECTIONS["input"]:
            value = self.get_value("input", name)
            if value is not None:
                values[name] = value

        return InputConfig(**values).with_overrides(**overrides)

    def config_files_report(self):
        """One-liner describing which config files are used, if any"""
        if self._sources:
            return "Config files: %s" % runez.joined(self._sources, delimiter=", ")

        return "no config"

    def represented(self):
        """Textual (yaml) representation of all configs"""
        result = []
        for source in runez.flattened(self._sources, self.default):
            result.append("%s:" % runez.bold(source))
            result.append(source.represented())

        return runez.joined(result, delimiter="\n")

    @staticmethod
    def parsed_toml(text, source):
        try:
            return tomllib.loads(text)

        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"Invalid toml in {runez.short(source)}: {e}") from e

    @staticmethod
    def parsed_yaml(text, source):
        try:
            return yaml.safe_load(text) or {}

        except yaml.YAMLError as e:
            raise ConfigError(f"Invalid yaml in {runez.short(source)}: {e}") from e

    def parsed_file(self, path):
        with open(path) as fh:
            text = fh.read()

        if path.suffix in (".yml", ".yaml"):
            data = self.parsed_yaml(text, path)

        else:
            data = self.parsed_toml(text, path)

        if not isinstance(data, dict):
            raise ConfigError(f"Invalid config in {runez.short(path)}: expecting a table of settings")

        return data

    def load(self, path, base=None):
        if path:
            front = False
            if path.startswith("+"):
                front = True
                path = path[1:]

            path = runez.resolved_path(path, base=base)
            path = runez.to_path(path)
            if path.exists():
                data = self.parsed_file(path)
                source = ConfigSource(path, data)
                source.validate()
                if front:
                    self._sources.insert(0, source)

                else:
                    self._sources.append(source)

                self.by_path[str(path)] = source
                for include in runez.flattened(source.get_value("include"), split=True):
                    self.load(include, base=path.parent)

            elif base is not None:
                raise ConfigError(f"Included config file {runez.short(path)} does not exist")

            else:
                LOG.debug("Config file %s does not exist, ignoring", runez.short(path))


class ConfigSource:
    """Settings from one config file"""

    def __init__(self, source, data):
        self.source = source
        self.data = data

    def __repr__(self):
        return runez.short(self.source)

    def represented(self):
        """Textual (yaml) representation of this config"""
        return yaml.safe_dump(self.data, width=140)

    def validate(self):
        """Unknown sections or keys are a hard error (typos would otherwise be silently ignored)"""
        for key, value in self.data.items():
            if key == "include":
                continue

            if key in PROFILES:
                if not isinstance(value, dict):
                    raise ConfigError(f"{self}: profile '{key}' must be a table of settings")

                for section, settings in value.items():
                    self._validate_section(f"{key}.{section}", section, settings)

            else:
                self._validate_section(key, key, value)

    def _validate_section(self, title, section, settings):
        allowed = KNOWN_SECTIONS.get(section)
        if allowed is None:
            raise ConfigError(f"{self}: unknown config section '{title}'")

        if not isinstance(settings, dict):
            raise ConfigError(f"{self}: section '{title}' must be a table of settings")

        unknown = sorted(set(settings) - allowed)
        if unknown:
            raise ConfigError(f"{self}: unknown key(s) in '{title}': {', '.join(unknown)}")

    def get_value(self, key):
        """
        Parameters
        ----------
        key : str | tuple
            Key to look up, tuple represents hierarchy, ie: a/b -> (a, b)

        Returns
        -------
        str | int | float | bool | dict | list | None
            Associated value, if any
        """
        return self._deep_get(self.data, key)

    def _deep_get(self, data, key):
        if not key or not isinstance(data, dict):
            return None

        if isinstance(key, tuple):
            if len(key) > 1:
                value = self._deep_get(data, key[0])
                return self._deep_get(value, key[1:])

            key = key[0]

        value = data.get(key)
        if value is not None:
            return value


def load_config(path=None, profile=None, **overrides):
    """
    Parameters
    ----------
    path : str | None
        Config file(s) to load (comma separated), empty or missing file yields documented defaults
    profile : str | None
        'segment' (default) or 'full'
    **overrides
        Settings given on the command line, these win over values from config files

    Returns
    -------
    TestConfig
        Fully resolved test settings
    """
    return Config(path, profile=profile).test_config(**overrides)


class Folders:
    """Where artifacts are written, `{profile}` and `{label}` may be used in configured paths"""

    def __init__(self, config: Config, base=None, output=None, label=None):
        self.config = config
        self.base_folder = runez.resolved_path(base)
        self.completions = config.completions(label=label or "series")
        output = output or config.get_value("folders", "output", by_profile=False)
        output = self.formatted(os.path.expandvars(output))
        self.output = runez.to_path(runez.resolved_path(output, base=self.base_folder))

    def __repr__(self):
        return runez.short(self.output)

    def formatted(self, text):
        if text:
            text = text.format(**self.completions)

        return text

    def artifact(self, name):
        return self.output / self.formatted(name)


class WKG:
    """
    Global settings for wk-stationarity

    Attributes
    ----------
    config : Config
        Global configuration (as loaded by CLI)
    """

    config = Config()

    @classmethod
    def grab_config(cls, paths=None, profile=None):
        cls.config = Config(paths, profile=profile)

    @classmethod
    def get_folders(cls, base=None, output=None, label=None):
        config = cls.config or Config()
        return Folders(config, base=base, output=output, label=label)
