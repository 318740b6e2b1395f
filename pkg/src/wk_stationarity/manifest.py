import datetime
import enum
import hashlib
import logging
import time

import runez

LOG = logging.getLogger(__name__)


class ArtifactType(enum.Enum):
    series = "series"
    spectra = "spectra"
    verdicts = "verdicts"
    figure = "figure"
    sweep = "sweep"


def git_blob_sha1(path):
    """Content hash of file at `path`, as `git hash-object` would compute it"""
    with open(path, "rb") as fh:
        content = fh.read()

    digest = hashlib.sha1(b"blob %d\0" % len(content))  # noqa: S324, git object naming
    digest.update(content)
    return digest.hexdigest()


class Artifact:
    def __init__(self, path, category: ArtifactType):
        self.path = runez.to_path(path)
        self.category = category

    def __repr__(self):
        return "%s %s" % (self.category.name, runez.short(self.path))

    def __eq__(self, other):
        return str(self) == str(other)

    def __hash__(self):
        return hash(str(self))

    def represented(self, base):
        return {
            "path": runez.to_path(self.path).relative_to(base).as_posix() if base in self.path.parents else str(self.path),
            "type": self.category.name,
            "sha256": runez.checksum(self.path),
        }


class RunManifest:
    """Everything needed to reproduce a run: command, inputs (with content hash), resolved config, emitted artifacts"""

    def __init__(self, command, output, config=None, options=None):
        """
        Parameters
        ----------
        command : str
            Subcommand that was run
        output : pathlib.Path
            Output folder
        config : dict | None
            Fully resolved config
        options : dict | None
            Command line options, as given
        """
        self.command = command
        self.output = runez.to_path(output)
        self.config = config or {}
        self.options = options
        self.inputs = []
        self.artifacts = []  # type: list[Artifact]
        self.started = datetime.datetime.now(tz=datetime.timezone.utc)
        self._start_time = time.perf_counter()

    def __repr__(self):
        return "%s manifest (%s)" % (self.command, runez.plural(self.artifacts, "artifact"))

    @property
    def path(self):
        return self.output / ("manifest-%s.json" % self.command)

    def add_input(self, path):
        path = runez.to_path(path)
        if path not in self.inputs:
            self.inputs.append(path)

    def add(self, path, category: ArtifactType):
        artifact = Artifact(path, category)
        if artifact not in self.artifacts:
            self.artifacts.append(artifact)

        return artifact

    def information(self):
        """
        Yields
        ------
        (str, object)
            Key/value pairs to store in manifest, `None` values are omitted
        """
        yield "command", self.command
        yield "options", self.options
        yield "tool-version", runez.get_version(__package__)
        yield "inputs", [{"path": str(p), "git-sha1": git_blob_sha1(p)} for p in self.inputs]
        yield "config", self.config
        yield "output", str(self.output)
        yield "started", self.started.strftime("%Y-%m-%dT%H:%M:%SZ")
        yield "elapsed-seconds", round(time.perf_counter() - self._start_time, 3)
        yield "artifacts", [a.represented(self.output) for a in self.artifacts]

    def represented(self):
        info = {k: v for k, v in self.information() if v is not None}
        return runez.represented_json(info)

    def write(self):
        runez.write(self.path, self.represented() + "\n", logger=LOG.debug)
        return self.path
