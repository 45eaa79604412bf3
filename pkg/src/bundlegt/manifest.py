"""
Run manifests. Every file written by the CLI is accompanied by a sidecar
``<file>.manifest.json`` which records how it was produced: the subcommand and its
arguments, the full run configuration, the seed of record, the package version, timing
and the SHA-256 digests of all outputs of the run.
"""

from __future__ import annotations

import json
import os
import platform
import sys
import time
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone
from typing import Any, Sequence

from . import __version__
from .utils.hashing import file_digest


__all__ = ["RunManifest", "manifest_path", "load_manifest"]

MANIFEST_SUFFIX = ".manifest.json"


def manifest_path(output_path: str) -> str:
    """Returns the sidecar path of an output file."""
    return output_path + MANIFEST_SUFFIX


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    """
    Provenance record of a CLI run.

    :param subcommand: Name of the CLI command.
    :param config: Snapshot of the merged run configuration.
    :param seed: Seed of record, ``None`` for deterministic commands.
    :param argv: Command line arguments.
    """

    subcommand: str
    config: dict[str, Any]
    seed: int | None = None
    argv: list[str] = field(default_factory=lambda: list(sys.argv[1:]))
    version: str = __version__
    python: str = platform.python_version()
    started: str = field(default_factory=_now)
    finished: str | None = None
    duration_s: float | None = None
    outputs: dict[str, str] = field(default_factory=dict)
    _t0: float = field(default_factory=time.monotonic, repr=False)

    def finish(self, outputs: Sequence[str]) -> None:
        """
        Records the end time and the digests of all output files.

        :param outputs: Paths of the files written by the run.
        """
        self.finished = _now()
        self.duration_s = round(time.monotonic() - self._t0, 3)
        self.outputs = {os.path.basename(p): file_digest(p) for p in outputs}

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        del data["_t0"]
        return data

    def write(self, outputs: Sequence[str]) -> list[str]:
        """
        Finishes the manifest and writes one sidecar per output file.

        :param outputs: Paths of the files written by the run.
        :returns: Paths of the written manifests.
        """

        self.finish(outputs)
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"
        written = []

        for path in outputs:
            target = manifest_path(path)
            with open(target, "w", encoding="utf-8") as f:
                f.write(text)
            written.append(target)

        return written


def load_manifest(path: str) -> dict[str, Any]:
    """Reads a manifest written by :meth:`RunManifest.write`."""
    with open(path, encoding="utf-8") as f:
        return json.load(f)
