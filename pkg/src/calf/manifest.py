"""Run manifests: enough to reproduce a run and verify its outputs.

A manifest records the tool version, subcommand, master seed, the config
snapshot, and sha256 digests of every input and output file. It carries no
timestamps, and the worker count is deliberately excluded from the config
snapshot: parallelism must not change any output byte, so it is not part
of a run's identity. Files are written atomically (temp file + rename).

Output paths are stored relative to the manifest's own directory, so a
manifest does not depend on where the run directory sits; two runs with
the same inputs and config produce byte-identical manifests. Input paths
are kept exactly as the caller gave them and are resolved against the
working directory at verification time.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field

from .errors import DataError


def canonical_json(obj: object) -> str:
    """Stable serialization: sorted keys, compact separators, no NaN."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def file_digest(path: str) -> str:
    try:
        h = hashlib.sha256()
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(65536), b""):
                h.update(chunk)
        return h.hexdigest()
    except OSError as exc:
        raise DataError(f"cannot digest: {exc}", path=path) from exc


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise DataError(f"cannot write: {exc}", path=path) from exc


@dataclass(frozen=True)
class RunManifest:
    tool_version: str
    command: str
    master_seed: int
    config: dict
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "tool_version": self.tool_version,
            "command": self.command,
            "master_seed": self.master_seed,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
        }

    def write(self, path: str) -> None:
        """Write atomically, relativizing output paths to the manifest dir."""
        base = os.path.dirname(os.path.abspath(path))
        data = self.to_dict()
        data["outputs"] = {
            os.path.relpath(os.path.abspath(p), base): digest
            for p, digest in self.outputs.items()
        }
        atomic_write_text(path, canonical_json(data) + "\n")


def verify_manifest(path: str) -> list[str]:
    """Re-digest the files a manifest names; return mismatch descriptions."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot open: {exc}", path=path) from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed JSON: {exc.msg}", path=path) from exc
    base = os.path.dirname(os.path.abspath(path))
    problems = []
    for section in ("inputs", "outputs"):
        for file_path, recorded in data.get(section, {}).items():
            resolved = file_path
            if section == "outputs" and not os.path.isabs(file_path):
                resolved = os.path.join(base, file_path)
            try:
                actual = file_digest(resolved)
            except DataError:
                problems.append(f"{section}: {file_path} is missing")
                continue
            if actual != recorded:
                problems.append(
                    f"{section}: {file_path} digest {actual} != recorded {recorded}"
                )
    return problems
