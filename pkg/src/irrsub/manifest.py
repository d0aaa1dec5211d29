"""Run manifests: reproducibility records written alongside every output."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from importlib.metadata import PackageNotFoundError, version


def tool_version() -> str:
    try:
        return version("irrsub")
    except PackageNotFoundError:
        return "unknown"


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def atomic_write_text(path: str, text: str) -> None:
    """Write via a temp file and rename so readers never see partial output."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".irrsub-tmp-")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_manifest(out_path: str, command: str, config: dict, master_seed: int | None,
                   started: float, outputs: list[str],
                   graph_descriptor: str | None = None) -> str:
    """Write <out_path>.manifest.json describing one command invocation."""
    manifest = {
        "tool": "irrsub",
        "version": tool_version(),
        "command": command,
        "config": config,
        "master_seed": master_seed,
        "graph_descriptor": graph_descriptor,
        "started_unix": started,
        "finished_unix": time.time(),
        "outputs": {os.path.basename(p): sha256_file(p) for p in outputs if os.path.exists(p)},
    }
    path = out_path + ".manifest.json"
    atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
