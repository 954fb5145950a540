"""Experiment manifest: per-stage input/output digests, config snapshot,
wall-clock timings and versions. Artifacts are written atomically.
"""

from __future__ import annotations

import hashlib
import json
import os
import platform
import tempfile
import time
from pathlib import Path

MANIFEST_NAME = "manifest.json"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Manifest:
    def __init__(self, out_dir: Path):
        self.path = Path(out_dir) / MANIFEST_NAME
        if self.path.exists():
            with open(self.path, encoding="utf-8") as f:
                self.data = json.load(f)
        else:
            import numpy
            from . import __version__
            self.data = {
                "versions": {
                    "paraforge": __version__,
                    "numpy": numpy.__version__,
                    "python": platform.python_version(),
                },
                "config": {},
                "stages": {},
            }

    def record_stage(self, name: str, config_snapshot: dict,
                     inputs: list[Path], outputs: list[Path],
                     seconds: float) -> None:
        self.data["config"] = config_snapshot
        self.data["stages"][name] = {
            "inputs": {str(p): sha256_file(p) for p in inputs if Path(p).exists()},
            "outputs": {str(p): sha256_file(p) for p in outputs},
            "seconds": round(seconds, 3),
            "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
        }
        atomic_write_text(self.path, json.dumps(self.data, indent=2, sort_keys=True))

    def artifact_digests(self) -> dict[str, str]:
        out = {}
        for stage in self.data["stages"].values():
            out.update(stage["outputs"])
        return out
