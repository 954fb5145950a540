"""Versioned checkpoint files shared by the translation and surrogate models.

Layout: one JSON header line (version, array manifest in a fixed order, RNG
state, free-form meta) followed by the raw little-endian array bytes in
manifest order. Fully deterministic: identical params -> identical bytes.
"""

from __future__ import annotations

import json

import numpy as np

from .autodiff import Tensor

FORMAT_VERSION = 1


class CheckpointError(Exception):
    pass


def save_checkpoint(path, params: dict[str, Tensor], meta: dict | None = None,
                    rng_state: dict | None = None) -> None:
    names = sorted(params)
    manifest = [
        {"name": n, "shape": list(params[n].data.shape), "dtype": str(params[n].data.dtype)}
        for n in names
    ]
    header = {
        "version": FORMAT_VERSION,
        "arrays": manifest,
        "rng_state": rng_state,
        "meta": meta or {},
    }
    with open(path, "wb") as f:
        f.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        for n in names:
            arr = np.ascontiguousarray(params[n].data)
            if arr.dtype.byteorder == ">":
                arr = arr.astype(arr.dtype.newbyteorder("<"))
            f.write(arr.tobytes())


def load_checkpoint(path) -> tuple[dict[str, Tensor], dict, dict | None]:
    """Returns (params, meta, rng_state)."""
    with open(path, "rb") as f:
        header_line = f.readline()
        try:
            header = json.loads(header_line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise CheckpointError(f"{path}: unreadable checkpoint header: {e}") from e
        if header.get("version") != FORMAT_VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint version {header.get('version')}")
        params: dict[str, Tensor] = {}
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            dtype = np.dtype(entry["dtype"])
            count = int(np.prod(shape)) if shape else 1
            buf = f.read(count * dtype.itemsize)
            if len(buf) != count * dtype.itemsize:
                raise CheckpointError(f"{path}: truncated array {entry['name']!r}")
            params[entry["name"]] = Tensor(np.frombuffer(buf, dtype=dtype).reshape(shape).copy())
    return params, header.get("meta", {}), header.get("rng_state")
