"""Self-describing binary snapshot files.

Layout: one UTF-8 JSON header line terminated by ``\\n``, then row-major
little-endian float64 payload blocks, one per field, in the header's field
order.  The header carries the field names and shapes plus arbitrary
metadata (time, grid parameters, axis flags such as ``z_fast``), so a file
can be read back without knowing who wrote it.
"""

from __future__ import annotations

import json
import os
from typing import Any

import numpy as np

MAGIC = "vll-snapshot"
VERSION = 1


def write_snapshot(path: str | os.PathLike, fields: dict[str, np.ndarray],
                   meta: dict[str, Any] | None = None) -> None:
    """Write named arrays plus metadata to a single binary file."""
    names = list(fields.keys())
    header = {
        "format": MAGIC,
        "version": VERSION,
        "byte_order": "little",
        "dtype": "float64",
        "fields": names,
        "shapes": {k: list(np.asarray(v).shape) for k, v in fields.items()},
    }
    meta = dict(meta or {})
    for key in meta:
        if key in header:
            raise ValueError(f"metadata key {key!r} collides with a header key")
    header["meta"] = meta
    line = json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n"
    with open(path, "wb") as fh:
        fh.write(line.encode("utf-8"))
        for name in names:
            arr = np.ascontiguousarray(fields[name], dtype="<f8")
            fh.write(arr.tobytes())


def read_snapshot(path: str | os.PathLike) -> tuple[dict[str, Any], dict[str, np.ndarray]]:
    """Read a snapshot file; returns (meta, {name: array})."""
    with open(path, "rb") as fh:
        line = fh.readline()
        try:
            header = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ValueError(f"{path}: not a snapshot file (bad header)") from exc
        if header.get("format") != MAGIC:
            raise ValueError(f"{path}: not a snapshot file (magic mismatch)")
        if header.get("version") != VERSION:
            raise ValueError(f"{path}: unsupported snapshot version {header.get('version')}")
        fields = {}
        for name in header["fields"]:
            shape = tuple(header["shapes"][name])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise ValueError(f"{path}: truncated payload for field {name!r}")
            fields[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
        extra = fh.read(1)
        if extra:
            raise ValueError(f"{path}: trailing bytes after declared payload")
    return header.get("meta", {}), fields
