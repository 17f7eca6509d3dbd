"""Single-file array container: one JSON header line plus raw float32 data.

Layout: a UTF-8 JSON object on the first line declaring, for each array, its
name, shape, dtype, and byte offset into the binary section that follows the
newline.  Arrays are stored contiguous, little-endian float32.  The header
may carry an arbitrary ``meta`` object (dataset provenance, model config).
Both dataset sequence files and model checkpoints use this container.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DataError

_MAGIC = "dlostate-rec-v1"
_DTYPE = "<f4"


def write_rec(path: str | Path, arrays: dict[str, np.ndarray], meta: dict | None = None) -> None:
    """Write named arrays (cast to float32) with an optional meta object."""
    entries = []
    blobs = []
    offset = 0
    for name, arr in arrays.items():
        # asarray, not ascontiguousarray: the latter promotes 0-d to 1-d and
        # tobytes already emits C order for any layout
        data = np.asarray(arr, dtype=np.float32)
        entries.append(
            {"name": name, "shape": list(data.shape), "dtype": _DTYPE, "offset": offset}
        )
        blob = data.tobytes()
        blobs.append(blob)
        offset += len(blob)
    header = {"format": _MAGIC, "arrays": entries, "meta": meta or {}}
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for blob in blobs:
            fh.write(blob)


def read_rec(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    """Read a container back into ``{name: array}`` plus its meta object."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"record file not found: {path}")
    with open(path, "rb") as fh:
        line = fh.readline()
        try:
            header = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise DataError(f"bad record header in {path}: {exc}") from exc
        if header.get("format") != _MAGIC:
            raise DataError(f"unrecognized record format in {path}")
        body = fh.read()
    arrays: dict[str, np.ndarray] = {}
    for entry in header.get("arrays", []):
        try:
            name = entry["name"]
            shape = tuple(int(s) for s in entry["shape"])
            offset = int(entry["offset"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed array entry in {path}: {exc}") from exc
        count = int(np.prod(shape)) if shape else 1
        end = offset + 4 * count
        if end > len(body):
            raise DataError(f"record {path} truncated: array {name!r} exceeds file size")
        arrays[name] = np.frombuffer(body[offset:end], dtype=_DTYPE).reshape(shape).copy()
    return arrays, header.get("meta", {})
