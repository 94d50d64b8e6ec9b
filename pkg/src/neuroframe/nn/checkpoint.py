"""NNCK checkpoint files: named float32 parameters plus a JSON metadata block."""

import json

import numpy as np

from .. import _binio
from ..errors import FormatError

MAGIC = b"NNCK"
VERSION = 1


def dumps(state, metadata=None):
    """Serialise ``{name: array}`` (insertion order kept) and ``metadata``."""
    parts = [MAGIC, _binio.pack("II", VERSION, len(state))]
    for name, arr in state.items():
        raw = name.encode("utf-8")
        arr = np.asarray(arr)
        if arr.ndim > 255:
            raise ValueError(f"{name}: rank {arr.ndim} too large")
        parts.append(_binio.pack("I", len(raw)) + raw)
        parts.append(_binio.pack("B", arr.ndim) + _binio.pack("I" * arr.ndim, *arr.shape))
        parts.append(_binio.le_bytes(arr, "f4"))
    meta = json.dumps(metadata or {}, sort_keys=True).encode("utf-8")
    parts.append(_binio.pack("I", len(meta)) + meta)
    return b"".join(parts)


def loads(blob):
    r = _binio.Reader(blob, "NNCK")
    r.magic(MAGIC)
    r.version(VERSION)
    count = r.scalar("I", "param_count")
    state = {}
    for i in range(count):
        n = r.scalar("I", f"param[{i}].name_length")
        try:
            name = bytes(r.take(n, f"param[{i}].name")).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"NNCK.param[{i}].name", "not valid UTF-8") from exc
        if name in state:
            raise FormatError(f"NNCK.param[{i}].name", f"duplicate parameter {name!r}")
        rank = r.scalar("B", f"{name}.rank")
        shape = tuple(r.scalar("I", f"{name}.extent[{j}]") for j in range(rank))
        size = int(np.prod(shape, dtype=np.int64)) if shape else 1
        state[name] = r.array("f4", size, f"{name}.data").reshape(shape)
    n = r.scalar("I", "metadata_length")
    try:
        metadata = json.loads(bytes(r.take(n, "metadata")).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError("NNCK.metadata", f"invalid JSON: {exc}") from exc
    r.finish()
    return state, metadata


def save(path, state, metadata=None):
    _binio.write_file(path, dumps(state, metadata))


def load(path):
    return loads(_binio.read_file(path))
