"""
Versioned binary checkpoints.

Layout (little-endian):
    b"SPCK" | u32 format version | u32 header length | JSON header | tensor data

The header carries the config snapshot, progress counters, RNG state and a
tensor index (name, shape, dtype, offset, nbytes) into the data section.
Writes go to a temporary file in the same directory and are renamed into
place.
"""

import json
import os
import struct
import tempfile
from typing import Any, Dict, Tuple

import numpy as np

from shared.errors import CheckpointError

MAGIC = b"SPCK"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<4sII")


def save_checkpoint(path: str, header: Dict[str, Any], tensors: Dict[str, np.ndarray]) -> str:
    """Atomically write ``tensors`` plus ``header``; returns ``path``."""
    index, chunks, offset = [], [], 0
    for name in sorted(tensors):
        arr = np.asarray(tensors[name], order="C")
        dtype = arr.dtype.newbyteorder("<")
        data = arr.astype(dtype, copy=False).tobytes()
        index.append({"name": name, "shape": list(arr.shape), "dtype": dtype.str, "offset": offset, "nbytes": len(data)})
        chunks.append(data)
        offset += len(data)

    body = dict(header)
    body["format_version"] = FORMAT_VERSION
    body["tensors"] = index
    encoded = json.dumps(body, sort_keys=True).encode("utf-8")

    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix=".ckpt-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(_PREFIX.pack(MAGIC, FORMAT_VERSION, len(encoded)))
            f.write(encoded)
            for chunk in chunks:
                f.write(chunk)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_path, path)
    except OSError as e:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise CheckpointError(f"failed to write checkpoint {path}: {e}") from e
    return path


def load_checkpoint(path: str) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    """Read a checkpoint written by ``save_checkpoint``."""
    if not os.path.isfile(path):
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e

    if len(raw) < _PREFIX.size:
        raise CheckpointError(f"{path}: truncated checkpoint")
    magic, version, header_len = _PREFIX.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic {magic!r})")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")

    start = _PREFIX.size
    try:
        header = json.loads(raw[start:start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: corrupt header") from e

    data_start = start + header_len
    tensors = {}
    for entry in header.get("tensors", []):
        begin = data_start + entry["offset"]
        end = begin + entry["nbytes"]
        if end > len(raw):
            raise CheckpointError(f"{path}: tensor '{entry['name']}' is truncated")
        arr = np.frombuffer(raw[begin:end], dtype=np.dtype(entry["dtype"]))
        tensors[entry["name"]] = arr.reshape(entry["shape"]).copy()
    return header, tensors
