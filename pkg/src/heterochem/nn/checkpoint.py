"""Binary checkpoint container.

Layout::

    b"HETENC1"  version:u8  manifest_len:u32le  manifest(json, utf-8)  payloads

The manifest holds free-form metadata plus an ordered tensor list of
``{"name", "shape", "dtype"}``; payloads follow in that order as
little-endian float32.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"HETENC1"
VERSION = 1


class CorruptCheckpoint(ValueError):
    pass


class VersionMismatch(ValueError):
    pass


def dumps(tensors: dict[str, np.ndarray], meta: dict) -> bytes:
    entries = [
        {"name": name, "shape": list(arr.shape), "dtype": "<f4"} for name, arr in tensors.items()
    ]
    manifest = json.dumps({"meta": meta, "tensors": entries}, sort_keys=True).encode("utf-8")
    parts = [MAGIC, bytes([VERSION]), struct.pack("<I", len(manifest)), manifest]
    for arr in tensors.values():
        parts.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return b"".join(parts)


def loads(blob: bytes) -> tuple[dict[str, np.ndarray], dict]:
    if len(blob) < len(MAGIC) + 5 or blob[: len(MAGIC)] != MAGIC:
        raise CorruptCheckpoint("bad magic string; not a heteroencoder checkpoint")
    version = blob[len(MAGIC)]
    if version != VERSION:
        raise VersionMismatch(f"checkpoint version {version}, expected {VERSION}")
    off = len(MAGIC) + 1
    (mlen,) = struct.unpack_from("<I", blob, off)
    off += 4
    try:
        manifest = json.loads(blob[off : off + mlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptCheckpoint(f"unreadable manifest: {exc}") from exc
    off += mlen
    tensors = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = 4 * count
        if off + nbytes > len(blob):
            raise CorruptCheckpoint(f"truncated payload for tensor {entry['name']}")
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=off).reshape(shape)
        tensors[entry["name"]] = arr.astype(np.float32)
        off += nbytes
    if off != len(blob):
        raise CorruptCheckpoint("trailing bytes after last tensor")
    return tensors, manifest["meta"]


def save(path, tensors: dict[str, np.ndarray], meta: dict) -> None:
    Path(path).write_bytes(dumps(tensors, meta))


def load(path) -> tuple[dict[str, np.ndarray], dict]:
    return loads(Path(path).read_bytes())
