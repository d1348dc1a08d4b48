"""Self-describing binary checkpoint container.

Layout: a versioned magic string, an 8-byte little-endian header length,
a JSON header (architecture tag, config, vocabulary hash, parameter
manifest), then the raw float64 little-endian parameter arrays in
manifest order. Serialization is canonical (sorted JSON keys), so
identical models produce byte-identical files.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DataFormatError

__all__ = ["Checkpoint", "save_checkpoint", "load_checkpoint"]

MAGIC = b"anticipate-checkpoint-v1\n"


@dataclass(frozen=True)
class Checkpoint:
    arch: str
    config: dict
    vocab_hash: str
    params: dict[str, np.ndarray]


def save_checkpoint(
    path: str | Path,
    arch: str,
    config: dict,
    vocab_hash: str,
    params: dict[str, np.ndarray],
) -> None:
    manifest = [[name, list(p.shape)] for name, p in params.items()]
    header = {
        "arch": arch,
        "config": config,
        "vocab_hash": vocab_hash,
        "dtype": "<f8",
        "params": manifest,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header_bytes)))
        fh.write(header_bytes)
        for p in params.values():
            fh.write(np.ascontiguousarray(p, dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    blob = path.read_bytes()
    if not blob.startswith(MAGIC):
        raise DataFormatError(f"{path}: not a recognized checkpoint (bad magic string)")
    offset = len(MAGIC)
    (header_len,) = struct.unpack_from("<Q", blob, offset)
    offset += 8
    try:
        header = json.loads(blob[offset : offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"{path}: corrupt checkpoint header ({exc})") from exc
    offset += header_len
    params: dict[str, np.ndarray] = {}
    for name, shape in header["params"]:
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if offset + nbytes > len(blob):
            raise DataFormatError(f"{path}: truncated checkpoint (missing data for {name!r})")
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).reshape(shape)
        params[name] = arr.astype(np.float64)  # writable copy in native order
        offset += nbytes
    if offset != len(blob):
        raise DataFormatError(f"{path}: {len(blob) - offset} trailing bytes after parameters")
    return Checkpoint(header["arch"], header["config"], header["vocab_hash"], params)
