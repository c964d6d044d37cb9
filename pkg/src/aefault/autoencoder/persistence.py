"""Versioned binary container for trained models.

Layout (little endian)::

    b"AEFM"  u16 version  u32 len  header JSON  float64 tensors...  u32 CRC32

The header holds the config, epoch counter, best validation loss, an optional
caller metadata dict and the ordered tensor names and shapes; tensors follow as parameters then RMSprop
accumulators. The checksum covers every preceding byte.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import IntegrityError, UnsupportedVersionError
from .config import AEConfig
from .network import ModelState

MAGIC = b"AEFM"
VERSION = 1


def dumps(model: ModelState, meta: Optional[dict] = None) -> bytes:
    names = list(model.params)
    header = {
        "meta": meta or {},
        "config": model.config.to_dict(),
        "epoch": model.epoch,
        "best_val_loss": None if not np.isfinite(model.best_val_loss) else model.best_val_loss,
        "tensors": [[n, list(model.params[n].shape)] for n in names],
    }
    blob = json.dumps(header, sort_keys=True).encode()
    parts = [MAGIC, struct.pack("<HI", VERSION, len(blob)), blob]
    for store in (model.params, model.accum):
        for n in names:
            parts.append(np.ascontiguousarray(store[n], dtype="<f8").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def _checked(data: bytes) -> tuple[bytes, int]:
    if len(data) < 14 or data[:4] != MAGIC:
        raise IntegrityError("not a model file (bad magic or truncated)")
    version, hlen = struct.unpack_from("<HI", data, 4)
    if version != VERSION:
        raise UnsupportedVersionError(f"model format version {version} is not supported")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise IntegrityError("model file checksum mismatch (corrupt or truncated)")
    return body, hlen


def loads_meta(data: bytes) -> dict:
    """Caller metadata stored alongside the model (empty if none)."""
    body, hlen = _checked(data)
    try:
        return json.loads(body[10 : 10 + hlen]).get("meta", {})
    except ValueError as exc:
        raise IntegrityError(f"model file is malformed: {exc}") from exc


def loads(data: bytes) -> ModelState:
    body, hlen = _checked(data)
    try:
        header = json.loads(body[10 : 10 + hlen])
        offset = 10 + hlen
        config = AEConfig.from_dict(header["config"])
        stores = ({}, {})
        for store in stores:
            for name, shape in header["tensors"]:
                count = int(np.prod(shape)) if shape else 1
                arr = np.frombuffer(body, dtype="<f8", count=count, offset=offset)
                store[name] = arr.reshape(shape).astype(np.float64)
                offset += 8 * count
    except (ValueError, KeyError) as exc:
        raise IntegrityError(f"model file is malformed: {exc}") from exc
    if offset != len(body):
        raise IntegrityError("model file has trailing bytes")
    best = header["best_val_loss"]
    return ModelState(
        config, stores[0], stores[1], int(header["epoch"]), float("inf") if best is None else best
    )


def save(model: ModelState, path, meta: Optional[dict] = None) -> None:
    Path(path).write_bytes(dumps(model, meta))


def load(path) -> ModelState:
    return loads(Path(path).read_bytes())


def load_meta(path) -> dict:
    return loads_meta(Path(path).read_bytes())
