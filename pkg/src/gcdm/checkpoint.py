"""Self-describing binary checkpoints.

Layout (all little-endian): magic "GCDM", u16 format version, a UTF-8 echo
of the flat config text, then a named tensor table (name, dtype, shape,
raw data), and finally a CRC32 over everything after the magic. Loading
verifies magic, version, and CRC before any tensor is trusted.
"""

from __future__ import annotations

import os
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"GCDM"
FORMAT_VERSION = 1
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_DTYPE_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}


class CheckpointError(ValueError):
    pass


@dataclass
class CheckpointHeader:
    format_version: int
    config_text: str
    tensor_specs: list[tuple[str, str, tuple[int, ...]]]  # (name, dtype, shape)


def save_checkpoint(path, config_text: str, tensors: dict[str, np.ndarray]) -> None:
    chunks = [struct.pack("<H", FORMAT_VERSION)]
    config_bytes = config_text.encode("utf-8")
    chunks.append(struct.pack("<I", len(config_bytes)))
    chunks.append(config_bytes)
    chunks.append(struct.pack("<I", len(tensors)))
    for name, array in tensors.items():
        array = np.asarray(array)
        if array.dtype not in _DTYPE_CODES:
            array = array.astype(np.float64)
        name_bytes = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(name_bytes)))
        chunks.append(name_bytes)
        chunks.append(struct.pack("<BB", _DTYPE_CODES[array.dtype], array.ndim))
        chunks.append(struct.pack(f"<{array.ndim}I", *array.shape))
        chunks.append(np.ascontiguousarray(array).astype(array.dtype.newbyteorder("<")).tobytes())
    payload = b"".join(chunks)
    crc = zlib.crc32(payload) & 0xFFFFFFFF

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(payload)
        fh.write(struct.pack("<I", crc))
    os.replace(tmp, path)


def _read_exact(fh, count: int) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise CheckpointError("checkpoint is truncated")
    return data


def load_checkpoint(path) -> tuple[str, dict[str, np.ndarray]]:
    """Return (config text, tensor dict); raises CheckpointError on damage."""
    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC) + 6 or raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: not a GCDM checkpoint")
    payload, crc_bytes = raw[len(MAGIC) : -4], raw[-4:]
    (stored_crc,) = struct.unpack("<I", crc_bytes)
    if zlib.crc32(payload) & 0xFFFFFFFF != stored_crc:
        raise CheckpointError(f"{path}: CRC mismatch, file is corrupt")

    offset = 0

    def take(count):
        nonlocal offset
        if offset + count > len(payload):
            raise CheckpointError(f"{path}: checkpoint is truncated")
        out = payload[offset : offset + count]
        offset += count
        return out

    (version,) = struct.unpack("<H", take(2))
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: format version {version} unsupported")
    (config_len,) = struct.unpack("<I", take(4))
    config_text = take(config_len).decode("utf-8")
    (n_tensors,) = struct.unpack("<I", take(4))
    tensors: dict[str, np.ndarray] = {}
    for _ in range(n_tensors):
        (name_len,) = struct.unpack("<H", take(2))
        name = take(name_len).decode("utf-8")
        code, ndim = struct.unpack("<BB", take(2))
        if code not in _DTYPES:
            raise CheckpointError(f"{path}: unknown dtype code {code}")
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim))
        dtype = _DTYPES[code]
        count = int(np.prod(shape)) if ndim else 1
        data = np.frombuffer(take(count * dtype.itemsize), dtype=dtype)
        tensors[name] = data.reshape(shape).copy()
    if offset != len(payload):
        raise CheckpointError(f"{path}: trailing bytes after tensor table")
    return config_text, tensors


def read_header(path) -> CheckpointHeader:
    """Header and tensor shapes only (still CRC-verified)."""
    config_text, tensors = load_checkpoint(path)
    specs = [(name, str(a.dtype), tuple(a.shape)) for name, a in tensors.items()]
    return CheckpointHeader(FORMAT_VERSION, config_text, specs)
