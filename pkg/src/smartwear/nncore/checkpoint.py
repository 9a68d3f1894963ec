"""Versioned binary checkpoint container.

Layout (little-endian)::

    magic      4 bytes  b"SWCK"
    version    u16
    cfg_hash   32 bytes  sha256 of the canonical config JSON
    meta_len   u32, meta JSON (utf-8)
    n_blobs    u32
    per blob:  name_len u16, name, dtype u8 (0=f32, 1=f64), ndim u8,
               dims u32 * ndim, raw values
    crc32      u32 over every preceding byte
"""
from __future__ import annotations

import hashlib
import json
import struct
import zlib

import numpy as np

MAGIC = b"SWCK"
VERSION = 1
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_CODES = {np.dtype("float32"): 0, np.dtype("float64"): 1}


class CheckpointError(ValueError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointCrcError(CheckpointError):
    pass


def config_hash(config) -> bytes:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).digest()


def dumps(config, tensors, meta=None) -> bytes:
    meta = dict(meta or {})
    meta["config"] = config
    meta_raw = json.dumps(meta, sort_keys=True).encode()
    out = bytearray()
    out += MAGIC + struct.pack("<H", VERSION) + config_hash(config)
    out += struct.pack("<I", len(meta_raw)) + meta_raw
    out += struct.pack("<I", len(tensors))
    for name in sorted(tensors):
        arr = np.asarray(tensors[name])
        code = _CODES.get(arr.dtype)
        if code is None:
            raise CheckpointError(f"{name}: unsupported dtype {arr.dtype}")
        raw_name = name.encode()
        out += struct.pack("<H", len(raw_name)) + raw_name
        out += struct.pack("<BB", code, arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
        out += np.ascontiguousarray(arr, dtype=_DTYPES[code]).tobytes()
    out += struct.pack("<I", zlib.crc32(bytes(out)))
    return bytes(out)


def loads(raw: bytes):
    """Parse a checkpoint; returns ``(config, tensors, meta)``."""
    if len(raw) < 4 + 2 + 32 + 4 + 4 + 4 or raw[:4] != MAGIC:
        raise CheckpointError("not a checkpoint (bad magic or truncated)")
    (version,) = struct.unpack_from("<H", raw, 4)
    if version != VERSION:
        raise CheckpointVersionError(f"checkpoint version {version}, expected {VERSION}")
    (crc,) = struct.unpack_from("<I", raw, len(raw) - 4)
    if zlib.crc32(raw[:-4]) != crc:
        raise CheckpointCrcError("checkpoint CRC-32 mismatch")
    chash = raw[6:38]
    pos = 38
    (meta_len,) = struct.unpack_from("<I", raw, pos)
    pos += 4
    meta = json.loads(raw[pos:pos + meta_len].decode())
    pos += meta_len
    (count,) = struct.unpack_from("<I", raw, pos)
    pos += 4
    tensors = {}
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", raw, pos)
        pos += 2
        name = raw[pos:pos + nlen].decode()
        pos += nlen
        code, ndim = struct.unpack_from("<BB", raw, pos)
        pos += 2
        shape = struct.unpack_from(f"<{ndim}I", raw, pos)
        pos += 4 * ndim
        dtype = _DTYPES[code]
        nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        tensors[name] = np.frombuffer(raw, dtype=dtype, count=nbytes // dtype.itemsize,
                                      offset=pos).reshape(shape).astype(dtype.newbyteorder("="))
        pos += nbytes
    config = meta.pop("config")
    if config_hash(config) != chash:
        raise CheckpointError("config hash does not match stored config")
    return config, tensors, meta


def save(path, config, tensors, meta=None):
    data = dumps(config, tensors, meta)
    with open(path, "wb") as fh:
        fh.write(data)
    return data


def load(path):
    with open(path, "rb") as fh:
        return loads(fh.read())
