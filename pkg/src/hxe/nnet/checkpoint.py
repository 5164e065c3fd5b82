"""``model.hxw`` parameter files.

Layout, little-endian::

    magic "HXW1" | version u16 | count u32
    per parameter: name length u16 | UTF-8 name | rank u8 | extents u32[rank] | f32 data
    CRC32 over everything after the magic/version/count header, u32

Parameters are written in the order given, so a model's deterministic
``named_parameters`` order makes the file byte-stable.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from hxe.core import ChecksumError, FormatError, TruncatedError, VersionError

MAGIC = b"HXW1"
VERSION = 1
_HEAD = struct.Struct("<4sHI")


def encode_params(params: dict[str, np.ndarray]) -> bytes:
    body = bytearray()
    for name, arr in params.items():
        raw = name.encode("utf-8")
        a = np.ascontiguousarray(arr, dtype="<f4")
        body += struct.pack("<H", len(raw)) + raw + struct.pack("<B", a.ndim)
        body += struct.pack(f"<{a.ndim}I", *a.shape) + a.tobytes()
    return _HEAD.pack(MAGIC, VERSION, len(params)) + bytes(body) + struct.pack("<I", zlib.crc32(body))


def decode_params(buf: bytes) -> dict[str, np.ndarray]:
    if len(buf) < 4:
        raise TruncatedError("checkpoint shorter than the magic bytes")
    if buf[:4] != MAGIC:
        raise FormatError(f"bad magic {buf[:4]!r}, expected {MAGIC!r}")
    if len(buf) < _HEAD.size + 4:
        raise TruncatedError("checkpoint shorter than header + checksum")
    _, version, count = _HEAD.unpack_from(buf)
    if version != VERSION:
        raise VersionError(f"checkpoint version {version}, this reader supports {VERSION}")
    body = buf[_HEAD.size : -4]
    (crc,) = struct.unpack_from("<I", buf, len(buf) - 4)
    if zlib.crc32(body) != crc:
        raise ChecksumError("checkpoint CRC32 mismatch")
    out: dict[str, np.ndarray] = {}
    off = 0
    try:
        for _ in range(count):
            (n,) = struct.unpack_from("<H", body, off)
            off += 2
            name = body[off : off + n].decode("utf-8")
            off += n
            (rank,) = struct.unpack_from("<B", body, off)
            off += 1
            shape = struct.unpack_from(f"<{rank}I", body, off)
            off += 4 * rank
            size = int(np.prod(shape, dtype=np.int64))
            if off + 4 * size > len(body):
                raise TruncatedError(f"parameter {name!r} runs past the end of the file")
            out[name] = np.frombuffer(body, "<f4", size, off).reshape(shape).astype(np.float32)
            off += 4 * size
    except struct.error as exc:
        raise TruncatedError(f"checkpoint body truncated: {exc}") from None
    if off != len(body):
        raise FormatError(f"{len(body) - off} unparsed bytes in checkpoint body")
    return out


def save_params(path, params: dict[str, np.ndarray]) -> None:
    Path(path).write_bytes(encode_params(params))


def load_params(path) -> dict[str, np.ndarray]:
    return decode_params(Path(path).read_bytes())
