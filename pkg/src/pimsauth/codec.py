"""Length-prefixed concatenation used by every composite wire type."""

from __future__ import annotations

import struct

from .errors import DecodeError

_LEN = struct.Struct(">I")


def pack(*parts: bytes) -> bytes:
    out = bytearray()
    for part in parts:
        out += _LEN.pack(len(part))
        out += part
    return bytes(out)


def unpack(data: bytes, count: int | None = None) -> list[bytes]:
    """Split a :func:`pack` output back into its parts.

    When ``count`` is given the number of parts must match exactly.
    """
    parts = []
    view = memoryview(data)
    pos = 0
    while pos < len(view):
        if pos + 4 > len(view):
            raise DecodeError("truncated length prefix")
        (size,) = _LEN.unpack_from(view, pos)
        pos += 4
        if pos + size > len(view):
            raise DecodeError("truncated field")
        parts.append(bytes(view[pos:pos + size]))
        pos += size
    if count is not None and len(parts) != count:
        raise DecodeError(f"expected {count} fields, got {len(parts)}")
    return parts


def u32(value: int) -> bytes:
    return _LEN.pack(value)


def read_u32(data: bytes) -> int:
    if len(data) != 4:
        raise DecodeError("expected a 4-byte integer")
    return _LEN.unpack(data)[0]
