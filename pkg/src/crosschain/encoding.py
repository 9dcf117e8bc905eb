"""Canonical byte encoding for all values that cross chain boundaries.

Every argument list, event payload, receipt, and block header is reduced to
one deterministic byte string before hashing or comparison, so equality of
meaning is exactly equality of bytes. The format is self-describing:

    tag  value
    N    none
    B    0x00 / 0x01
    I    8-byte big-endian two's-complement integer
    S    4-byte big-endian length + UTF-8 bytes
    Y    4-byte big-endian length + raw bytes
    L    4-byte big-endian element count + encoded elements
    D    4-byte big-endian pair count + encoded (key, value) pairs,
         ordered by encoded key

Lists decode to tuples so round-tripped values stay hashable.
"""

from __future__ import annotations

import hashlib
import struct

Value = None | bool | int | str | bytes | tuple | list | dict

_INT_MIN = -(1 << 63)
_INT_MAX = (1 << 63) - 1


class EncodingError(ValueError):
    """Raised for values outside the canonical model or malformed bytes."""


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def encode_value(value: Value) -> bytes:
    """Encode one value into its canonical byte form."""
    if value is None:
        return b"N"
    if isinstance(value, bool):  # bool before int: bool is an int subclass
        return b"B\x01" if value else b"B\x00"
    if isinstance(value, int):
        if not _INT_MIN <= value <= _INT_MAX:
            raise EncodingError(f"integer out of 64-bit range: {value}")
        return b"I" + value.to_bytes(8, "big", signed=True)
    if isinstance(value, str):
        raw = value.encode("utf-8")
        return b"S" + struct.pack(">I", len(raw)) + raw
    if isinstance(value, (bytes, bytearray)):
        return b"Y" + struct.pack(">I", len(value)) + bytes(value)
    if isinstance(value, (list, tuple)):
        parts = [encode_value(item) for item in value]
        return b"L" + struct.pack(">I", len(parts)) + b"".join(parts)
    if isinstance(value, dict):
        pairs = sorted(
            (encode_value(k), encode_value(v)) for k, v in value.items()
        )
        body = b"".join(k + v for k, v in pairs)
        return b"D" + struct.pack(">I", len(pairs)) + body
    raise EncodingError(f"value of type {type(value).__name__} has no canonical form")


def decode_value(data: bytes) -> Value:
    """Decode canonical bytes back into a value. Inverse of encode_value."""
    value, offset = _decode(data, 0)
    if offset != len(data):
        raise EncodingError(f"{len(data) - offset} trailing bytes after value")
    return value


def _decode(data: bytes, offset: int) -> tuple[Value, int]:
    if offset >= len(data):
        raise EncodingError("truncated value")
    tag = data[offset : offset + 1]
    offset += 1
    if tag == b"N":
        return None, offset
    if tag == b"B":
        flag = _take(data, offset, 1)
        if flag not in (b"\x00", b"\x01"):
            raise EncodingError("invalid boolean byte")
        return flag == b"\x01", offset + 1
    if tag == b"I":
        raw = _take(data, offset, 8)
        return int.from_bytes(raw, "big", signed=True), offset + 8
    if tag in (b"S", b"Y"):
        (length,) = struct.unpack(">I", _take(data, offset, 4))
        raw = _take(data, offset + 4, length)
        offset += 4 + length
        return (raw.decode("utf-8") if tag == b"S" else raw), offset
    if tag == b"L":
        (count,) = struct.unpack(">I", _take(data, offset, 4))
        offset += 4
        items = []
        for _ in range(count):
            item, offset = _decode(data, offset)
            items.append(item)
        return tuple(items), offset
    if tag == b"D":
        (count,) = struct.unpack(">I", _take(data, offset, 4))
        offset += 4
        result = {}
        for _ in range(count):
            key, offset = _decode(data, offset)
            value, offset = _decode(data, offset)
            result[key] = value
        return result, offset
    raise EncodingError(f"unknown tag byte {tag!r}")


def _take(data: bytes, offset: int, n: int) -> bytes:
    if offset + n > len(data):
        raise EncodingError("truncated value")
    return data[offset : offset + n]


def encode_args(args) -> bytes:
    """Canonical form of an argument tuple; byte equality is the protocol's
    definition of 'same parameters'."""
    return encode_value(tuple(args))
