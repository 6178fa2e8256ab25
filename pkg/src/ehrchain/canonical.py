"""Canonical byte encodings behind every digest in the system.

Two encodings live here:

* canonical JSON: UTF-8, lexicographically sorted keys, no insignificant
  whitespace. Documents, read-write sets, transactions, and blocks all
  hash through this form, so two independent replays of the same log
  agree byte for byte.
* length-prefixed field packing: fixed-order binary fields used for
  certificate bytes, so signatures stay stable without a JSON parser.
"""

from __future__ import annotations

import hashlib
import json
import struct
from typing import BinaryIO, Iterator

DIGEST_ALGORITHM = "sha256"
ZERO_DIGEST = "0" * 64


class FramingError(ValueError):
    """Raised when a length-prefixed stream is truncated or oversized."""


def canonical_json_bytes(value) -> bytes:
    return json.dumps(
        value, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def digest_json(value) -> str:
    """Hex digest of the canonical JSON encoding of ``value``."""
    return sha256_hex(canonical_json_bytes(value))


def pack_fields(fields: list[bytes]) -> bytes:
    """Concatenate fields, each prefixed with a 4-byte big-endian length."""
    out = bytearray()
    for field in fields:
        out += struct.pack(">I", len(field))
        out += field
    return bytes(out)


def unpack_fields(data: bytes, count: int) -> list[bytes]:
    fields = []
    offset = 0
    for _ in range(count):
        if offset + 4 > len(data):
            raise FramingError("field header truncated")
        (length,) = struct.unpack_from(">I", data, offset)
        offset += 4
        if offset + length > len(data):
            raise FramingError("field body truncated")
        fields.append(data[offset : offset + length])
        offset += length
    if offset != len(data):
        raise FramingError("trailing bytes after last field")
    return fields


# Cap on a single framed record; a block of bounded transactions stays
# far below this, so anything larger is a corrupted length prefix.
MAX_FRAME_BYTES = 64 * 1024 * 1024


def write_framed(fh: BinaryIO, payload: bytes) -> None:
    fh.write(struct.pack(">I", len(payload)))
    fh.write(payload)


def iter_framed(data: bytes) -> Iterator[bytes]:
    """Yield payloads from a back-to-back framed byte string."""
    offset = 0
    while offset < len(data):
        if offset + 4 > len(data):
            raise FramingError("record header truncated")
        (length,) = struct.unpack_from(">I", data, offset)
        offset += 4
        if length > MAX_FRAME_BYTES:
            raise FramingError("record length exceeds frame cap")
        if offset + length > len(data):
            raise FramingError("record body truncated")
        yield data[offset : offset + length]
        offset += length
