"""Length-prefixed binary sections: each is a 4-byte big-endian length then the bytes."""
from __future__ import annotations

import struct
from typing import Sequence


class MalformedError(ValueError):
    """Bytes do not parse as the expected structure."""


def pack_sections(parts: Sequence[bytes]) -> bytes:
    return b"".join(struct.pack(">I", len(p)) + bytes(p) for p in parts)


def unpack_sections(data: bytes, count: int) -> list[bytes]:
    """Exactly ``count`` sections with no trailing bytes."""
    out = []
    pos = 0
    data = bytes(data)
    for _ in range(count):
        if pos + 4 > len(data):
            raise MalformedError("truncated section header")
        (n,) = struct.unpack_from(">I", data, pos)
        pos += 4
        if pos + n > len(data):
            raise MalformedError("truncated section body")
        out.append(data[pos:pos + n])
        pos += n
    if pos != len(data):
        raise MalformedError("trailing bytes after last section")
    return out
