"""Pure-Python zero-run RLE kernel (fallback for the compiled ``_rle_c``)."""

from __future__ import annotations

import re

_ZERO_RUN = re.compile(rb"\x00+")
_MAX_RUN = 0xFFFF


def rle_compress(data) -> bytes:
    data = bytes(data)
    parts: list[bytes] = []
    pos = 0
    for m in _ZERO_RUN.finditer(data):
        start, end = m.span()
        if start > pos:
            parts.append(data[pos:start])
        run = end - start
        while run > 0:
            chunk = min(run, _MAX_RUN)
            parts.append(b"\x00" + chunk.to_bytes(2, "little"))
            run -= chunk
        pos = end
    parts.append(data[pos:])
    return b"".join(parts)


def rle_decompress(data) -> bytes:
    data = bytes(data)
    n = len(data)
    out = bytearray()
    pos = 0
    while True:
        idx = data.find(b"\x00", pos)
        if idx < 0:
            out += data[pos:]
            break
        out += data[pos:idx]
        if idx + 2 >= n:
            raise ValueError(f"truncated run token at offset {idx}")
        run = data[idx + 1] | (data[idx + 2] << 8)
        if run == 0:
            raise ValueError(f"zero-length run at offset {idx}")
        out += bytes(run)
        pos = idx + 3
    return bytes(out)
