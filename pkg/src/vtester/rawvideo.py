"""Uncompressed I420 video and the YUV4MPEG2 container."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO

import numpy as np

SIGNATURE = b"YUV4MPEG2"


class Y4MError(ValueError):
    pass


@dataclass(frozen=True)
class FrameBuffer:
    width: int
    height: int
    y_plane: bytes
    u_plane: bytes
    v_plane: bytes

    def __post_init__(self):
        w, h = self.width, self.height
        if w <= 0 or h <= 0 or w % 2 or h % 2:
            raise ValueError(f"I420 needs positive even dimensions, got {w}x{h}")
        c = (w // 2) * (h // 2)
        if len(self.y_plane) != w * h or len(self.u_plane) != c or len(self.v_plane) != c:
            raise ValueError("plane sizes do not match I420 geometry")

    @classmethod
    def from_bytes(cls, width: int, height: int, data) -> FrameBuffer:
        data = bytes(data)
        ys = width * height
        cs = ys // 4
        if len(data) != ys + 2 * cs:
            raise ValueError(f"expected {ys + 2 * cs} bytes for {width}x{height} I420, got {len(data)}")
        return cls(width, height, data[:ys], data[ys:ys + cs], data[ys + cs:])

    def to_bytes(self) -> bytes:
        return self.y_plane + self.u_plane + self.v_plane

    def luma(self) -> np.ndarray:
        """Read-only (height, width) uint8 view of the Y plane."""
        return np.frombuffer(self.y_plane, dtype=np.uint8).reshape(self.height, self.width)


def frame_size(width: int, height: int) -> int:
    return width * height * 3 // 2


@dataclass
class RawVideo:
    width: int
    height: int
    fps_num: int = 25
    fps_den: int = 1
    frames: list[FrameBuffer] = field(default_factory=list)

    def __post_init__(self):
        if self.fps_num <= 0 or self.fps_den <= 0:
            raise ValueError("frame rate must be a positive rational")
        for f in self.frames:
            if (f.width, f.height) != (self.width, self.height):
                raise ValueError("frame geometry differs from video geometry")

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def fps(self) -> float:
        return self.fps_num / self.fps_den

    def luma_stack(self) -> np.ndarray:
        """(frames, height, width) uint8 array of all luma planes."""
        if not self.frames:
            return np.empty((0, self.height, self.width), dtype=np.uint8)
        return np.stack([f.luma() for f in self.frames])


def _parse_header(line: bytes) -> tuple[int, int, int, int]:
    tokens = line.split(b" ")
    if tokens[0] != SIGNATURE:
        raise Y4MError("missing YUV4MPEG2 signature")
    width = height = None
    fps = (25, 1)
    for tok in tokens[1:]:
        if not tok:
            continue
        tag, val = tok[:1], tok[1:].decode("ascii", "replace")
        try:
            if tag == b"W":
                width = int(val)
            elif tag == b"H":
                height = int(val)
            elif tag == b"F":
                num, den = val.split(":")
                fps = (int(num), int(den))
            elif tag == b"C" and val != "420":
                raise Y4MError(f"unsupported colourspace C{val} (only C420)")
        except ValueError as exc:
            if isinstance(exc, Y4MError):
                raise
            raise Y4MError(f"malformed header tag {tok!r}") from None
    if width is None or height is None:
        raise Y4MError("header lacks W or H tag")
    return width, height, fps[0], fps[1]


def read_y4m(stream: BinaryIO | bytes) -> RawVideo:
    if isinstance(stream, (bytes, bytearray, memoryview)):
        stream = io.BytesIO(bytes(stream))
    header = stream.readline()
    if not header.endswith(b"\n"):
        raise Y4MError("truncated or missing header line")
    width, height, fps_num, fps_den = _parse_header(header[:-1])
    size = frame_size(width, height)
    frames = []
    while True:
        marker = stream.readline()
        if not marker:
            break
        if not marker.startswith(b"FRAME") or not marker.endswith(b"\n"):
            raise Y4MError(f"bad frame marker at frame {len(frames)}")
        payload = stream.read(size)
        if len(payload) != size:
            raise Y4MError(f"truncated payload in frame {len(frames)}: {len(payload)}/{size} bytes")
        frames.append(FrameBuffer.from_bytes(width, height, payload))
    return RawVideo(width, height, fps_num, fps_den, frames)


def header_line(video: RawVideo) -> bytes:
    return f"YUV4MPEG2 W{video.width} H{video.height} F{video.fps_num}:{video.fps_den} Ip A1:1 C420\n".encode()


def write_y4m(video: RawVideo, stream: BinaryIO | None = None) -> bytes | None:
    """Serialize ``video``; returns the bytes when no stream is given."""
    out = io.BytesIO() if stream is None else stream
    out.write(header_line(video))
    for f in video.frames:
        out.write(b"FRAME\n")
        out.write(f.y_plane)
        out.write(f.u_plane)
        out.write(f.v_plane)
    return out.getvalue() if stream is None else None


def load_y4m(path) -> RawVideo:
    with open(path, "rb") as fh:
        return read_y4m(fh)


def save_y4m(video: RawVideo, path) -> Path:
    path = Path(path)
    with open(path, "wb") as fh:
        write_y4m(video, fh)
    return path
