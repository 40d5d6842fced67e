"""Toy GOP codec: RLE intra (I) and wrapping-delta (P) frames, plus the
receiver-side frame-rate sustainer.

The VTES elementary-stream file (little-endian)::

    "VTES" | version u8 | width u16 | height u16 | fps_num u16 | fps_den u16
           | gop_size u16 | quant_shift u8
    per frame: 0x46 | type u8 ('I'/'P') | frame_number u32 | payload_len u32 | payload
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .rawvideo import FrameBuffer, RawVideo, frame_size
from .rle import rle_compress, rle_decompress

MAGIC = b"VTES"
VERSION = 1
SYNC = 0x46
FILE_HEADER = struct.Struct("<4sBHHHHHB")
RECORD_HEADER = struct.Struct("<BBII")
_TYPE_BYTES = {"I": 0x49, "P": 0x50}
_TYPE_CHARS = {v: k for k, v in _TYPE_BYTES.items()}


class VtesError(ValueError):
    pass


@dataclass(frozen=True)
class EncodedFrame:
    frame_type: str
    frame_number: int
    payload: bytes

    @property
    def size(self) -> int:
        return RECORD_HEADER.size + len(self.payload)

    def serialize(self) -> bytes:
        return RECORD_HEADER.pack(SYNC, _TYPE_BYTES[self.frame_type], self.frame_number, len(self.payload)) + self.payload


def parse_record(data: bytes) -> EncodedFrame:
    """Parse exactly one serialized record; trailing or missing bytes are an error."""
    if len(data) < RECORD_HEADER.size:
        raise VtesError("record shorter than its header")
    sync, ftype, number, length = RECORD_HEADER.unpack_from(data)
    if sync != SYNC:
        raise VtesError(f"bad sync byte 0x{sync:02x}")
    if ftype not in _TYPE_CHARS:
        raise VtesError(f"unknown frame type 0x{ftype:02x}")
    if len(data) != RECORD_HEADER.size + length:
        raise VtesError(f"record length mismatch: header says {length}, have {len(data) - RECORD_HEADER.size}")
    return EncodedFrame(_TYPE_CHARS[ftype], number, bytes(data[RECORD_HEADER.size:]))


@dataclass
class EncodedStream:
    width: int
    height: int
    fps_num: int
    fps_den: int
    gop_size: int
    quant_shift: int
    frames: list[EncodedFrame] = field(default_factory=list)

    def __post_init__(self):
        if self.gop_size < 1:
            raise ValueError("gop_size must be >= 1")
        if not 0 <= self.quant_shift <= 7:
            raise ValueError("quant_shift must be in 0..7")

    def params(self) -> dict:
        return {
            "width": self.width, "height": self.height,
            "fps_num": self.fps_num, "fps_den": self.fps_den,
            "gop_size": self.gop_size, "quant_shift": self.quant_shift,
        }

    def empty_like(self) -> EncodedStream:
        return EncodedStream(**self.params())

    def total_bytes(self) -> int:
        return sum(f.size for f in self.frames)

    def bitrate_kbps(self, frame_count: int | None = None) -> float:
        """Average bitrate (kbit/s) of the serialized records at the nominal frame rate."""
        n = frame_count if frame_count is not None else len(self.frames)
        if n == 0:
            return 0.0
        return self.total_bytes() * 8 / (n * self.fps_den / self.fps_num) / 1000.0


def write_vtes(stream: EncodedStream, out: BinaryIO | None = None) -> bytes | None:
    buf = io.BytesIO() if out is None else out
    buf.write(FILE_HEADER.pack(MAGIC, VERSION, stream.width, stream.height, stream.fps_num,
                               stream.fps_den, stream.gop_size, stream.quant_shift))
    for f in stream.frames:
        buf.write(f.serialize())
    return buf.getvalue() if out is None else None


def read_vtes(data: BinaryIO | bytes) -> EncodedStream:
    if not isinstance(data, (bytes, bytearray, memoryview)):
        data = data.read()
    data = bytes(data)
    if len(data) < FILE_HEADER.size:
        raise VtesError("file shorter than VTES header")
    magic, version, w, h, fn, fd, gop, q = FILE_HEADER.unpack_from(data)
    if magic != MAGIC:
        raise VtesError(f"bad magic {magic!r}")
    if version != VERSION:
        raise VtesError(f"unsupported VTES version {version}")
    stream = EncodedStream(w, h, fn, fd, gop, q)
    pos = FILE_HEADER.size
    while pos < len(data):
        if pos + RECORD_HEADER.size > len(data):
            raise VtesError(f"truncated record header at offset {pos}")
        length = RECORD_HEADER.unpack_from(data, pos)[3]
        end = pos + RECORD_HEADER.size + length
        if end > len(data):
            raise VtesError(f"truncated payload at offset {pos}")
        stream.frames.append(parse_record(data[pos:end]))
        pos = end
    return stream


def load_vtes(path) -> EncodedStream:
    return read_vtes(Path(path).read_bytes())


def save_vtes(stream: EncodedStream, path) -> Path:
    path = Path(path)
    path.write_bytes(write_vtes(stream))
    return path


def frame_type_for(frame_number: int, gop_size: int) -> str:
    return "I" if frame_number % gop_size == 0 else "P"


def _quantize(frame: FrameBuffer, shift: int) -> np.ndarray:
    arr = np.frombuffer(frame.to_bytes(), dtype=np.uint8)
    if shift == 0:
        return arr
    return (arr >> shift) << shift


def encode(video: RawVideo, gop_size: int, quant_shift: int = 0) -> EncodedStream:
    if not video.frames:
        raise ValueError("cannot encode an empty video")
    stream = EncodedStream(video.width, video.height, video.fps_num, video.fps_den, gop_size, quant_shift)
    prev = None
    for n, frame in enumerate(video.frames):
        cur = _quantize(frame, quant_shift)
        if n % gop_size == 0:
            payload = rle_compress(cur.tobytes())
        else:
            payload = rle_compress((cur - prev).tobytes())  # uint8 arithmetic wraps mod 256
        stream.frames.append(EncodedFrame(frame_type_for(n, gop_size), n, payload))
        prev = cur
    return stream


@dataclass
class DecodeReport:
    present: list[bool]
    duplicated: int = 0
    dropped_gops: list[int] = field(default_factory=list)
    start_offset: int = 0

    def to_dict(self) -> dict:
        return {
            "present": list(self.present),
            "duplicated": self.duplicated,
            "dropped_gops": list(self.dropped_gops),
            "start_offset": self.start_offset,
        }

    @classmethod
    def from_dict(cls, d: dict) -> DecodeReport:
        return cls(list(d["present"]), d["duplicated"], list(d["dropped_gops"]), d["start_offset"])


def decode(stream: EncodedStream, expected_frames: int) -> tuple[RawVideo, DecodeReport]:
    """Decode with the frame-rate sustainer.

    Lost frames are concealed by repeating the last output frame, P-frames
    are applied to whatever was last output (so concealment errors
    propagate), and a GOP whose I-frame is missing is treated as lost in
    full. Losses before anything has been output shrink the output instead
    and are accounted in ``start_offset``.
    """
    by_number: dict[int, EncodedFrame] = {}
    for f in stream.frames:
        if f.frame_number >= expected_frames:
            raise ValueError(f"frame {f.frame_number} beyond expected_frames={expected_frames}")
        by_number[f.frame_number] = f
    gop = stream.gop_size
    size = frame_size(stream.width, stream.height)
    report = DecodeReport(present=[False] * expected_frames)
    out: list[FrameBuffer] = []
    last: np.ndarray | None = None
    last_frame: FrameBuffer | None = None

    for n in range(expected_frames):
        g, pos = divmod(n, gop)
        if pos == 0 and n not in by_number:
            report.dropped_gops.append(g)
        gop_alive = (g * gop) in by_number
        rec = by_number.get(n) if gop_alive else None
        if rec is None:
            if last_frame is None:
                report.start_offset -= 1
            else:
                out.append(last_frame)
                report.duplicated += 1
            continue
        raw = np.frombuffer(rle_decompress(rec.payload), dtype=np.uint8)
        if raw.size != size:
            raise VtesError(f"frame {n}: decoded {raw.size} bytes, geometry needs {size}")
        if rec.frame_type == "I":
            cur = raw
        else:
            cur = last + raw  # wraps mod 256
        last = cur
        last_frame = FrameBuffer.from_bytes(stream.width, stream.height, cur.tobytes())
        out.append(last_frame)
        report.present[n] = True

    video = RawVideo(stream.width, stream.height, stream.fps_num, stream.fps_den, out)
    return video, report


def dismiss_first_gop(rx: RawVideo, ref: RawVideo, report: DecodeReport,
                      gop_size: int) -> tuple[RawVideo, RawVideo]:
    """Trim the reference so it lines up with a receiver output that lost its leading GOP(s)."""
    if report.start_offset < 0:
        skip = -report.start_offset
        if skip % gop_size:
            raise ValueError(f"start_offset {report.start_offset} is not a whole number of GOPs of {gop_size}")
        ref = RawVideo(ref.width, ref.height, ref.fps_num, ref.fps_den, ref.frames[skip:])
    if len(rx) != len(ref):
        raise ValueError(f"frame counts differ after alignment: rx={len(rx)} ref={len(ref)}")
    return rx, ref
