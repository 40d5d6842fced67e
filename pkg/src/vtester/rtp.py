"""RTP (RFC 3550 fixed header) packetization of VTES streams and
RFC 4571-style length-prefixed framing for TCP transport."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable

from .codec import EncodedStream, VtesError, parse_record

RTP_CLOCK = 90000
HEADER = struct.Struct("!BBHII")
HEADER_LEN = HEADER.size
DEFAULT_PT = 96


class RtpError(ValueError):
    pass


@dataclass(frozen=True)
class RtpPacket:
    sequence: int
    timestamp: int
    ssrc: int = 0
    marker: bool = False
    payload_type: int = DEFAULT_PT
    payload: bytes = b""
    version: int = 2
    padding: bool = False
    extension: bool = False

    def serialize(self) -> bytes:
        return serialize_header(self) + self.payload


def serialize_header(p: RtpPacket) -> bytes:
    if p.version != 2 or p.padding or p.extension:
        raise RtpError("only version 2 without padding/extension is supported")
    b0 = 0x80
    b1 = (0x80 if p.marker else 0) | (p.payload_type & 0x7F)
    return HEADER.pack(b0, b1, p.sequence & 0xFFFF, p.timestamp & 0xFFFFFFFF, p.ssrc & 0xFFFFFFFF)


def parse_packet(data: bytes) -> RtpPacket:
    if len(data) < HEADER_LEN:
        raise RtpError(f"buffer of {len(data)} bytes is shorter than the RTP header")
    b0, b1, seq, ts, ssrc = HEADER.unpack_from(data)
    if b0 >> 6 != 2:
        raise RtpError(f"RTP version {b0 >> 6} != 2")
    if b0 & 0x20 or b0 & 0x10 or b0 & 0x0F:
        raise RtpError("padding, extension and CSRC entries are not supported")
    return RtpPacket(seq, ts, ssrc, bool(b1 & 0x80), b1 & 0x7F, bytes(data[HEADER_LEN:]))


def rtp_timestamp(frame_number: int, fps_num: int, fps_den: int) -> int:
    return round(frame_number * RTP_CLOCK * fps_den / fps_num)


def packetize(stream: EncodedStream, mtu_payload: int = 1400, ssrc: int = 0, seq0: int = 0) -> list[RtpPacket]:
    if mtu_payload < 64:
        raise ValueError("mtu_payload must be >= 64")
    packets = []
    seq = seq0
    for frame in stream.frames:
        record = frame.serialize()
        ts = rtp_timestamp(frame.frame_number, stream.fps_num, stream.fps_den) & 0xFFFFFFFF
        chunks = [record[i:i + mtu_payload] for i in range(0, len(record), mtu_payload)]
        for k, chunk in enumerate(chunks):
            packets.append(RtpPacket(seq & 0xFFFF, ts, ssrc, k == len(chunks) - 1, DEFAULT_PT, chunk))
            seq += 1
    return packets


class SequenceUnwrapper:
    """Maps 16-bit sequence numbers to a monotone integer line.

    A drop of more than 2**15 relative to the previous value is a wrap.
    """

    def __init__(self):
        self._last: int | None = None

    def __call__(self, seq: int) -> int:
        if self._last is None:
            self._last = seq
            return seq
        cycle, prev = divmod(self._last, 1 << 16)
        delta = seq - prev
        if delta < -(1 << 15):
            cycle += 1
        elif delta > (1 << 15) and cycle > 0:
            cycle -= 1
        value = cycle * (1 << 16) + seq
        self._last = max(self._last, value)
        return value


def unwrap_sequences(seqs: Iterable[int]) -> list[int]:
    u = SequenceUnwrapper()
    return [u(s) for s in seqs]


def depacketize(packets: Iterable[RtpPacket], params: dict,
                expected_frames: int | None = None) -> tuple[EncodedStream, dict[int, bool]]:
    """Reassemble frames from (possibly lossy) RTP packets.

    ``params`` carries the stream geometry that the RTP payload does not
    (see :meth:`EncodedStream.params`). The returned map has one entry per
    frame number seen (or 0..expected_frames-1) telling whether it was
    reassembled.
    """
    stream = EncodedStream(**params)
    unwrap = SequenceUnwrapper()
    groups: dict[int, list[tuple[int, RtpPacket]]] = {}
    order: list[int] = []
    for p in packets:
        useq = unwrap(p.sequence)
        if p.timestamp not in groups:
            groups[p.timestamp] = []
            order.append(p.timestamp)
        groups[p.timestamp].append((useq, p))

    complete: dict[int, bool] = {}
    if expected_frames is not None:
        complete = {n: False for n in range(expected_frames)}
    frames = {}
    for ts in order:
        group = sorted(groups[ts], key=lambda t: t[0])
        frame_guess = round(ts * stream.fps_num / (RTP_CLOCK * stream.fps_den))
        markers = [i for i, (_, p) in enumerate(group) if p.marker]
        ok = False
        if markers:
            end = markers[-1]
            run = group[: end + 1]
            seqs = [s for s, _ in run]
            if all(b - a == 1 for a, b in zip(seqs, seqs[1:])):
                try:
                    rec = parse_record(b"".join(p.payload for _, p in run))
                except VtesError:
                    rec = None
                if rec is not None:
                    frames[rec.frame_number] = rec
                    complete[rec.frame_number] = True
                    ok = True
        if not ok:
            complete.setdefault(frame_guess, False)
    stream.frames = [frames[n] for n in sorted(frames)]
    return stream, dict(sorted(complete.items()))


def frame_tcp(p: RtpPacket) -> bytes:
    data = p.serialize()
    if len(data) > 0xFFFF:
        raise RtpError("packet too large for 16-bit length framing")
    return struct.pack("!H", len(data)) + data


class TcpUnframer:
    """Streaming inverse of :func:`frame_tcp`."""

    def __init__(self):
        self._buf = bytearray()

    def feed(self, chunk: bytes) -> list[RtpPacket]:
        self._buf += chunk
        out = []
        while len(self._buf) >= 2:
            n = (self._buf[0] << 8) | self._buf[1]
            if len(self._buf) < 2 + n:
                break
            out.append(parse_packet(bytes(self._buf[2:2 + n])))
            del self._buf[:2 + n]
        return out

    @property
    def pending(self) -> int:
        return len(self._buf)

    def close(self) -> None:
        if self._buf:
            raise RtpError(f"stream truncated with {len(self._buf)} bytes of a partial frame")


def unframe_tcp(data: bytes | Iterable[bytes]) -> list[RtpPacket]:
    u = TcpUnframer()
    chunks = [data] if isinstance(data, (bytes, bytearray, memoryview)) else data
    out = []
    for chunk in chunks:
        out.extend(u.feed(bytes(chunk)))
    u.close()
    return out
