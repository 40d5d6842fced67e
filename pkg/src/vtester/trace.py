"""Classic libpcap traces of the RTP flow and their reduction to per-packet
QoS records (size, unwrapped sequence, RTP time, arrival time)."""

from __future__ import annotations

import ipaddress
import struct
import threading
from dataclasses import dataclass
from pathlib import Path

from .rtp import RTP_CLOCK, RtpError, SequenceUnwrapper, parse_packet

PCAP_MAGIC = 0xA1B2C3D4
LINKTYPE_ETHERNET = 1
SNAPLEN = 65535
MAX_UDP_PAYLOAD = 65507
_GLOBAL = "IHHiIII"
_RECORD = "IIII"


class PcapError(ValueError):
    pass


@dataclass(frozen=True)
class CapturedPacket:
    ts_sec: int
    ts_usec: int
    data: bytes

    def __post_init__(self):
        if not 0 <= self.ts_usec < 1_000_000:
            raise ValueError(f"ts_usec out of range: {self.ts_usec}")

    @classmethod
    def at(cls, t: float, data: bytes) -> CapturedPacket:
        usec = round(t * 1e6)
        return cls(usec // 1_000_000, usec % 1_000_000, data)

    @property
    def time(self) -> float:
        return self.ts_sec + self.ts_usec * 1e-6


@dataclass(frozen=True)
class PacketRecord:
    size: int
    seq: int
    rtp_ts: float
    arrival: float


def pcap_bytes(packets, byteorder: str = "<") -> bytes:
    parts = [struct.pack(byteorder + _GLOBAL, PCAP_MAGIC, 2, 4, 0, 0, SNAPLEN, LINKTYPE_ETHERNET)]
    rec = struct.Struct(byteorder + _RECORD)
    for p in packets:
        parts.append(rec.pack(p.ts_sec, p.ts_usec, len(p.data), len(p.data)))
        parts.append(p.data)
    return b"".join(parts)


def write_pcap(packets, path, byteorder: str = "<") -> Path:
    path = Path(path)
    path.write_bytes(pcap_bytes(packets, byteorder))
    return path


def parse_pcap(data: bytes) -> list[CapturedPacket]:
    if len(data) < 24:
        raise PcapError("file shorter than the pcap global header")
    (magic,) = struct.unpack_from("<I", data)
    if magic == PCAP_MAGIC:
        bo = "<"
    elif magic == 0xD4C3B2A1:
        bo = ">"
    else:
        raise PcapError(f"bad pcap magic 0x{magic:08x}")
    network = struct.unpack_from(bo + _GLOBAL, data)[6]
    if network != LINKTYPE_ETHERNET:
        raise PcapError(f"unsupported link type {network}")
    rec = struct.Struct(bo + _RECORD)
    out = []
    pos = 24
    while pos < len(data):
        if pos + rec.size > len(data):
            raise PcapError(f"truncated record header at offset {pos}")
        ts_sec, ts_usec, incl, orig = rec.unpack_from(data, pos)
        pos += rec.size
        if incl != orig:
            raise PcapError(f"snaplen-truncated packet at offset {pos - rec.size}")
        if pos + incl > len(data):
            raise PcapError(f"truncated packet data at offset {pos}")
        out.append(CapturedPacket(ts_sec, ts_usec, data[pos:pos + incl]))
        pos += incl
    return out


def read_pcap(path) -> list[CapturedPacket]:
    return parse_pcap(Path(path).read_bytes())


def ipv4_checksum(header: bytes) -> int:
    total = sum(struct.unpack(f"!{len(header) // 2}H", header))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def synthesize_frame(src_ip: str, dst_ip: str, src_port: int, dst_port: int, rtp_bytes: bytes) -> bytes:
    """Wrap an RTP packet in Ethernet II / IPv4 / UDP headers (zero MACs, UDP checksum 0)."""
    if len(rtp_bytes) > MAX_UDP_PAYLOAD:
        raise ValueError(f"payload of {len(rtp_bytes)} bytes exceeds UDP maximum")
    eth = bytes(12) + b"\x08\x00"
    udp = struct.pack("!HHHH", src_port, dst_port, 8 + len(rtp_bytes), 0)
    ip = bytearray(struct.pack("!BBHHHBBH4s4s", 0x45, 0, 20 + len(udp) + len(rtp_bytes), 0, 0x4000, 64, 17, 0,
                               ipaddress.IPv4Address(src_ip).packed, ipaddress.IPv4Address(dst_ip).packed))
    struct.pack_into("!H", ip, 10, ipv4_checksum(bytes(ip)))
    return eth + bytes(ip) + udp + rtp_bytes


class RecordList(list):
    """List of :class:`PacketRecord` that also reports how many datagrams were skipped."""

    skipped: int = 0


def _udp_payload(frame: bytes):
    if len(frame) < 14 + 20 + 8 or frame[12:14] != b"\x08\x00":
        return None
    ip = frame[14:]
    if ip[0] >> 4 != 4 or ip[9] != 17:
        return None
    ihl = (ip[0] & 0x0F) * 4
    total = struct.unpack_from("!H", ip, 2)[0]
    udp = ip[ihl:total]
    if len(udp) < 8:
        return None
    dport, ulen = struct.unpack_from("!2xHH", udp)
    return dport, udp[8:ulen]


def extract_rtp_records(packets, dst_port: int | None = None) -> RecordList:
    records = RecordList()
    unwrap = SequenceUnwrapper()
    for cp in sorted(packets, key=lambda p: (p.ts_sec, p.ts_usec)):
        parsed = _udp_payload(cp.data)
        if parsed is None:
            continue
        dport, payload = parsed
        if dst_port is not None and dport != dst_port:
            continue
        try:
            rtp = parse_packet(payload)
        except RtpError:
            records.skipped += 1
            continue
        records.append(PacketRecord(len(payload), unwrap(rtp.sequence), rtp.timestamp / RTP_CLOCK, cp.time))
    return records


class CaptureSink:
    """Thread-safe capture buffer fed from the receive path.

    Each RTP packet is stored as a synthesized Ethernet/IPv4/UDP frame so
    the trace stays readable by standard tools whatever the transport.
    """

    def __init__(self, dst_ip: str = "127.0.0.1", dst_port: int = 5004):
        self.dst_ip = dst_ip
        self.dst_port = dst_port
        self._lock = threading.Lock()
        self._packets: list[CapturedPacket] = []

    def append(self, arrival: float, rtp_bytes: bytes, src: tuple[str, int] = ("127.0.0.1", 0)) -> None:
        frame = synthesize_frame(src[0], self.dst_ip, src[1], self.dst_port, rtp_bytes)
        cp = CapturedPacket.at(arrival, frame)
        with self._lock:
            self._packets.append(cp)

    @property
    def packets(self) -> list[CapturedPacket]:
        with self._lock:
            return list(self._packets)

    def __len__(self) -> int:
        with self._lock:
            return len(self._packets)

    def write(self, path) -> Path:
        return write_pcap(self.packets, path)
