from __future__ import annotations

import ipaddress
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..codec import DecodeReport

TRANSPORTS = ("udp_unicast", "udp_multicast", "tcp")


class SessionError(RuntimeError):
    pass


@dataclass
class SessionConfig:
    video_id: str
    gop_size: int = 15
    quant_shift: int = 0
    fps_num: int = 25
    fps_den: int = 1
    transport: str = "udp_unicast"
    rtp_port: int = 5004
    control_host: str = "127.0.0.1"
    control_port: int = 8000
    multicast_group: str | None = None
    pacing: float = 1.0
    # where the server should send RTP, "host:port"; lets a proxy sit in the path
    send_to: str | None = None
    mtu_payload: int = 1400
    idle_timeout: float = 1.0
    rtt_probes: int = 10

    def __post_init__(self):
        if self.transport not in TRANSPORTS:
            raise ValueError(f"transport must be one of {TRANSPORTS}, got {self.transport!r}")
        if not 0 < self.rtp_port < 65536 or not 0 < self.control_port < 65536:
            raise ValueError("ports must be in 1..65535")
        if (self.transport == "udp_multicast") != (self.multicast_group is not None):
            raise ValueError("multicast_group is required for, and only for, udp_multicast")
        if self.multicast_group is not None and not ipaddress.IPv4Address(self.multicast_group).is_multicast:
            raise ValueError(f"{self.multicast_group} is not in 224.0.0.0/4")
        if self.pacing < 0:
            raise ValueError("pacing must be >= 0")
        if self.fps_num <= 0 or self.fps_den <= 0:
            raise ValueError("frame rate must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


def parse_hostport(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"expected host:port, got {text!r}")
    return host, int(port)


# File names of the four artifacts plus the session side files.
TRACE_FILE = "trace.pcap"
RX_ENCODED_FILE = "rx.vtes"
RX_RAW_FILE = "rx.y4m"
REF_RAW_FILE = "ref.y4m"
REPORT_FILE = "decode_report.json"
META_FILE = "session.json"


@dataclass
class TestArtifacts:
    trace_path: Path
    rx_encoded_path: Path
    rx_raw_path: Path
    ref_raw_path: Path
    decode_report: DecodeReport
    session_meta: dict = field(default_factory=dict)

    __test__ = False  # not a pytest class

    def paths(self) -> list[Path]:
        return [self.trace_path, self.rx_encoded_path, self.rx_raw_path, self.ref_raw_path]
