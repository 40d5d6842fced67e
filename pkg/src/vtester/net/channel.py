"""Seeded i.i.d. packet loss: the UDP impairment proxy and an in-process
channel that applies the same loss model without sockets."""

from __future__ import annotations

import logging
import random
import socket
import threading
import time
from dataclasses import dataclass, field

from ..codec import EncodedStream
from ..rtp import RTP_CLOCK, SequenceUnwrapper, depacketize, packetize, parse_packet
from ..trace import PacketRecord
from .transport import StreamReceiver, send_stream

log = logging.getLogger(__name__)


class LossModel:
    """Drops each packet independently with probability ``loss_p``.

    The k-th decision depends only on (seed, k), so equal seeds give equal
    drop patterns.
    """

    def __init__(self, loss_p: float, seed: int):
        if not 0.0 <= loss_p <= 1.0:
            raise ValueError("loss probability must be within [0, 1]")
        self.loss_p = loss_p
        self.seed = seed
        self._rng = random.Random(seed)

    def drop(self) -> bool:
        return self._rng.random() < self.loss_p


class ImpairProxy:
    """UDP forwarder that drops datagrams according to a :class:`LossModel`."""

    def __init__(self, listen_port: int, forward_addr: tuple[str, int], loss_p: float, seed: int,
                 listen_host: str = "127.0.0.1"):
        self.model = LossModel(loss_p, seed)
        self.forward_addr = forward_addr
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self.sock.setsockopt(socket.SOL_SOCKET, socket.SO_RCVBUF, 4 << 20)
        self.sock.bind((listen_host, listen_port))
        self.sock.settimeout(0.05)
        self.drop_log: list[bool] = []
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self.sock.getsockname()[1]

    @property
    def dropped(self) -> int:
        with self._lock:
            return sum(self.drop_log)

    @property
    def seen(self) -> int:
        with self._lock:
            return len(self.drop_log)

    def serve_forever(self) -> None:
        out = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        try:
            while not self._stop.is_set():
                try:
                    data, _ = self.sock.recvfrom(65535)
                except socket.timeout:
                    continue
                except OSError:
                    break
                drop = self.model.drop()
                with self._lock:
                    self.drop_log.append(drop)
                if not drop:
                    out.sendto(data, self.forward_addr)
        finally:
            out.close()

    def start(self) -> ImpairProxy:
        self._thread = threading.Thread(target=self.serve_forever, name="impair-proxy", daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join()
        self.sock.close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def impair_proxy(listen_port: int, forward_addr: tuple[str, int], loss_p: float, seed: int) -> None:
    """Run a proxy in the foreground until interrupted."""
    proxy = ImpairProxy(listen_port, forward_addr, loss_p, seed)
    log.info("impairing :%d -> %s:%d (loss %.4f, seed %d)", proxy.port, *forward_addr, loss_p, seed)
    try:
        proxy.serve_forever()
    finally:
        proxy.sock.close()


@dataclass
class SimulatedRun:
    rx_encoded: EncodedStream
    records: list[PacketRecord]
    drop_log: list[bool]
    complete: dict[int, bool] = field(default_factory=dict)
    undelivered: int = 0  # forwarded by the proxy but never received (kernel loss)

    @property
    def lost_frames(self) -> list[int]:
        return [n for n, ok in self.complete.items() if not ok]


def simulate_transmission(stream: EncodedStream, loss_p: float, seed: int, mtu_payload: int = 1400,
                          seq0: int = 0) -> SimulatedRun:
    """Packetize, apply the seeded loss model, depacketize.

    Arrival times equal the RTP send schedule (an ideal, jitter-free link).
    """
    model = LossModel(loss_p, seed)
    packets = packetize(stream, mtu_payload=mtu_payload, seq0=seq0)
    kept, drops, records = [], [], []
    seq = seq0
    for p in packets:
        d = model.drop()
        drops.append(d)
        if not d:
            kept.append(p)
            t = p.timestamp / RTP_CLOCK
            records.append(PacketRecord(12 + len(p.payload), seq, t, t))
        seq += 1
    rx, complete = depacketize(kept, stream.params(), expected_frames=len(stream.frames))
    return SimulatedRun(rx, records, drops, complete)


def proxied_transmission(stream: EncodedStream, loss_p: float, seed: int, mtu_payload: int = 1400,
                         seq0: int = 0, timeout: float = 10.0) -> SimulatedRun:
    """Send ``stream`` over loopback UDP through an :class:`ImpairProxy` at full speed.

    Same drop decisions as :func:`simulate_transmission` for equal seeds;
    arrivals are real receive times.
    """
    packets = packetize(stream, mtu_payload=mtu_payload, seq0=seq0)
    rx = StreamReceiver("udp_unicast", 0, host="127.0.0.1").start()
    try:
        with ImpairProxy(0, ("127.0.0.1", rx.port), loss_p, seed) as proxy:
            send_stream(packets, "udp_unicast", ("127.0.0.1", proxy.port), pacing=0)
            deadline = time.monotonic() + timeout
            while time.monotonic() < deadline:
                if proxy.seen == len(packets) and rx.count == len(packets) - proxy.dropped:
                    break
                time.sleep(0.002)
            else:
                rx.wait_idle(0.2)
            drops = list(proxy.drop_log)
    finally:
        got = rx.stop()
    unwrap = SequenceUnwrapper()
    kept, records = [], []
    for t, data in got:
        p = parse_packet(data)
        kept.append(p)
        records.append(PacketRecord(len(data), unwrap(p.sequence), p.timestamp / RTP_CLOCK, t))
    rx_stream, complete = depacketize(kept, stream.params(), expected_frames=len(stream.frames))
    return SimulatedRun(rx_stream, records, drops, complete, drops.count(False) - len(kept))
