"""RTP senders and receivers for UDP unicast, UDP multicast and TCP."""

from __future__ import annotations

import socket
import threading
import time
from dataclasses import dataclass

from ..rtp import RTP_CLOCK, RtpPacket, TcpUnframer, frame_tcp
from ..trace import CaptureSink

SOCK_BUF = 4 << 20


@dataclass
class SendReport:
    packets: int
    bytes: int
    duration: float


def _udp_sender(transport: str) -> socket.socket:
    s = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    s.setsockopt(socket.SOL_SOCKET, socket.SO_SNDBUF, SOCK_BUF)
    if transport == "udp_multicast":
        s.setsockopt(socket.IPPROTO_IP, socket.IP_MULTICAST_TTL, 1)
        s.setsockopt(socket.IPPROTO_IP, socket.IP_MULTICAST_LOOP, 1)
        s.setsockopt(socket.IPPROTO_IP, socket.IP_MULTICAST_IF, socket.inet_aton("127.0.0.1"))
    return s


def send_stream(packets: list[RtpPacket], transport: str, dest: tuple[str, int], pacing: float = 1.0,
                stop: threading.Event | None = None) -> SendReport:
    """Send ``packets``; a packet is held until (its RTP time - first RTP time) * pacing.

    With pacing 0 the stream is sent in one burst.
    """
    t0 = time.monotonic()
    sent = nbytes = 0
    if not packets:
        return SendReport(0, 0, 0.0)
    ts0 = packets[0].timestamp
    if transport == "tcp":
        sock = socket.create_connection(dest, timeout=10.0)
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        emit = lambda p: sock.sendall(frame_tcp(p))  # noqa: E731
    else:
        sock = _udp_sender(transport)
        emit = lambda p: sock.sendto(p.serialize(), dest)  # noqa: E731
    try:
        for i, p in enumerate(packets):
            if stop is not None and stop.is_set():
                break
            if pacing > 0:
                due = t0 + ((p.timestamp - ts0) & 0xFFFFFFFF) / RTP_CLOCK * pacing
                delay = due - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
            elif i % 16 == 15:
                time.sleep(0)  # let a co-resident receiver drain its socket
            emit(p)
            sent += 1
            nbytes += len(p.payload) + 12
    finally:
        if transport == "tcp":
            try:
                sock.shutdown(socket.SHUT_WR)
            except OSError:
                pass
        sock.close()
    return SendReport(sent, nbytes, time.monotonic() - t0)


class _Clock:
    """Wall-clock epoch advanced by the monotonic clock."""

    def __init__(self):
        self._wall = time.time()
        self._mono = time.monotonic()

    def now(self) -> float:
        return self._wall + (time.monotonic() - self._mono)


class StreamReceiver:
    """Background receiver that timestamps every RTP packet and appends it to a capture sink."""

    def __init__(self, transport: str, port: int, host: str = "0.0.0.0", group: str | None = None,
                 sink: CaptureSink | None = None):
        self.transport = transport
        self.group = group
        self.sink = sink if sink is not None else CaptureSink(group or "127.0.0.1", port)
        self.packets: list[tuple[float, bytes]] = []
        self.error: BaseException | None = None
        self._clock = _Clock()
        self._lock = threading.Lock()
        self._last = time.monotonic()
        self._stop = threading.Event()
        self._eof = threading.Event()
        if transport == "tcp":
            self.sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
            self.sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            self.sock.bind((host, port))
            self.sock.listen(1)
        else:
            self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
            self.sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            self.sock.setsockopt(socket.SOL_SOCKET, socket.SO_RCVBUF, SOCK_BUF)
            if group is not None:
                self.sock.bind(("", port))
                mreq = socket.inet_aton(group) + socket.inet_aton("127.0.0.1")
                self.sock.setsockopt(socket.IPPROTO_IP, socket.IP_ADD_MEMBERSHIP, mreq)
            else:
                self.sock.bind((host, port))
        self.sock.settimeout(0.05)
        self.port = self.sock.getsockname()[1]
        self._thread = threading.Thread(target=self._run, name="rtp-receiver", daemon=True)

    def start(self) -> StreamReceiver:
        self._thread.start()
        return self

    def _record(self, data: bytes, src) -> None:
        t = self._clock.now()
        self.sink.append(t, data, src)
        with self._lock:
            self.packets.append((t, data))
            self._last = time.monotonic()

    def _run(self) -> None:
        try:
            if self.transport == "tcp":
                self._run_tcp()
            else:
                while not self._stop.is_set():
                    try:
                        data, src = self.sock.recvfrom(65535)
                    except socket.timeout:
                        continue
                    self._record(data, src)
        except BaseException as exc:  # noqa: BLE001 - surfaced through .error
            self.error = exc
        finally:
            self._eof.set()

    def _run_tcp(self) -> None:
        conn = None
        while conn is None and not self._stop.is_set():
            try:
                conn, src = self.sock.accept()
            except socket.timeout:
                continue
        if conn is None:
            return
        conn.settimeout(0.05)
        unframer = TcpUnframer()
        try:
            while not self._stop.is_set():
                try:
                    chunk = conn.recv(65536)
                except socket.timeout:
                    continue
                except ConnectionError:
                    break  # mid-stream disconnect: keep what we have
                if not chunk:
                    break
                for p in unframer.feed(chunk):
                    self._record(p.serialize(), src)
        finally:
            conn.close()

    @property
    def count(self) -> int:
        with self._lock:
            return len(self.packets)

    def idle_for(self) -> float:
        with self._lock:
            return time.monotonic() - self._last

    def wait_idle(self, idle_timeout: float, first_timeout: float | None = None) -> None:
        """Block until no packet has arrived for ``idle_timeout`` seconds (or TCP EOF)."""
        with self._lock:
            self._last = time.monotonic()
        first_deadline = None if first_timeout is None else time.monotonic() + first_timeout
        while not self._eof.is_set():
            if self.count == 0 and first_deadline is not None and time.monotonic() < first_deadline:
                time.sleep(0.01)
                continue
            if self.idle_for() >= idle_timeout:
                break
            time.sleep(0.01)

    def stop(self) -> list[tuple[float, bytes]]:
        self._stop.set()
        if self._thread.is_alive():
            self._thread.join()
        self.sock.close()
        with self._lock:
            return list(self.packets)


def receive_stream(transport: str, port: int, idle_timeout: float = 1.0, group: str | None = None,
                   first_timeout: float = 30.0) -> tuple[list[tuple[float, bytes]], CaptureSink]:
    """Receive until the stream goes idle; returns ``[(arrival, rtp_bytes)]`` and the capture sink."""
    rx = StreamReceiver(transport, port, group=group).start()
    rx.wait_idle(idle_timeout, first_timeout=first_timeout)
    packets = rx.stop()
    return packets, rx.sink
