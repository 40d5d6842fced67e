"""Concurrent test server: one handler thread per control connection."""

from __future__ import annotations

import logging
import socketserver
import threading
from dataclasses import fields
from pathlib import Path

from ..codec import EncodedStream, encode
from ..rawvideo import load_y4m
from ..rtp import packetize
from .control import PROTOCOL_VERSION, ControlChannel, ControlError
from .session import SessionConfig, parse_hostport
from .transport import send_stream

log = logging.getLogger(__name__)

CODEC_NAME = "vtes-rle"
_CONFIG_FIELDS = {f.name for f in fields(SessionConfig)}


class VideoDatabase:
    """Y4M reference videos in a directory, addressed by file stem; encodings are cached."""

    def __init__(self, root):
        self.root = Path(root)
        if not self.root.is_dir():
            raise FileNotFoundError(f"database directory {self.root} does not exist")
        self._lock = threading.Lock()
        self._cache: dict[tuple, EncodedStream] = {}

    def path(self, video_id: str) -> Path:
        if not video_id or "/" in video_id or "\\" in video_id or video_id.startswith("."):
            raise KeyError(f"invalid video id {video_id!r}")
        p = self.root / f"{video_id}.y4m"
        if not p.is_file():
            raise KeyError(f"unknown video {video_id!r}")
        return p

    def encoded(self, cfg: SessionConfig) -> EncodedStream:
        key = (cfg.video_id, cfg.gop_size, cfg.quant_shift, cfg.fps_num, cfg.fps_den)
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        video = load_y4m(self.path(cfg.video_id))
        video.fps_num, video.fps_den = cfg.fps_num, cfg.fps_den
        stream = encode(video, cfg.gop_size, cfg.quant_shift)
        with self._lock:
            self._cache.setdefault(key, stream)
        return stream


class _SessionHandler(socketserver.BaseRequestHandler):
    server: _ControlServer

    def handle(self):
        chan = ControlChannel(self.request)
        peer_host = self.client_address[0]
        cfg: SessionConfig | None = None
        stream: EncodedStream | None = None
        while True:
            try:
                msg = chan.recv()
            except (ControlError, OSError):
                break
            kind = msg.pop("type")
            try:
                if kind == "hello":
                    chan.send("hello", version=PROTOCOL_VERSION, codec=CODEC_NAME)
                elif kind == "setup":
                    unknown = set(msg) - _CONFIG_FIELDS
                    if unknown:
                        raise ValueError(f"unknown setup fields: {sorted(unknown)}")
                    cfg = SessionConfig(**msg)
                    stream = self.server.database.encoded(cfg)
                    chan.send("ok", rtp_port=cfg.rtp_port, frame_count=len(stream.frames),
                              codec=CODEC_NAME, bitrate_kbps=stream.bitrate_kbps(), **stream.params())
                elif kind == "play":
                    if cfg is None or stream is None:
                        raise ValueError("play before setup")
                    chan.send("playing")
                    report = self._stream(cfg, stream, peer_host)
                    chan.send("done", packets=report.packets, bytes=report.bytes, duration=report.duration)
                elif kind == "ping":
                    chan.send("pong", t0=msg.get("t0"))
                elif kind == "teardown":
                    cfg = stream = None
                    chan.send("bye")
                    break
                else:
                    raise ValueError(f"unknown message type {kind!r}")
            except (KeyError, ValueError, TypeError, OSError) as exc:
                log.info("session %s: %s", self.client_address, exc)
                try:
                    chan.send("error", message=str(exc).strip("'\""))
                except OSError:
                    break
        chan.close()

    def _stream(self, cfg: SessionConfig, stream: EncodedStream, peer_host: str):
        packets = packetize(stream, mtu_payload=cfg.mtu_payload)
        if cfg.transport == "udp_multicast":
            dest = (cfg.multicast_group, cfg.rtp_port)
        elif cfg.send_to:
            dest = parse_hostport(cfg.send_to)
        else:
            dest = (peer_host, cfg.rtp_port)
        return send_stream(packets, cfg.transport, dest, cfg.pacing, stop=self.server.stopping)


class _ControlServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, addr, database: VideoDatabase):
        self.database = database
        self.stopping = threading.Event()
        super().__init__(addr, _SessionHandler)


class TestServer:
    """Server that can run in a background thread (tests, ``vt run``) or in the foreground."""

    __test__ = False

    def __init__(self, database_dir, control_port: int = 8000, host: str = "127.0.0.1"):
        self._srv = _ControlServer((host, control_port), VideoDatabase(database_dir))
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._srv.server_address[1]

    def serve_forever(self) -> None:
        self._srv.serve_forever(poll_interval=0.05)

    def start(self) -> TestServer:
        self._thread = threading.Thread(target=self.serve_forever, name="vt-server", daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._srv.stopping.set()
        self._srv.shutdown()
        self._srv.server_close()
        if self._thread is not None:
            self._thread.join()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def serve(database_dir, control_port: int, host: str = "0.0.0.0") -> None:
    server = TestServer(database_dir, control_port, host)
    log.info("serving %s on %s:%d", database_dir, host, server.port)
    try:
        server.serve_forever()
    finally:
        server._srv.server_close()
