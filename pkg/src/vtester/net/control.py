"""Newline-delimited JSON control protocol over TCP.

Messages (``type`` field): hello{version}, setup{session fields} -> ok{...},
play{} -> playing{} ... done{packets, bytes, duration}, ping{t0} -> pong{t0},
teardown{} -> bye{}; failures are error{message}.
"""

from __future__ import annotations

import json
import socket

PROTOCOL_VERSION = 1


class ControlError(RuntimeError):
    pass


class ControlChannel:
    def __init__(self, sock: socket.socket):
        self.sock = sock
        self._rfile = sock.makefile("rb")

    @classmethod
    def connect(cls, host: str, port: int, timeout: float = 10.0) -> ControlChannel:
        sock = socket.create_connection((host, port), timeout=timeout)
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        return cls(sock)

    def send(self, msg_type: str, **fields) -> None:
        self.sock.sendall(json.dumps({"type": msg_type, **fields}).encode() + b"\n")

    def recv(self) -> dict:
        line = self._rfile.readline()
        if not line:
            raise ControlError("control connection closed")
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ControlError(f"malformed control message: {exc}") from None
        if not isinstance(msg, dict) or "type" not in msg:
            raise ControlError("control message lacks a type")
        return msg

    def request(self, msg_type: str, expect: str, **fields) -> dict:
        self.send(msg_type, **fields)
        msg = self.recv()
        if msg["type"] == "error":
            raise ControlError(msg.get("message", "server error"))
        if msg["type"] != expect:
            raise ControlError(f"expected {expect!r}, got {msg['type']!r}")
        return msg

    def settimeout(self, t: float | None) -> None:
        self.sock.settimeout(t)

    def close(self) -> None:
        try:
            self._rfile.close()
        finally:
            self.sock.close()
