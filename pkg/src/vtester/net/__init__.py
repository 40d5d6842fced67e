"""Test-session networking: server, client, transports and the impairment proxy."""

from .channel import ImpairProxy, LossModel, SimulatedRun, impair_proxy, proxied_transmission, simulate_transmission
from .client import measure_rtt, run_client
from .server import TestServer, VideoDatabase, serve
from .session import SessionConfig, SessionError, TestArtifacts
from .transport import SendReport, StreamReceiver, receive_stream, send_stream

__all__ = [
    "ImpairProxy", "LossModel", "SendReport", "SessionConfig", "SessionError", "SimulatedRun", "StreamReceiver",
    "TestArtifacts", "TestServer", "VideoDatabase", "impair_proxy", "measure_rtt", "proxied_transmission", "receive_stream", "run_client",
    "send_stream", "serve", "simulate_transmission",
]
