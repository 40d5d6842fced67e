"""Client half of a test session: negotiate, receive and capture, decode,
and write the four artifacts (trace, received encoded/raw video, reference)."""

from __future__ import annotations

import json
import logging
import shutil
import time
from pathlib import Path

from ..codec import decode, save_vtes
from ..rawvideo import save_y4m
from ..rtp import RtpError, depacketize, parse_packet
from .control import PROTOCOL_VERSION, ControlChannel, ControlError
from .server import VideoDatabase
from .session import (META_FILE, RX_ENCODED_FILE, RX_RAW_FILE, REF_RAW_FILE, REPORT_FILE, TRACE_FILE,
                      SessionConfig, SessionError, TestArtifacts)
from .transport import StreamReceiver

log = logging.getLogger(__name__)

STREAM_PARAMS = ("width", "height", "fps_num", "fps_den", "gop_size", "quant_shift")


def measure_rtt(chan: ControlChannel, n: int, timeout: float = 5.0) -> list[float]:
    """RTT samples (seconds) from ``n`` ping/pong exchanges on the control channel."""
    samples = []
    chan.settimeout(timeout)
    for _ in range(n):
        t0 = time.monotonic()
        try:
            reply = chan.request("ping", "pong", t0=t0)
        except TimeoutError as exc:
            raise SessionError("ping timed out") from exc
        t1 = time.monotonic()
        if reply.get("t0") != t0:
            raise SessionError("pong does not echo the ping timestamp")
        samples.append(t1 - t0)
    return samples


def run_client(config: SessionConfig, out_dir, database_dir, *, done_timeout: float = 600.0,
               first_packet_timeout: float = 5.0) -> TestArtifacts:
    """Run one session against the server named in ``config``.

    The reference video is taken from the client's own copy of the video
    database (``database_dir``), as the server only streams encoded data.
    """
    try:
        reference_path = VideoDatabase(database_dir).path(config.video_id)
    except KeyError as exc:
        raise SessionError(f"reference video unavailable locally: {exc}") from None
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        chan = ControlChannel.connect(config.control_host, config.control_port)
    except OSError as exc:
        raise SessionError(f"cannot reach server {config.control_host}:{config.control_port}: {exc}") from exc
    receiver = None
    try:
        hello = chan.request("hello", "hello", version=PROTOCOL_VERSION)
        if hello.get("version") != PROTOCOL_VERSION:
            raise SessionError(f"server speaks protocol {hello.get('version')}")
        ok = chan.request("setup", "ok", **config.to_dict())
        receiver = StreamReceiver(config.transport, config.rtp_port, group=config.multicast_group).start()
        rtt = measure_rtt(chan, config.rtt_probes)

        started = time.time()
        chan.request("play", "playing")
        chan.settimeout(done_timeout)
        done = chan.recv()
        if done["type"] != "done":
            raise SessionError(f"expected done, got {done}")
        receiver.wait_idle(config.idle_timeout, first_timeout=first_packet_timeout)
        received = receiver.stop()
        if receiver.error is not None:
            log.warning("receiver stopped early: %s", receiver.error)
        chan.settimeout(5.0)
        chan.request("teardown", "bye")
    except ControlError as exc:
        raise SessionError(f"control handshake failed: {exc}") from exc
    finally:
        if receiver is not None:
            receiver.stop()
        chan.close()
    if not received:
        raise SessionError("no RTP packets received before timeout")

    packets = []
    for _, data in received:
        try:
            packets.append(parse_packet(data))
        except RtpError:
            log.warning("discarding a non-RTP datagram")
    params = {k: ok[k] for k in STREAM_PARAMS}
    rx_encoded, _ = depacketize(packets, params, expected_frames=ok["frame_count"])
    rx_raw, report = decode(rx_encoded, ok["frame_count"])

    trace_path = receiver.sink.write(out / TRACE_FILE)
    rx_enc_path = save_vtes(rx_encoded, out / RX_ENCODED_FILE)
    rx_raw_path = save_y4m(rx_raw, out / RX_RAW_FILE)
    ref_path = out / REF_RAW_FILE
    shutil.copyfile(reference_path, ref_path)
    meta = {
        "config": config.to_dict(),
        "stream": params,
        "frame_count": ok["frame_count"],
        "codec": ok.get("codec"),
        "bitrate_kbps": ok.get("bitrate_kbps"),
        "fps": config.fps_num / config.fps_den,
        "gop_size": config.gop_size,
        "rtt_samples": rtt,
        "started": started,
        "packets_sent": done.get("packets"),
        "packets_received": len(received),
        "send_duration": done.get("duration"),
    }
    (out / REPORT_FILE).write_text(json.dumps(report.to_dict()))
    (out / META_FILE).write_text(json.dumps(meta, indent=2))
    return TestArtifacts(trace_path, rx_enc_path, rx_raw_path, ref_path, report, meta)
