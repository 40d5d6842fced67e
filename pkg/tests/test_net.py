import socket
import threading
import time

import pytest

from conftest import free_port
from vtester.codec import encode, load_vtes
from vtester.metrics import qos
from vtester.net import (ImpairProxy, LossModel, SessionConfig, SessionError, StreamReceiver, TestServer, measure_rtt,
                         run_client, send_stream, simulate_transmission)
from vtester.net.control import ControlChannel
from vtester.rawvideo import load_y4m
from vtester.rtp import RtpPacket, depacketize, packetize, parse_packet
from vtester.synth import moving_objects
from vtester.trace import extract_rtp_records, read_pcap

pytestmark = pytest.mark.network


@pytest.fixture
def server(video_db):
    with TestServer(video_db, 0) as srv:
        yield srv


def session(server, **kw):
    kw.setdefault("rtp_port", free_port())
    kw.setdefault("pacing", 0.0)
    kw.setdefault("idle_timeout", 0.3)
    kw.setdefault("rtt_probes", 3)
    return SessionConfig("moving", control_port=server.port, **kw)


class DelayProxy:
    """TCP forwarder that holds every server->client chunk for ``delay`` seconds."""

    def __init__(self, upstream_port, delay):
        self.delay = delay
        self.upstream = ("127.0.0.1", upstream_port)
        self.sock = socket.socket()
        self.sock.bind(("127.0.0.1", 0))
        self.sock.listen()
        self.port = self.sock.getsockname()[1]
        threading.Thread(target=self._accept, daemon=True).start()

    def _accept(self):
        while True:
            try:
                client, _ = self.sock.accept()
            except OSError:
                return
            up = socket.create_connection(self.upstream)
            threading.Thread(target=self._pump, args=(client, up, 0.0), daemon=True).start()
            threading.Thread(target=self._pump, args=(up, client, self.delay), daemon=True).start()

    @staticmethod
    def _pump(src, dst, delay):
        try:
            while chunk := src.recv(65536):
                if delay:
                    time.sleep(delay)
                dst.sendall(chunk)
        except OSError:
            pass
        finally:
            for s in (src, dst):
                try:
                    s.shutdown(socket.SHUT_RDWR)
                except OSError:
                    pass

    def close(self):
        self.sock.close()


def test_lossless_session_artifacts(server, video_db, tmp_path):
    art = run_client(session(server), tmp_path / "run", video_db)
    assert all(p.exists() for p in art.paths())
    assert art.decode_report.duplicated == 0 and art.decode_report.start_offset == 0
    ref = load_y4m(video_db / "moving.y4m")
    expect = encode(ref, 15, 0)
    assert load_vtes(art.rx_encoded_path) == expect
    assert load_y4m(art.rx_raw_path).frames == ref.frames
    assert len(art.session_meta["rtt_samples"]) == 3


def test_capture_completeness(server, video_db, tmp_path):
    cfg = session(server)
    art = run_client(cfg, tmp_path / "run", video_db)
    recs = extract_rtp_records(read_pcap(art.trace_path), cfg.rtp_port)
    assert len(recs) == art.session_meta["packets_received"] == art.session_meta["packets_sent"]
    assert [r.seq for r in recs] == list(range(len(recs)))


@pytest.mark.parametrize("transport", ["udp_unicast", "tcp"])
def test_transports_deliver_identical_streams(server, video_db, tmp_path, transport):
    art = run_client(session(server, transport=transport), tmp_path / transport, video_db)
    assert load_vtes(art.rx_encoded_path) == encode(load_y4m(video_db / "moving.y4m"), 15, 0)


def test_multicast(server, video_db, tmp_path):
    cfg = session(server, transport="udp_multicast", multicast_group="239.255.10.1")
    try:
        art = run_client(cfg, tmp_path / "mc", video_db)
    except (SessionError, OSError) as exc:
        pytest.skip(f"multicast unavailable here: {exc}")
    assert art.decode_report.duplicated == 0


def test_concurrent_sessions(server, video_db, tmp_path):
    results, errors = {}, []

    def go(name, **kw):
        try:
            results[name] = run_client(session(server, **kw), tmp_path / name, video_db)
        except Exception as exc:  # noqa: BLE001
            errors.append(exc)

    threads = [threading.Thread(target=go, args=("a",), kwargs={"gop_size": 5, "pacing": 0.2}),
               threading.Thread(target=go, args=("b",), kwargs={"gop_size": 9, "quant_shift": 2, "pacing": 0.2})]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    assert load_vtes(results["a"].rx_encoded_path).gop_size == 5
    assert load_vtes(results["b"].rx_encoded_path).gop_size == 9


def test_control_errors_keep_connection(server):
    chan = ControlChannel.connect("127.0.0.1", server.port)
    try:
        chan.send("setup", video_id="nope", rtp_port=5004)
        reply = chan.recv()
        assert reply["type"] == "error" and "nope" in reply["message"]
        chan.send("setup", video_id="moving", bogus=1)
        assert chan.recv()["type"] == "error"
        chan.send("play")
        assert chan.recv()["type"] == "error"
        assert chan.request("hello", "hello", version=1)["version"] == 1
        assert chan.request("teardown", "bye")["type"] == "bye"
        assert chan.sock.recv(1) == b""  # server released the session
    finally:
        chan.close()


def test_rtt_loopback_and_zero(server):
    chan = ControlChannel.connect("127.0.0.1", server.port)
    try:
        assert measure_rtt(chan, 0) == []
        samples = measure_rtt(chan, 20)
        assert len(samples) == 20 and all(0 < s < 0.1 for s in samples)
    finally:
        chan.close()


def test_rtt_with_injected_delay(server):
    proxy = DelayProxy(server.port, 0.050)
    chan = ControlChannel.connect("127.0.0.1", proxy.port)
    try:
        samples = measure_rtt(chan, 5)
        assert all(0.050 <= s <= 0.150 for s in samples)
    finally:
        chan.close()
        proxy.close()


def test_latency_from_fixed_delay(server):
    proxy = DelayProxy(server.port, 0.060)
    chan = ControlChannel.connect("127.0.0.1", proxy.port)
    try:
        samples = measure_rtt(chan, 50)
    finally:
        chan.close()
        proxy.close()
    assert qos.latency(samples) == pytest.approx(0.030, abs=0.005)


def _tiny_packets(frames):
    stream = encode(moving_objects(16, 16, frames, objects=1, object_size=4), 15, 0)
    return stream, packetize(stream, 64)


def test_send_pacing():
    stream, packets = _tiny_packets(50)
    port = free_port()
    rx = StreamReceiver("udp_unicast", port, host="127.0.0.1").start()
    report = send_stream(packets, "udp_unicast", ("127.0.0.1", port), pacing=1.0)
    rx.wait_idle(0.2)
    got = rx.stop()
    assert report.duration >= 1.96
    assert len(got) == len(packets)
    # frame n is never sent before n/25 s after the first
    arrivals = {}
    for t, data in got:
        p = parse_packet(data)
        arrivals.setdefault(p.timestamp, t)
    t0 = min(arrivals.values())
    for ts, t in arrivals.items():
        assert t - t0 >= ts / 90000 - 0.002


def test_burst_send_reassembles():
    stream, packets = _tiny_packets(30)
    port = free_port()
    rx = StreamReceiver("udp_unicast", port, host="127.0.0.1").start()
    send_stream(packets, "udp_unicast", ("127.0.0.1", port), pacing=0)
    rx.wait_idle(0.2)
    got = rx.stop()
    out, _ = depacketize([parse_packet(d) for _, d in got], stream.params())
    assert out == stream


def test_tcp_disconnect_midstream_keeps_partial():
    port = free_port(socket.SOCK_STREAM)
    rx = StreamReceiver("tcp", port, host="127.0.0.1").start()
    s = socket.create_connection(("127.0.0.1", port))
    from vtester.rtp import frame_tcp

    s.sendall(frame_tcp(RtpPacket(1, 0)) + frame_tcp(RtpPacket(2, 0))[:5])
    s.close()
    rx.wait_idle(0.3)
    got = rx.stop()
    assert [parse_packet(d).sequence for _, d in got] == [1]


def test_loss_model_edges():
    assert not any(LossModel(0.0, 1).drop() for _ in range(1000))
    assert all(LossModel(1.0, 1).drop() for _ in range(1000))
    a, b = LossModel(0.3, 42), LossModel(0.3, 42)
    assert [a.drop() for _ in range(500)] == [b.drop() for _ in range(500)]
    with pytest.raises(ValueError):
        LossModel(1.5, 0)


def _through_proxy(loss_p, seed, n, payload=b"x" * 20):
    out_port = free_port()
    sink = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    sink.bind(("127.0.0.1", out_port))
    sink.settimeout(0.2)
    got = []
    with ImpairProxy(0, ("127.0.0.1", out_port), loss_p, seed) as proxy:
        tx = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        for i in range(n):
            tx.sendto(i.to_bytes(4, "big") + payload, ("127.0.0.1", proxy.port))
        deadline = time.time() + 5
        while proxy.seen < n and time.time() < deadline:
            time.sleep(0.01)
        try:
            while True:
                got.append(int.from_bytes(sink.recv(100)[:4], "big"))
        except socket.timeout:
            pass
        log = list(proxy.drop_log)
    sink.close()
    tx.close()
    return got, log


def test_proxy_forwarding_edges():
    got, log = _through_proxy(0.0, 1, 200)
    assert got == list(range(200)) and not any(log)
    got, log = _through_proxy(1.0, 1, 200)
    assert got == [] and all(log)


def test_proxy_matches_drop_log():
    got, log = _through_proxy(0.2, 5, 300)
    assert got == [i for i, d in enumerate(log) if not d]


def test_fully_lossy_session_times_out(server, video_db, tmp_path):
    port = free_port()
    with ImpairProxy(0, ("127.0.0.1", port), 1.0, 0) as proxy:
        cfg = session(server, rtp_port=port, send_to=f"127.0.0.1:{proxy.port}")
        with pytest.raises(SessionError, match="no RTP packets"):
            run_client(cfg, tmp_path / "dead", video_db, first_packet_timeout=0.5)


def test_lossy_session_plr(server, video_db, tmp_path):
    port = free_port()
    with ImpairProxy(0, ("127.0.0.1", port), 0.02, 3) as proxy:
        cfg = session(server, rtp_port=port, send_to=f"127.0.0.1:{proxy.port}")
        art = run_client(cfg, tmp_path / "lossy", video_db)
        log = list(proxy.drop_log)
    recs = extract_rtp_records(read_pcap(art.trace_path), port)
    assert len(recs) == log.count(False)
    # gaps seen by the receiver are exactly the interior drops
    first = log.index(False)
    last = len(log) - 1 - log[::-1].index(False)
    interior_drops = sum(log[first:last + 1])
    assert qos.plr(recs) == interior_drops / len(recs)
    assert qos.plr(recs) <= 0.08


def test_simulated_channel_uses_proxy_model():
    stream = encode(moving_objects(48, 32, 30, objects=2, object_size=8), 15, 0)
    a = simulate_transmission(stream, 0.1, 9, mtu_payload=200)
    b = simulate_transmission(stream, 0.1, 9, mtu_payload=200)
    assert a.rx_encoded == b.rx_encoded and a.drop_log == b.drop_log
    m = LossModel(0.1, 9)
    assert a.drop_log == [m.drop() for _ in a.drop_log]
    assert len(a.records) == a.drop_log.count(False)


def test_proxied_transmission_matches_simulation():
    from vtester.net import proxied_transmission

    stream = encode(moving_objects(96, 64, 40, objects=2, object_size=12), 10, 1)
    real = proxied_transmission(stream, 0.1, 21, mtu_payload=300)
    sim = simulate_transmission(stream, 0.1, 21, mtu_payload=300)
    assert real.undelivered == 0
    assert real.drop_log == sim.drop_log
    assert real.rx_encoded == sim.rx_encoded
    assert [r.seq for r in real.records] == [r.seq for r in sim.records]
