import math

import pytest

from vtester.analysis import AnalysisError, analyze, build_context
from vtester.codec import decode, encode
from vtester.metrics import BUILTIN_MEASURES, AnalysisContext, MeasureResult, MeterRegistry, default_registry
from vtester.metrics.core import DuplicateMeasureError, Skip, series, value
from vtester.net import simulate_transmission
from vtester.synth import moving_objects
from vtester.trace import PacketRecord


def records(n=50, step=0.04):
    return [PacketRecord(size=100, seq=i, rtp_ts=i * 3600, arrival=i * step) for i in range(n)]


def test_builtin_listing():
    assert default_registry().names() == list(BUILTIN_MEASURES)
    assert default_registry().names("bs") == [n for n in BUILTIN_MEASURES if n.startswith("bs.")]


def test_duplicate_registration_rejected():
    reg = default_registry()
    with pytest.raises(DuplicateMeasureError):
        reg.register("qos", "plr", (), lambda c: value("plr", 0, ""))
    with pytest.raises(ValueError):
        reg.register("audio", "x", (), lambda c: value("x", 0, ""))


def test_same_name_in_two_meters_needs_qualified_lookup():
    reg = MeterRegistry()
    reg.register("qos", "foo", (), lambda c: value("foo", 1, ""))
    reg.register("vq", "foo", (), lambda c: value("foo", 2, ""))
    assert reg.lookup("foo") is None
    assert reg.lookup("vq.foo").meter == "vq"


def test_custom_measure_runs_without_core_changes():
    reg = default_registry()

    @reg.measure("qos", "packet_count", requires=("packet_records",))
    def packet_count(ctx):
        return value("ignored", len(ctx.packet_records), "packets")

    ctx = AnalysisContext(packet_records=records(7))
    (res,) = reg.run(["qos.packet_count"], ctx)
    assert (res.name, res.meter, res.data) == ("packet_count", "qos", 7.0)
    assert "qos.packet_count" in reg.names()


def test_skips_and_errors_are_recorded():
    reg = default_registry()
    reg.register("vq", "boom", (), lambda c: 1 / 0)
    ctx = AnalysisContext(packet_records=records())
    out = reg.run(["qos.plr", "vq.psnr", "nope", "vq.boom", "vq.g1070"], ctx)
    assert [type(r) for r in out] == [MeasureResult, Skip, Skip, Skip, Skip]
    assert "rx_raw" in out[1].reason and out[1].reason.startswith("missing")
    assert out[2].reason == "unknown measure"
    assert out[3].reason.startswith("error: ZeroDivisionError")
    assert "options.g1070" in out[4].reason


def test_dotted_requirements():
    ctx = AnalysisContext(session_meta={"fps": 25}, options={"g1070": None})
    assert ctx.has("session_meta.fps")
    assert not ctx.has("session_meta.bitrate_kbps")
    assert not ctx.has("options.g1070")
    assert not ctx.has("rx_raw")


def test_result_validation():
    with pytest.raises(ValueError):
        MeasureResult("x", "table", "", 1.0)
    with pytest.raises(ValueError):
        series("x", [1, 2], "", xs=[1, 1])
    s = series("x", [1, 2, 3], "u")
    assert s.data == [(0.0, 1.0), (1.0, 2.0), (2.0, 3.0)]


def _full_ctx(loss=0.05, seed=4):
    video = moving_objects(64, 48, 60, objects=2, object_size=10, seed=1)
    stream = encode(video, 10, 2)
    run = simulate_transmission(stream, loss, seed, mtu_payload=300)
    rx, report = decode(run.rx_encoded, len(video))
    meta = {"rtt_samples": [0.01, 0.012], "bitrate_kbps": stream.bitrate_kbps(), "fps": 25.0, "gop_size": 10}
    return AnalysisContext(packet_records=run.records, rtt_samples=meta["rtt_samples"], rx_encoded=run.rx_encoded,
                           ref_encoded=stream, rx_raw=rx, ref_raw=video, decode_report=report,
                           session_meta=meta, options={"pld_k": 5})


def test_all_builtins_run_on_full_context():
    out = default_registry().run(BUILTIN_MEASURES, _full_ctx())
    skipped = {r.name: r.reason for r in out if r.skipped}
    assert set(skipped) == {"g1070"}  # no coefficients supplied
    assert [r.name for r in out] == [n.split(".")[1] for n in BUILTIN_MEASURES]


def test_run_is_deterministic_and_order_preserving():
    names = list(reversed(BUILTIN_MEASURES))
    a = default_registry().run(names, _full_ctx())
    b = default_registry().run(names, _full_ctx())
    assert [r.to_dict() for r in a] == [r.to_dict() for r in b]
    assert [r.name for r in a] == [n.split(".")[1] for n in names]


def test_first_gop_dismissal_in_vq():
    # losing frame 0 drops the first GOP; VQ compares against the trimmed reference
    video = moving_objects(32, 32, 30, objects=1, object_size=6)
    stream = encode(video, 10, 0)
    rx_stream = stream.empty_like()
    rx_stream.frames = [f for f in stream.frames if f.frame_number != 0]
    rx, report = decode(rx_stream, len(video))
    assert report.start_offset == -10
    ctx = AnalysisContext(rx_raw=rx, ref_raw=video, decode_report=report, rx_encoded=rx_stream, ref_encoded=stream)
    (psnr,) = default_registry().run(["vq.psnr"], ctx)
    assert len(psnr.data) == 20
    assert psnr.data[0][0] == 10
    assert all(y == 100.0 for _, y in psnr.data)


def test_build_context_requires_input():
    with pytest.raises(AnalysisError):
        build_context()


def test_analyze_trace_only(tmp_path):
    from vtester.trace import CapturedPacket, synthesize_frame, write_pcap
    from vtester.rtp import packetize

    stream = encode(moving_objects(32, 32, 20, objects=1, object_size=6), 5, 0)
    pkts = [CapturedPacket.at(i * 0.01, synthesize_frame("127.0.0.2", "127.0.0.1", 4000, 5004, p.serialize())) for i, p in enumerate(packetize(stream, 100))]
    write_pcap(pkts, tmp_path / "t.pcap")
    out = analyze(build_context(tmp_path / "t.pcap"), BUILTIN_MEASURES)
    kinds = {r.meter: [] for r in out}
    for r in out:
        kinds[r.meter].append(r.skipped)
    assert kinds["qos"][0] and not any(kinds["qos"][1:])  # latency is the only qos measure needing rtt
    assert all(kinds["bs"]) and all(kinds["vq"])
    plr = next(r for r in out if r.name == "plr")
    assert plr.data == 0.0 and not math.isnan(plr.data)
