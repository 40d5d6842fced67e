import numpy as np
import pytest

from conftest import random_video
from vtester.codec import (EncodedFrame, EncodedStream, VtesError, decode, dismiss_first_gop, encode, load_vtes,
                           parse_record, read_vtes, save_vtes, write_vtes)
from vtester.rawvideo import FrameBuffer, RawVideo
from vtester.rle import rle_compress
from vtester.synth import moving_objects


def drop(stream, numbers):
    s = stream.empty_like()
    s.frames = [f for f in stream.frames if f.frame_number not in set(numbers)]
    return s


def static_video(n, w=16, h=16):
    f = FrameBuffer.from_bytes(w, h, bytes(range(256)) * (w * h * 3 // 2 // 256) + bytes(w * h * 3 // 2 % 256))
    return RawVideo(w, h, 25, 1, [f] * n)


def test_static_video_p_frames_are_zero_runs():
    v = static_video(30)
    s = encode(v, 15, 0)
    assert [f.frame_type for f in s.frames] == (["I"] + ["P"] * 14) * 2
    zero = rle_compress(bytes(16 * 16 * 3 // 2))
    for f in s.frames:
        if f.frame_type == "P":
            assert f.payload == zero
    assert max(f.size for f in s.frames if f.frame_type == "P") < min(f.size for f in s.frames if f.frame_type == "I")


def test_single_frame_stream():
    s = encode(static_video(1), 7, 2)
    assert len(s.frames) == 1 and s.frames[0].frame_type == "I"


def test_quantization_masks_low_bits():
    v = random_video(np.random.default_rng(0), frames=4)
    out, _ = decode(encode(v, 2, 3), 4)
    for a, b in zip(v.frames, out.frames):
        assert b.to_bytes() == ((np.frombuffer(a.to_bytes(), np.uint8) >> 3) << 3).tobytes()


@pytest.mark.parametrize("gop", [1, 3, 15])
def test_lossless_roundtrip(gop):
    v = random_video(np.random.default_rng(gop), frames=20)
    out, rep = decode(encode(v, gop, 0), 20)
    assert [f.to_bytes() for f in out.frames] == [f.to_bytes() for f in v.frames]
    assert rep.duplicated == 0 and rep.start_offset == 0 and all(rep.present)
    assert (out.fps_num, out.fps_den) == (v.fps_num, v.fps_den)


def test_first_iframe_lost_shifts_output_by_one_gop():
    v = moving_objects(32, 32, 60, objects=1, object_size=8)
    s = encode(v, 15, 0)
    out, rep = decode(drop(s, [0]), 60)
    assert rep.start_offset == -15
    assert len(out) == 45
    assert rep.dropped_gops == [0]
    assert rep.duplicated == 0
    assert out.frames[0].to_bytes() == v.frames[15].to_bytes()


def test_mid_stream_iframe_loss_hand_trace():
    # GOP 2 (frames 30..44) loses its I-frame: all 15 frames repeat output frame 29,
    # then GOP 3 decodes cleanly from its own I-frame.
    v = moving_objects(32, 32, 60, objects=2, object_size=8, seed=9)
    out, rep = decode(drop(encode(v, 15, 0), [30]), 60)
    assert rep.duplicated == 15
    assert rep.dropped_gops == [2]
    assert len(out) == 60
    for n in range(30, 45):
        assert out.frames[n].to_bytes() == v.frames[29].to_bytes()
        assert not rep.present[n]
    for n in list(range(30)) + list(range(45, 60)):
        assert out.frames[n].to_bytes() == v.frames[n].to_bytes()


def test_p_frame_after_concealment_propagates_error():
    v = moving_objects(32, 32, 15, objects=1, object_size=8, seed=2)
    out, rep = decode(drop(encode(v, 15, 0), [3]), 15)
    assert rep.duplicated == 1 and rep.present[3] is False
    assert out.frames[3].to_bytes() == out.frames[2].to_bytes()
    # frame 4 = concealed frame 3 (== 2) + delta(4-3): wrong wherever 3 differed from 2
    expect4 = (np.frombuffer(v.frames[2].to_bytes(), np.uint8)
               + np.frombuffer(v.frames[4].to_bytes(), np.uint8) - np.frombuffer(v.frames[3].to_bytes(), np.uint8))
    assert out.frames[4].to_bytes() == expect4.tobytes()


def test_sustainer_frame_count_invariant():
    v = moving_objects(32, 32, 45, objects=1, object_size=8)
    s = encode(v, 15, 1)
    rng = np.random.default_rng(4)
    for _ in range(200):
        lost = {int(n) for n in np.nonzero(rng.random(45) < 0.2)[0]}
        out, rep = decode(drop(s, lost), 45)
        assert len(out) == 45 + rep.start_offset
        assert rep.start_offset <= 0 and rep.start_offset % 15 == 0
        if 0 not in lost:
            assert len(out) == 45
        leading = -rep.start_offset
        assert rep.duplicated == sum(1 for p in rep.present[leading:] if not p)


def test_decode_errors():
    s = encode(static_video(3), 15, 0)
    with pytest.raises(ValueError):
        decode(s, 2)
    bad = s.empty_like()
    bad.frames = [EncodedFrame("I", 0, b"\x00")]
    with pytest.raises(ValueError):
        decode(bad, 1)
    short = s.empty_like()
    short.frames = [EncodedFrame("I", 0, rle_compress(bytes(10)))]
    with pytest.raises(VtesError, match="geometry"):
        decode(short, 1)


def test_vtes_layout():
    s = EncodedStream(352, 288, 25, 1, 15, 3, [EncodedFrame("I", 0, b"\x01\x02")])
    data = write_vtes(s)
    assert data[:4] == b"VTES" and data[4] == 1 and len(data) == 16 + 10 + 2
    assert data[5:7] == (352).to_bytes(2, "little")
    assert data[16:18] == b"\x46\x49"
    assert data[18:22] == bytes(4) and data[22:26] == (2).to_bytes(4, "little")
    assert s.frames[0].size == 12


def test_vtes_errors():
    good = write_vtes(encode(static_video(2), 15, 0))
    with pytest.raises(VtesError, match="magic"):
        read_vtes(b"XTES" + good[4:])
    with pytest.raises(VtesError, match="truncated"):
        read_vtes(good[:-1])
    with pytest.raises(VtesError, match="sync"):
        parse_record(b"\x47" + good[17:])


def test_vtes_file_roundtrip(tmp_path):
    s = encode(moving_objects(32, 32, 20, objects=1, object_size=8), 5, 2)
    p = save_vtes(s, tmp_path / "a.vtes")
    assert load_vtes(p) == s


def test_dismiss_first_gop():
    ref = moving_objects(16, 16, 299, objects=1, object_size=4)
    s = encode(ref, 15, 0)
    rx, rep = decode(drop(s, [0]), 299)
    assert len(rx) == 284
    rx2, ref2 = dismiss_first_gop(rx, ref, rep, 15)
    assert len(rx2) == len(ref2) == 284
    assert ref2.frames[0] is ref.frames[15]

    rx, rep = decode(s, 299)
    assert dismiss_first_gop(rx, ref, rep, 15) == (rx, ref)

    short = RawVideo(16, 16, 25, 1, rx.frames[:-1])
    with pytest.raises(ValueError, match="differ"):
        dismiss_first_gop(short, ref, rep, 15)
