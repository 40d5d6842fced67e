import io

import numpy as np
import pytest

from conftest import random_video
from vtester.rawvideo import FrameBuffer, RawVideo, Y4MError, read_y4m, write_y4m


def test_smallest_frame():
    data = b"YUV4MPEG2 W4 H4 F25:1\nFRAME\n" + bytes(range(24))
    v = read_y4m(data)
    assert (v.width, v.height, v.fps_num, v.fps_den, len(v)) == (4, 4, 25, 1, 1)
    assert v.frames[0].y_plane == bytes(range(16))
    assert v.frames[0].v_plane == bytes(range(20, 24))


def test_header_only():
    v = read_y4m(b"YUV4MPEG2 W8 H2 F30000:1001 Ip A1:1 C420\n")
    assert v.frames == [] and (v.fps_num, v.fps_den) == (30000, 1001)


def test_write_layout():
    v = RawVideo(4, 4, 25, 1, [FrameBuffer.from_bytes(4, 4, bytes(24))])
    out = write_y4m(v)
    header = b"YUV4MPEG2 W4 H4 F25:1 Ip A1:1 C420\n"
    assert len(header) == 35
    assert out == header + b"FRAME\n" + bytes(24)
    assert write_y4m(RawVideo(4, 4, 25, 1)) == header


def test_stream_output():
    v = random_video(np.random.default_rng(1), frames=2)
    buf = io.BytesIO()
    write_y4m(v, buf)
    assert buf.getvalue() == write_y4m(v)


@pytest.mark.parametrize("data, msg", [
    (b"YUV4MPEG W4 H4\n", "signature"),
    (b"YUV4MPEG2 W4 H4 C444\n", "colourspace"),
    (b"YUV4MPEG2 W4 H4\nFRAME\n" + bytes(10), "truncated"),
    (b"YUV4MPEG2 W4\n", "W or H"),
    (b"YUV4MPEG2 W4 H4", "header"),
])
def test_errors(data, msg):
    with pytest.raises(Y4MError, match=msg):
        read_y4m(data)


def test_ignored_tags_and_frame_params():
    v = read_y4m(b"YUV4MPEG2 W2 H2 F1:1 It A4:3 XYSCSS=420\nFRAME Ixyz\n" + bytes(6))
    assert len(v) == 1


def test_geometry_invariants():
    with pytest.raises(ValueError):
        FrameBuffer(3, 2, bytes(6), bytes(1), bytes(1))
    with pytest.raises(ValueError):
        FrameBuffer(4, 4, bytes(16), bytes(4), bytes(3))
    with pytest.raises(ValueError):
        RawVideo(4, 4, 0, 1)
    with pytest.raises(ValueError):
        RawVideo(4, 4, 25, 1, [FrameBuffer.from_bytes(2, 2, bytes(6))])


def test_roundtrip_canonical_bytes():
    rng = np.random.default_rng(5)
    for w, h, n in [(2, 2, 0), (16, 8, 3), (6, 10, 1)]:
        s = write_y4m(random_video(rng, w, h, n, fps=(30000, 1001)))
        assert write_y4m(read_y4m(s)) == s
