import socket

import numpy as np
import pytest

from vtester import _rle_py, rle
from vtester.rawvideo import FrameBuffer, RawVideo, save_y4m
from vtester.synth import moving_objects

BACKENDS = {"python": _rle_py}
if rle.BACKEND == "cython":
    from vtester import _rle_c

    BACKENDS["cython"] = _rle_c


@pytest.fixture(params=sorted(BACKENDS))
def rle_impl(request):
    return BACKENDS[request.param]


def random_video(rng, width=16, height=12, frames=3, fps=(25, 1)):
    out = []
    for _ in range(frames):
        data = rng.integers(0, 256, size=width * height * 3 // 2, dtype=np.uint8).tobytes()
        out.append(FrameBuffer.from_bytes(width, height, data))
    return RawVideo(width, height, fps[0], fps[1], out)


@pytest.fixture
def small_video():
    return moving_objects(64, 48, 30, objects=2, object_size=12, seed=3)


@pytest.fixture
def video_db(tmp_path):
    db = tmp_path / "db"
    db.mkdir()
    save_y4m(moving_objects(96, 64, 45, objects=2, object_size=16, seed=1), db / "moving.y4m")
    return db


def free_port(kind=socket.SOCK_DGRAM) -> int:
    with socket.socket(socket.AF_INET, kind) as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if getattr(rep, "when", "call") != "call" and outcome != "error":
                continue
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" in nodeid:
                name = nodeid.split("::")[-1].removeprefix("test_")
                lines.append((name, "PASS" if outcome == "passed" else "FAIL"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, verdict in sorted(lines, key=lambda t: int(t[0].split("_")[1])):
            terminalreporter.write_line(f"{verdict}  {name}")
