"""Deterministic synthetic test sequences (moving flat objects over a low-level background)."""

from __future__ import annotations

import numpy as np

from .rawvideo import FrameBuffer, RawVideo

CIF = (352, 288)


def _bounce(p0: float, v: float, t: int, lo: int, hi: int) -> int:
    span = hi - lo
    if span <= 0:
        return lo
    x = (p0 - lo + v * t) % (2 * span)
    return int(lo + (x if x <= span else 2 * span - x))


def moving_objects(width: int = CIF[0], height: int = CIF[1], frames: int = 299, fps: tuple[int, int] = (25, 1),
                   objects: int = 3, object_size: int = 48, background_levels: int = 8, seed: int = 0) -> RawVideo:
    """Flat-coloured squares bouncing around a faint gradient.

    Background samples stay below ``background_levels`` in every plane, so
    a quantizer shift of log2(background_levels) removes them entirely;
    that keeps intra frames small and makes the quantizer matter.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width]
    bg_y = ((xx * background_levels) // width + (yy * background_levels) // height) // 2
    bg_y = np.clip(bg_y, 0, background_levels - 1).astype(np.uint8)
    bg_c = bg_y[::2, ::2].copy()
    specs = []
    for _ in range(objects):
        size = min(int(object_size * rng.uniform(0.6, 1.2)), width, height) // 2 * 2
        specs.append({
            "size": size,
            "color": rng.integers(64, 256, size=3).astype(np.uint8),
            "pos": (rng.uniform(0, width - size), rng.uniform(0, height - size)),
            "vel": (rng.uniform(-4, 4), rng.uniform(-3, 3)),
        })
    out = []
    for t in range(frames):
        y, u, v = bg_y.copy(), bg_c.copy(), bg_c.copy()
        for s in specs:
            size = s["size"]
            x0 = _bounce(s["pos"][0], s["vel"][0], t, 0, width - size) // 2 * 2
            y0 = _bounce(s["pos"][1], s["vel"][1], t, 0, height - size) // 2 * 2
            y[y0:y0 + size, x0:x0 + size] = s["color"][0]
            u[y0 // 2:(y0 + size) // 2, x0 // 2:(x0 + size) // 2] = s["color"][1]
            v[y0 // 2:(y0 + size) // 2, x0 // 2:(x0 + size) // 2] = s["color"][2]
        out.append(FrameBuffer(width, height, y.tobytes(), u.tobytes(), v.tobytes()))
    return RawVideo(width, height, fps[0], fps[1], out)
