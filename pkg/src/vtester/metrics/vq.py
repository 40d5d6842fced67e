"""Picture-quality metrics on aligned raw videos."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np
from scipy.ndimage import correlate1d

from ..rawvideo import RawVideo

PSNR_CLAMP = 100.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1, SSIM_K2 = 0.01, 0.03

# (threshold dB, score, strict); first matching row wins, else score 1.
DEFAULT_MOS_TABLE: tuple[tuple[float, int, bool], ...] = (
    (37.0, 5, True),
    (31.0, 4, False),
    (25.0, 3, False),
    (20.0, 2, False),
)


class AlignmentError(ValueError):
    pass


def _check_pair(rx: RawVideo, ref: RawVideo) -> None:
    if (rx.width, rx.height) != (ref.width, ref.height):
        raise AlignmentError(f"geometry mismatch {rx.width}x{rx.height} vs {ref.width}x{ref.height}")
    if len(rx) != len(ref):
        raise AlignmentError(f"frame count mismatch: rx={len(rx)} ref={len(ref)}; align first")


def psnr_frame(a: np.ndarray, b: np.ndarray) -> float:
    mse = np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2)
    if mse == 0:
        return PSNR_CLAMP
    return 10.0 * math.log10(255.0 ** 2 / mse)


def psnr_series(rx: RawVideo, ref: RawVideo) -> list[float]:
    """Per-frame luma PSNR in dB, 100 for identical frames."""
    _check_pair(rx, ref)
    return [psnr_frame(a.luma(), b.luma()) for a, b in zip(rx.frames, ref.frames)]


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2
    g = np.exp(-(x ** 2) / (2 * sigma ** 2))
    return g / g.sum()


def _filter_valid(img: np.ndarray, w: np.ndarray) -> np.ndarray:
    r = len(w) // 2
    out = correlate1d(correlate1d(img, w, axis=0, mode="constant"), w, axis=1, mode="constant")
    return out[r:-r, r:-r]


def ssim_frame(a: np.ndarray, b: np.ndarray) -> float:
    h, w = a.shape
    if h < SSIM_WINDOW or w < SSIM_WINDOW:
        raise ValueError(f"SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {w}x{h}")
    win = gaussian_window()
    x = a.astype(np.float64)
    y = b.astype(np.float64)
    c1 = (SSIM_K1 * 255) ** 2
    c2 = (SSIM_K2 * 255) ** 2
    mx, my = _filter_valid(x, win), _filter_valid(y, win)
    sxx = _filter_valid(x * x, win) - mx * mx
    syy = _filter_valid(y * y, win) - my * my
    sxy = _filter_valid(x * y, win) - mx * my
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


def ssim_series(rx: RawVideo, ref: RawVideo) -> list[float]:
    _check_pair(rx, ref)
    return [ssim_frame(a.luma(), b.luma()) for a, b in zip(rx.frames, ref.frames)]


def mos_score(psnr: float, table=DEFAULT_MOS_TABLE) -> int:
    for threshold, score, strict in table:
        if psnr > threshold or (not strict and psnr == threshold):
            return score
    return 1


def mos_from_psnr(psnr: Sequence[float], table=DEFAULT_MOS_TABLE) -> list[int]:
    return [mos_score(p, table) for p in psnr]


def div_from_mos(rx_mos: Sequence[int], ref_mos: Sequence[int]) -> float:
    """Fraction of frames whose MOS fell below the reference encoding's MOS."""
    if len(rx_mos) != len(ref_mos):
        raise ValueError(f"MOS series lengths differ: {len(rx_mos)} vs {len(ref_mos)}")
    if not rx_mos:
        return 0.0
    return sum(1 for a, b in zip(rx_mos, ref_mos) if a < b) / len(rx_mos)


def div_intervals(rx_mos: Sequence[int], ref_mos: Sequence[int], k: int) -> list[float]:
    """DIV over K consecutive equal-duration slices of the frame sequence."""
    n = len(rx_mos)
    if len(ref_mos) != n:
        raise ValueError("MOS series lengths differ")
    bounds = [round(i * n / k) for i in range(k + 1)]
    return [div_from_mos(rx_mos[a:b], ref_mos[a:b]) for a, b in zip(bounds, bounds[1:])]


@dataclass(frozen=True)
class G1070Coefficients:
    v1: float
    v2: float
    v3: float
    v4: float
    v5: float
    v6: float
    v7: float
    v8: float
    v9: float
    v10: float
    v11: float
    v12: float

    @classmethod
    def from_mapping(cls, m) -> G1070Coefficients:
        return cls(**{f.name: float(m[f.name]) for f in fields(cls)})

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class G1070Error(ValueError):
    pass


def g1070_terms(c: G1070Coefficients, br_v: float, fr_v: float) -> dict[str, float]:
    """Intermediate quantities of the G.1070 video-quality model at one operating point."""
    o_fr = c.v1 + c.v2 * br_v
    i_ofr = c.v3 - c.v3 / (1 + (br_v / c.v4) ** c.v5)
    d_frv = c.v6 + c.v7 * br_v
    d_pplv = c.v10 + c.v11 * math.exp(-fr_v / c.v8) + c.v12 * math.exp(-br_v / c.v9)
    if not 1 <= o_fr <= 30:
        raise G1070Error(f"O_fr = {o_fr} outside [1, 30]")
    if not 0 <= i_ofr <= 4:
        raise G1070Error(f"I_Ofr = {i_ofr} outside [0, 4]")
    if d_frv <= 0:
        raise G1070Error(f"D_FrV = {d_frv} is not positive")
    if d_pplv <= 0:
        raise G1070Error(f"D_PplV = {d_pplv} is not positive")
    i_coding = i_ofr * math.exp(-((math.log(fr_v) - math.log(o_fr)) ** 2) / (2 * d_frv ** 2))
    return {"O_fr": o_fr, "I_Ofr": i_ofr, "D_FrV": d_frv, "D_PplV": d_pplv, "I_coding": i_coding}


def g1070_vq(c: G1070Coefficients, br_v: float, fr_v: float, ppl_v: float) -> float:
    """Video quality Vq (1..5) from bitrate kbit/s, frame rate and packet-loss percent."""
    t = g1070_terms(c, br_v, fr_v)
    return 1 + t["I_coding"] * math.exp(-ppl_v / t["D_PplV"])
