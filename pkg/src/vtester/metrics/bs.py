"""Bitstream metrics: framing structure, GOP-size estimate and I-frame loss."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from ..codec import EncodedStream


@dataclass(frozen=True)
class FramingEntry:
    frame_number: int
    frame_type: str
    size: int


def framing_structure(stream: EncodedStream) -> list[FramingEntry]:
    return [FramingEntry(f.frame_number, f.frame_type, f.size) for f in stream.frames]


def observed_gops(structure: Sequence[FramingEntry]) -> list[int]:
    i_frames = [e.frame_number for e in structure if e.frame_type == "I"]
    if len(i_frames) < 2:
        raise ValueError("need at least two received I-frames to measure GOP sizes")
    return [b - a for a, b in zip(i_frames, i_frames[1:])]


def _moments(gops: Sequence[float]) -> tuple[float, float]:
    if not gops:
        raise ValueError("empty GOP list")
    mu = sum(gops) / len(gops)
    sigma = math.sqrt(sum((g - mu) ** 2 for g in gops) / len(gops))
    return mu, sigma


def gop_size_estimate(gops: Sequence[float]) -> tuple[float, bool]:
    """Mean of the GOPs inside [mu - sigma, mu + sigma] (population sigma).

    Returns ``(estimate, fallback)``; ``fallback`` is True when no value
    fell inside the band and the plain mean was used.
    """
    mu, sigma = _moments(gops)
    # tiny slack so sigma == 0 keeps every element despite rounding in mu
    eps = 1e-9 * max(1.0, abs(mu))
    kept = [g for g in gops if mu - sigma - eps <= g <= mu + sigma + eps]
    if not kept:
        return mu, True
    return sum(kept) / len(kept), False


def iframe_loss(gops: Sequence[float]) -> tuple[int, float]:
    """Count GOPs longer than mu + sigma as one lost I-frame each.

    Rate = count / (count + received I-frames), received = len(gops) + 1.
    """
    mu, sigma = _moments(gops)
    count = sum(1 for g in gops if g > mu + sigma + 1e-9 * max(1.0, abs(mu)))
    return count, count / (count + len(gops) + 1)


def iframe_loss_strict(gops: Sequence[float], estimate: float) -> int:
    """Lost I-frames counting round(GOP_n / estimate) - 1 per GOP."""
    return sum(max(0, round(g / estimate) - 1) for g in gops)
