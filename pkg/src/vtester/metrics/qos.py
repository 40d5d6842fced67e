"""Packet-level QoS metrics computed from trace records."""

from __future__ import annotations

from bisect import bisect_right
from typing import Sequence

from ..trace import PacketRecord


def latency(rtt_samples: Sequence[float]) -> float:
    """One-way latency estimate: mean of RTT/2."""
    if not rtt_samples:
        raise ValueError("latency needs at least one RTT sample")
    return sum(r / 2 for r in rtt_samples) / len(rtt_samples)


def _need(records, n):
    if len(records) < n:
        raise ValueError(f"need at least {n} packet records, got {len(records)}")


def interarrival(records: Sequence[PacketRecord]) -> list[float]:
    _need(records, 2)
    return [b.arrival - a.arrival for a, b in zip(records, records[1:])]


def jitter(records: Sequence[PacketRecord]) -> list[float]:
    """RFC 3550 interarrival jitter, one value per packet, starting at 0."""
    _need(records, 2)
    j = 0.0
    out = [j]
    for a, b in zip(records, records[1:]):
        d = (b.arrival - a.arrival) - (b.rtp_ts - a.rtp_ts)
        j += (abs(d) - j) / 16
        out.append(j)
    return out


def clock_skew(records: Sequence[PacketRecord]) -> list[float]:
    """S_i - R_i, shifted so the first value is 0 (clock epochs are arbitrary)."""
    _need(records, 1)
    t0 = records[0].rtp_ts - records[0].arrival
    return [(r.rtp_ts - r.arrival) - t0 for r in records]


def bandwidth(records: Sequence[PacketRecord], window: float = 1.0) -> list[float]:
    """Bits/s over the trailing window (R_i - window, R_i], sampled at each arrival."""
    _need(records, 1)
    arrivals = [r.arrival for r in records]
    prefix = [0]
    for r in records:
        prefix.append(prefix[-1] + r.size)
    out = []
    for i, t in enumerate(arrivals):
        hi = bisect_right(arrivals, t)  # includes packets sharing this arrival time
        lo = bisect_right(arrivals, t - window)
        out.append(8.0 * (prefix[hi] - prefix[lo]))
    return out


def lost_between(seqs: Sequence[int]) -> int:
    total = 0
    for a, b in zip(seqs, seqs[1:]):
        if b < a:
            raise ValueError(f"sequence decreases ({a} -> {b}); reordered traces are not supported")
        total += b - (a + 1)
    return total


def plr(records: Sequence[PacketRecord]) -> float:
    """Sequence gaps divided by the number of *received* packets."""
    _need(records, 2)
    seqs = [r.seq for r in records]
    return lost_between(seqs) / len(seqs)


def pld(records: Sequence[PacketRecord], k_intervals: int) -> tuple[list[float], list[int]]:
    """Per-interval loss rate over K equal slices of [first arrival, last arrival].

    Returns ``(values, sparse)`` where ``sparse`` lists the intervals that
    held fewer than two packets and were reported as 0.
    """
    _need(records, 2)
    if k_intervals < 1:
        raise ValueError("k_intervals must be >= 1")
    t0, t1 = records[0].arrival, records[-1].arrival
    span = t1 - t0
    buckets: list[list[int]] = [[] for _ in range(k_intervals)]
    for r in records:
        k = k_intervals - 1 if span <= 0 else min(int((r.arrival - t0) / span * k_intervals), k_intervals - 1)
        buckets[k].append(r.seq)
    values, sparse = [], []
    for k, seqs in enumerate(buckets):
        if len(seqs) < 2:
            values.append(0.0)
            sparse.append(k)
        else:
            values.append(lost_between(seqs) / len(seqs))
    return values, sparse
