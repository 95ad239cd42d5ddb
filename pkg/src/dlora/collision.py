"""Co-channel, co-SF collision rules with the power capture effect."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .phy import LoRaParams

CAPTURE_THRESHOLD_DB = 6.0

# Minimum CF separation (Hz) keyed on the wider of the two bandwidths.
CF_GUARD_HZ: dict[float, float] = {125e3: 30e3, 250e3: 60e3, 500e3: 120e3}


@dataclass(eq=False, slots=True)
class Transmission:
    packet_id: int
    node_id: int
    params: LoRaParams
    start: float
    end: float
    rssi: float
    payload_bytes: int = 0
    toa: float = 0.0
    energy: float = 0.0
    ended: bool = field(default=False, repr=False)

    def __post_init__(self) -> None:
        if not self.end > self.start:
            raise ValueError(f"transmission {self.packet_id}: end {self.end} <= start {self.start}")


def cf_guard(bw: float) -> float:
    return CF_GUARD_HZ[float(bw)]


def timing_overlap(a: Transmission, b: Transmission) -> bool:
    return a.start < b.end and b.start < a.end


def cf_collision(a: Transmission, b: Transmission) -> bool:
    pa, pb = a.params, b.params
    return abs(pa.cf - pb.cf) < cf_guard(max(pa.bw, pb.bw))


def sf_collision(a: Transmission, b: Transmission) -> bool:
    return a.params.sf == b.params.sf


def power_capture(
    a: Transmission,
    colliders: Iterable[Transmission],
    threshold_db: float = CAPTURE_THRESHOLD_DB,
) -> bool:
    """Whether ``a`` survives its colliders by being strong enough."""
    strongest = max((c.rssi for c in colliders), default=None)
    if strongest is None:
        return True
    return a.rssi >= strongest + threshold_db


def colliders_of(a: Transmission, others: Iterable[Transmission]) -> list[Transmission]:
    return [
        b
        for b in others
        if b is not a and timing_overlap(a, b) and sf_collision(a, b) and cf_collision(a, b)
    ]


def is_collided(
    a: Transmission,
    others: Iterable[Transmission],
    threshold_db: float = CAPTURE_THRESHOLD_DB,
) -> bool:
    colliders = colliders_of(a, others)
    return bool(colliders) and not power_capture(a, colliders, threshold_db)


def resolve_collisions(
    batch: Sequence[Transmission],
    threshold_db: float = CAPTURE_THRESHOLD_DB,
) -> dict[int, bool]:
    """Map packet_id to its collision flag (True = lost to collision)."""
    order = sorted(batch, key=lambda t: t.start)
    starts = [t.start for t in order]
    max_len = max((t.end - t.start for t in order), default=0.0)
    out: dict[int, bool] = {}
    for t in order:
        # only transmissions starting within (t.start - max_len, t.end) can overlap
        lo = bisect.bisect_left(starts, t.start - max_len - 1e-9)
        hi = bisect.bisect_left(starts, t.end)
        out[t.packet_id] = is_collided(t, order[lo:hi], threshold_db)
    return out
