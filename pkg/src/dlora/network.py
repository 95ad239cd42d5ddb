"""Topology, packet ledgers and episode metrics (PDR, EE, TH, utility)."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Sequence

from .phy import BW_SET, CF_SET, SF_SET, TP_SET, LoRaParams, PacketFate, packet_energy


class MetricError(ValueError):
    """A metric is undefined for the given ledgers (e.g. nothing was sent)."""


@dataclass(frozen=True)
class ParameterDomains:
    sf: tuple[int, ...] = SF_SET
    bw: tuple[float, ...] = BW_SET
    cf: tuple[float, ...] = CF_SET
    tp: tuple[float, ...] = TP_SET

    def contains(self, p: LoRaParams) -> bool:
        return p.sf in self.sf and p.bw in self.bw and p.cf in self.cf and p.tp in self.tp


DEFAULT_DOMAINS = ParameterDomains()


@dataclass(slots=True)
class PacketRecord:
    packet_id: int
    sender: int
    payload_size: int  # bytes
    params: LoRaParams
    toa: float  # s
    energy: float  # mJ
    fate: PacketFate
    start: float = 0.0
    rssi: float = 0.0
    sinr: float = 0.0
    collided: bool = False
    signal_lost: bool = False

    @classmethod
    def build(cls, packet_id, sender, payload_size, params, toa, fate, **kw) -> "PacketRecord":
        return cls(packet_id, sender, payload_size, params, toa, packet_energy(params, toa), fate, **kw)


@dataclass
class Gateway:
    x: float = 0.0
    y: float = 0.0
    received: list[PacketRecord] = field(default_factory=list)

    def reset(self) -> None:
        self.received = []


@dataclass
class Node:
    id: int
    x: float
    y: float
    domains: ParameterDomains = DEFAULT_DOMAINS
    sent: list[PacketRecord] = field(default_factory=list)
    received_ok: list[PacketRecord] = field(default_factory=list)
    lost: list[PacketRecord] = field(default_factory=list)

    def distance_to(self, gw: Gateway) -> float:
        return math.hypot(self.x - gw.x, self.y - gw.y)

    def reset(self) -> None:
        self.sent, self.received_ok, self.lost = [], [], []


@dataclass(frozen=True)
class EpisodeMetrics:
    pdr: float
    ee: float  # bits/mJ
    th: float  # bps
    utility: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.pdr <= 1.0) or self.ee < 0 or self.th < 0:
            raise MetricError(f"metrics out of range: {self}")


def _sent(nodes: Sequence[Node]) -> list[PacketRecord]:
    return [p for n in nodes for p in n.sent]


def compute_pdr(nodes: Sequence[Node], gateway: Gateway) -> float:
    total = sum(len(n.sent) for n in nodes)
    if total == 0:
        raise MetricError("PDR undefined: no packets sent")
    return len(gateway.received) / total


def compute_ee(nodes: Sequence[Node], gateway: Gateway) -> float:
    energy = math.fsum(p.energy for p in _sent(nodes))
    if energy <= 0:
        raise MetricError("EE undefined: zero energy consumed")
    return math.fsum(8 * p.payload_size for p in gateway.received) / energy


def compute_th(nodes: Sequence[Node], gateway: Gateway) -> float:
    airtime = math.fsum(p.toa for p in _sent(nodes))
    if airtime <= 0:
        raise MetricError("TH undefined: zero airtime")
    return math.fsum(8 * p.payload_size for p in gateway.received) / airtime


def compute_metrics(nodes: Sequence[Node], gateway: Gateway) -> EpisodeMetrics:
    return EpisodeMetrics(
        compute_pdr(nodes, gateway), compute_ee(nodes, gateway), compute_th(nodes, gateway)
    )


def check_weights(theta: float, phi: float, psi: float) -> None:
    if min(theta, phi, psi) < 0 or not math.isclose(theta + phi + psi, 1.0, abs_tol=1e-9):
        raise ValueError(f"utility weights must be >= 0 and sum to 1, got {(theta, phi, psi)}")


def _minmax(x: float, lo: float, hi: float) -> float:
    # degenerate range: every compared run sits at the same value
    return 0.0 if hi <= lo else (x - lo) / (hi - lo)


def utility(
    m: EpisodeMetrics,
    theta: float,
    phi: float,
    psi: float,
    ee_bounds: tuple[float, float],
    th_bounds: tuple[float, float],
) -> float:
    """Weighted score with EE and TH min-max normalised to the given bounds."""
    check_weights(theta, phi, psi)
    return theta * m.pdr + phi * _minmax(m.ee, *ee_bounds) + psi * _minmax(m.th, *th_bounds)


def normalized_utilities(
    metrics: Sequence[EpisodeMetrics], theta: float, phi: float, psi: float
) -> list[float]:
    """Utility of each entry, normalising EE/TH over the whole compared set."""
    if not metrics:
        return []
    ee = [m.ee for m in metrics]
    th = [m.th for m in metrics]
    eb, tb = (min(ee), max(ee)), (min(th), max(th))
    return [utility(m, theta, phi, psi, eb, tb) for m in metrics]


def generate_topology(n_nodes: int, radius: float, rng: random.Random) -> list[tuple[float, float]]:
    """Node positions uniform over a disk centred on the gateway at the origin."""
    if n_nodes < 1 or radius <= 0:
        raise ValueError("need n_nodes >= 1 and radius > 0")
    out = []
    for _ in range(n_nodes):
        r = radius * math.sqrt(rng.random())
        a = 2.0 * math.pi * rng.random()
        out.append((r * math.cos(a), r * math.sin(a)))
    return out
