"""Discrete-event simulation of one gateway and its uplink nodes.

One ``Simulation`` owns a topology, a policy (learning agents or a baseline)
and a set of named random streams. Episodes reset the packet ledgers; agent
value tables persist across episodes.
"""

from __future__ import annotations

import heapq
import logging
import math
import random
import statistics
from dataclasses import dataclass, field, replace
from typing import Sequence

from .bandit import DEFAULT_C, Mode, RewardConfig
from .baselines import ADR_MARGIN_DB, Policy, PolicySpec, build_policy, parse_policy
from .collision import CAPTURE_THRESHOLD_DB, CF_GUARD_HZ, Transmission
from .network import (
    DEFAULT_DOMAINS,
    EpisodeMetrics,
    Gateway,
    Node,
    PacketRecord,
    ParameterDomains,
    check_weights,
    generate_topology,
    normalized_utilities,
)
from .phy import (
    DEFAULT_CHANNEL,
    SENSITIVITY_DBM,
    SINR_THRESHOLD_DB,
    ChannelModelConfig,
    LoRaParams,
    PacketFate,
    dbm_to_mw,
    mean_path_loss,
    thermal_noise_dbm,
    time_on_air,
)

log = logging.getLogger(__name__)

STREAMS = ("topology", "traffic", "shadowing", "noise", "policy")


@dataclass(frozen=True)
class SimConfig:
    n_nodes: int = 50
    radius: float = 1000.0  # m
    payload_bytes: int = 20
    lam: float = 0.25  # packets/s per node
    packets_per_node: int = 100  # per episode
    train_episodes: int = 50
    test_episodes: int = 10
    seed: int = 0
    channel: ChannelModelConfig = DEFAULT_CHANNEL
    domains: ParameterDomains = DEFAULT_DOMAINS
    policy: str = "dlora-pdr"
    reward: RewardConfig = field(default_factory=RewardConfig)
    c: float = DEFAULT_C
    capture_threshold_db: float = CAPTURE_THRESHOLD_DB
    adr_margin_db: float = ADR_MARGIN_DB
    weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)  # theta, phi, psi

    def validate(self) -> None:
        if self.n_nodes < 1 or self.packets_per_node < 1 or self.payload_bytes < 1:
            raise ValueError("n_nodes, packets_per_node and payload_bytes must be >= 1")
        if self.train_episodes < 0 or self.test_episodes < 0:
            raise ValueError("episode counts must be >= 0")
        if not self.lam > 0 or not self.radius > 0:
            raise ValueError("lam and radius must be > 0")
        parse_policy(self.policy)
        check_weights(*self.weights)


def make_streams(seed: int) -> dict[str, random.Random]:
    """Independent named generators derived from one root seed."""
    return {name: random.Random(f"dlora:{seed}:{name}") for name in STREAMS}


class EventQueue:
    """Time-ordered events; equal times pop by node id, then insertion order."""

    START = 0
    END = 1

    def __init__(self) -> None:
        self._heap: list = []
        self._seq = 0

    def push(self, time: float, node: int, kind: int, payload=None) -> None:
        heapq.heappush(self._heap, (time, node, self._seq, kind, payload))
        self._seq += 1

    def pop(self):
        time, node, _, kind, payload = heapq.heappop(self._heap)
        return time, node, kind, payload

    def __len__(self) -> int:
        return len(self._heap)


@dataclass
class EpisodeResult:
    index: int
    phase: str
    metrics: EpisodeMetrics
    fates: dict[PacketFate, int]
    records: list[PacketRecord] | None = None


@dataclass
class ExperimentResult:
    config: SimConfig
    train: list[EpisodeResult]
    test: list[EpisodeResult]

    def test_summary(self) -> dict[str, tuple[float, float]]:
        out = {}
        for name in ("pdr", "ee", "th", "utility"):
            vals = [getattr(e.metrics, name) for e in self.test]
            out[name] = (
                statistics.fmean(vals) if vals else math.nan,
                statistics.stdev(vals) if len(vals) > 1 else 0.0,
            )
        return out


class Simulation:
    def __init__(
        self,
        cfg: SimConfig,
        policy: Policy | None = None,
        positions: Sequence[tuple[float, float]] | None = None,
    ) -> None:
        cfg.validate()
        self.cfg = cfg
        self.rngs = make_streams(cfg.seed)
        if positions is None:
            positions = generate_topology(cfg.n_nodes, cfg.radius, self.rngs["topology"])
        self.gateway = Gateway()
        self.nodes = [Node(i, x, y, cfg.domains) for i, (x, y) in enumerate(positions)]
        self.distances = [n.distance_to(self.gateway) for n in self.nodes]
        self.path_loss = [mean_path_loss(d, cfg.channel) for d in self.distances]
        if policy is None:
            spec = PolicySpec(cfg.policy, cfg.reward, cfg.c, cfg.adr_margin_db)
            policy = build_policy(spec, self.distances, cfg.domains, cfg.channel, cfg.payload_bytes)
        self.policy = policy
        self._toa: dict[tuple[int, float], float] = {}
        self._noise = {bw: thermal_noise_dbm(bw, cfg.channel) for bw in CF_GUARD_HZ}
        self.episodes_run = 0

    def toa(self, sf: int, bw: float) -> float:
        key = (sf, bw)
        t = self._toa.get(key)
        if t is None:
            t = time_on_air(self.cfg.payload_bytes, LoRaParams(sf, bw, 1.0, 0.0), self.cfg.channel)
            self._toa[key] = t
        return t

    def run_episode(self, phase: str = "train", keep_records: bool = False) -> EpisodeResult:
        cfg = self.cfg
        nodes, gw, policy = self.nodes, self.gateway, self.policy
        for n in nodes:
            n.reset()
        gw.reset()

        traffic = self.rngs["traffic"]
        shadow = self.rngs["shadowing"]
        noise_rng = self.rngs["noise"]
        prng = self.rngs["policy"]
        sigma_shadow = cfg.channel.sigma_shadow
        sigma_awgn = cfg.channel.sigma_awgn
        capture = cfg.capture_threshold_db
        lam = cfg.lam
        ppn = cfg.packets_per_node
        payload = cfg.payload_bytes
        bits = 8 * payload
        path_loss = self.path_loss
        noise_floor = self._noise
        guard = CF_GUARD_HZ
        log10 = math.log10
        RECEIVED, COLLISION, SIGNAL = PacketFate.RECEIVED, PacketFate.COLLISION_LOSS, PacketFate.SIGNAL_LOSS

        queue = EventQueue()
        START, END = EventQueue.START, EventQueue.END
        for i in range(len(nodes)):
            queue.push(traffic.expovariate(lam), i, START)

        sent_count = [0] * len(nodes)
        window: list[Transmission] = []
        fates = {RECEIVED: 0, COLLISION: 0, SIGNAL: 0}
        energy_sum = toa_sum = 0.0
        recv_bits = 0
        next_id = 0

        while queue:
            now, i, kind, tx = queue.pop()
            if kind == START:
                p = policy.select(i, prng)
                toa = self.toa(p.sf, p.bw)
                rssi = p.tp - path_loss[i] - shadow.gauss(0.0, sigma_shadow)
                tx = Transmission(next_id, i, p, now, now + toa, rssi, payload, toa, dbm_to_mw(p.tp) * toa)
                next_id += 1
                window.append(tx)
                queue.push(tx.end, i, END, tx)
                continue

            # END: every transmission overlapping tx has already started
            tx.ended = True
            p = tx.params
            start, end = tx.start, tx.end
            colliders = []
            interference_mw = 0.0
            for o in window:
                if o is tx or o.start >= end or o.end <= start:
                    continue
                q = o.params
                if abs(p.cf - q.cf) >= guard[max(p.bw, q.bw)]:
                    continue
                if q.sf == p.sf:
                    colliders.append(o.rssi)
                else:
                    interference_mw += 10.0 ** (o.rssi / 10.0)
            collided = bool(colliders) and tx.rssi < max(colliders) + capture
            noise_dbm = noise_floor[p.bw] + noise_rng.gauss(0.0, sigma_awgn)
            if interference_mw:
                sinr = 10.0 * log10(10.0 ** (tx.rssi / 10.0) / (interference_mw + 10.0 ** (noise_dbm / 10.0)))
            else:
                sinr = tx.rssi - noise_dbm
            signal_lost = not (tx.rssi >= SENSITIVITY_DBM[(p.sf, p.bw)] and sinr >= SINR_THRESHOLD_DB[p.sf])
            if collided:
                fate = COLLISION
            elif signal_lost:
                fate = SIGNAL
            else:
                fate = RECEIVED

            rec = PacketRecord(
                tx.packet_id, i, payload, p, tx.toa, tx.energy, fate, start, tx.rssi, sinr, collided, signal_lost
            )
            node = nodes[i]
            node.sent.append(rec)
            if fate is RECEIVED:
                node.received_ok.append(rec)
                gw.received.append(rec)
                recv_bits += bits
            else:
                node.lost.append(rec)
            fates[fate] += 1
            energy_sum += tx.energy
            toa_sum += tx.toa
            policy.feedback(i, p, fate)

            sent_count[i] += 1
            if sent_count[i] < ppn:
                queue.push(now + traffic.expovariate(lam), i, START)

            oldest_active = min((o.start for o in window if not o.ended), default=math.inf)
            window = [o for o in window if not o.ended or o.end > oldest_active]

        total = sum(sent_count)
        metrics = EpisodeMetrics(fates[RECEIVED] / total, recv_bits / energy_sum, recv_bits / toa_sum)
        idx = self.episodes_run
        self.episodes_run += 1
        records = [r for n in nodes for r in n.sent] if keep_records else None
        return EpisodeResult(idx, phase, metrics, fates, records)

    def set_mode(self, mode: Mode) -> None:
        self.policy.set_mode(mode)


def run_experiment(cfg: SimConfig, keep_records: bool = False) -> ExperimentResult:
    """Train for ``cfg.train_episodes`` episodes, then evaluate frozen greedy agents."""
    sim = Simulation(cfg)
    sim.set_mode(Mode.TRAINING)
    train = [sim.run_episode("train", keep_records) for _ in range(cfg.train_episodes)]
    sim.set_mode(Mode.TEST)
    test = [sim.run_episode("test", keep_records) for _ in range(cfg.test_episodes)]
    episodes = train + test
    utils = normalized_utilities([e.metrics for e in episodes], *cfg.weights)
    for e, u in zip(episodes, utils):
        e.metrics = replace(e.metrics, utility=u)
    log.debug("policy=%s radius=%s seed=%s done", cfg.policy, cfg.radius, cfg.seed)
    return ExperimentResult(cfg, train, test)
