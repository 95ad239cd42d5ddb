"""Parameter-selection policies: four baselines and the D-LoRa agent wrapper.

All policies share one per-packet interface::

    params = policy.select(node_index, rng)
    policy.feedback(node_index, params, fate)
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from typing import Sequence

from .bandit import VARIANTS, AgentState, MetricTerms, Mode, RewardConfig, variant_config
from .network import DEFAULT_DOMAINS, ParameterDomains
from .phy import (
    DEFAULT_CHANNEL,
    ChannelModelConfig,
    LoRaParams,
    PacketFate,
    mean_path_loss,
    receiver_sensitivity,
    time_on_air,
)

ADR_MARGIN_DB = 10.0


class PolicyKind(enum.Enum):
    RANDOM = "random"
    ROUND_ROBIN = "round_robin"
    ADR = "adr"
    RS_LORA = "rs_lora"
    DLORA = "dlora"


def parse_policy(name: str) -> tuple[PolicyKind, str | None]:
    """``"dlora-ee"`` -> (DLORA, "ee"); plain ``"dlora"`` uses the configured factors."""
    base, _, variant = name.lower().replace("_", "-").partition("-")
    if base == "dlora":
        if variant and variant not in VARIANTS:
            raise ValueError(f"unknown D-LoRa variant {variant!r}")
        return PolicyKind.DLORA, variant or None
    try:
        return PolicyKind(name.lower().replace("-", "_")), None
    except ValueError:
        raise ValueError(f"unknown policy {name!r}") from None


POLICY_NAMES = ("random", "round_robin", "adr", "rs_lora", "dlora-pdr", "dlora-ee", "dlora-th", "dlora-balance")


def random_policy(domains: ParameterDomains, rng: random.Random) -> LoRaParams:
    return LoRaParams(
        rng.choice(domains.sf), rng.choice(domains.bw), rng.choice(domains.cf), rng.choice(domains.tp)
    )


def round_robin_policy(node_id: int, domains: ParameterDomains, rng: random.Random) -> LoRaParams:
    sf = domains.sf[node_id % len(domains.sf)]
    cf = domains.cf[node_id % len(domains.cf)]
    return LoRaParams(sf, rng.choice(domains.bw), cf, rng.choice(domains.tp))


def _min_tp(needed_dbm: float, path_loss: float, tps: Sequence[float]) -> float | None:
    for tp in sorted(tps):
        if tp - path_loss >= needed_dbm:
            return tp
    return None


def adr_decision(
    distance: float,
    domains: ParameterDomains = DEFAULT_DOMAINS,
    cfg: ChannelModelConfig = DEFAULT_CHANNEL,
    margin: float = ADR_MARGIN_DB,
    payload_bytes: int = 20,
) -> tuple[int, float, float]:
    """(SF, BW, TP) of the fastest (SF, BW) pair whose mean link clears sensitivity + margin."""
    pl = mean_path_loss(distance, cfg)
    tp_max = max(domains.tp)
    cf0 = domains.cf[0]
    pairs = sorted(
        ((sf, bw) for sf in domains.sf for bw in domains.bw),
        key=lambda sb: (time_on_air(payload_bytes, LoRaParams(sb[0], sb[1], cf0, tp_max), cfg), sb),
    )
    for sf, bw in pairs:
        need = receiver_sensitivity(sf, bw) + margin
        if tp_max - pl >= need:
            return sf, bw, _min_tp(need, pl, domains.tp)
    return max(domains.sf), min(domains.bw), tp_max


def adr_policy(
    distance: float,
    domains: ParameterDomains,
    cfg: ChannelModelConfig,
    rng: random.Random,
    margin: float = ADR_MARGIN_DB,
    payload_bytes: int = 20,
) -> LoRaParams:
    sf, bw, tp = adr_decision(distance, domains, cfg, margin, payload_bytes)
    return LoRaParams(sf, bw, rng.choice(domains.cf), tp)


def rs_lora_distribution(
    distance: float,
    domains: ParameterDomains = DEFAULT_DOMAINS,
    cfg: ChannelModelConfig = DEFAULT_CHANNEL,
    margin: float = ADR_MARGIN_DB,
    payload_bytes: int = 20,
) -> dict[int, float]:
    """SF selection probabilities, proportional to 1/ToA over the feasible SFs.

    Empty when no SF is feasible at maximum power.
    """
    bw = 125e3 if 125e3 in domains.bw else min(domains.bw)
    pl = mean_path_loss(distance, cfg)
    tp_max = max(domains.tp)
    weights = {}
    for sf in domains.sf:
        if tp_max - pl >= receiver_sensitivity(sf, bw) + margin:
            toa = time_on_air(payload_bytes, LoRaParams(sf, bw, domains.cf[0], tp_max), cfg)
            weights[sf] = 1.0 / toa
    total = sum(weights.values())
    return {sf: w / total for sf, w in weights.items()}


def rs_lora_policy(
    distance: float,
    domains: ParameterDomains,
    cfg: ChannelModelConfig,
    rng: random.Random,
    margin: float = ADR_MARGIN_DB,
    payload_bytes: int = 20,
) -> LoRaParams:
    return _RSLoRaNode(distance, domains, cfg, margin, payload_bytes).draw(rng)


class _RSLoRaNode:
    def __init__(self, distance, domains, cfg, margin, payload_bytes):
        self.bw = 125e3 if 125e3 in domains.bw else min(domains.bw)
        self.cfs = domains.cf
        dist = rs_lora_distribution(distance, domains, cfg, margin, payload_bytes)
        pl = mean_path_loss(distance, cfg)
        if dist:
            self.sfs = list(dist)
            self.cum = []
            acc = 0.0
            for sf in self.sfs:
                acc += dist[sf]
                self.cum.append(acc)
            self.tps = {
                sf: _min_tp(receiver_sensitivity(sf, self.bw) + margin, pl, domains.tp) for sf in self.sfs
            }
        else:
            sf = max(domains.sf)
            self.sfs, self.cum, self.tps = [sf], [1.0], {sf: max(domains.tp)}

    def draw(self, rng: random.Random) -> LoRaParams:
        u = rng.random()
        sf = self.sfs[-1]
        for s, c in zip(self.sfs, self.cum):
            if u < c:
                sf = s
                break
        return LoRaParams(sf, self.bw, rng.choice(self.cfs), self.tps[sf])


class Policy:
    learning = False

    def select(self, node: int, rng: random.Random) -> LoRaParams:
        raise NotImplementedError

    def feedback(self, node: int, params: LoRaParams, fate: PacketFate) -> None:
        pass

    def set_mode(self, mode: Mode) -> None:
        pass


class RandomPolicy(Policy):
    def __init__(self, domains: ParameterDomains = DEFAULT_DOMAINS) -> None:
        self.domains = domains

    def select(self, node, rng):
        return random_policy(self.domains, rng)


class RoundRobinPolicy(Policy):
    def __init__(self, node_ids: Sequence[int], domains: ParameterDomains = DEFAULT_DOMAINS) -> None:
        self.node_ids = list(node_ids)
        self.domains = domains

    def select(self, node, rng):
        return round_robin_policy(self.node_ids[node], self.domains, rng)


class ADRPolicy(Policy):
    def __init__(self, distances, domains=DEFAULT_DOMAINS, cfg=DEFAULT_CHANNEL, margin=ADR_MARGIN_DB, payload_bytes=20):
        self.domains = domains
        self.decisions = [adr_decision(d, domains, cfg, margin, payload_bytes) for d in distances]

    def select(self, node, rng):
        sf, bw, tp = self.decisions[node]
        return LoRaParams(sf, bw, rng.choice(self.domains.cf), tp)


class RSLoRaPolicy(Policy):
    def __init__(self, distances, domains=DEFAULT_DOMAINS, cfg=DEFAULT_CHANNEL, margin=ADR_MARGIN_DB, payload_bytes=20):
        self.nodes = [_RSLoRaNode(d, domains, cfg, margin, payload_bytes) for d in distances]

    def select(self, node, rng):
        return self.nodes[node].draw(rng)


class DLoRaPolicy(Policy):
    """One UCB agent per node; rewards from the outcome table plus metric terms."""

    learning = True

    def __init__(
        self,
        n_nodes: int,
        domains: ParameterDomains = DEFAULT_DOMAINS,
        reward: RewardConfig | None = None,
        c: float = 2.0,
        agents: Sequence[AgentState] | None = None,
    ) -> None:
        self.reward = reward or variant_config("pdr")
        self.terms = MetricTerms(domains, self.reward)
        self.agents = list(agents) if agents is not None else [AgentState(domains, c) for _ in range(n_nodes)]

    def select(self, node, rng):
        return self.agents[node].select()

    def feedback(self, node, params, fate):
        agent = self.agents[node]
        if agent.mode is Mode.TRAINING:
            agent.learn(self.terms.apply(self.reward.table[fate], params))

    def set_mode(self, mode):
        for a in self.agents:
            a.mode = mode


@dataclass(frozen=True)
class PolicySpec:
    name: str
    reward: RewardConfig | None = None  # used by plain "dlora"
    c: float = 2.0
    adr_margin_db: float = ADR_MARGIN_DB


def build_policy(
    spec: PolicySpec,
    distances: Sequence[float],
    domains: ParameterDomains = DEFAULT_DOMAINS,
    cfg: ChannelModelConfig = DEFAULT_CHANNEL,
    payload_bytes: int = 20,
) -> Policy:
    kind, variant = parse_policy(spec.name)
    if kind is PolicyKind.RANDOM:
        return RandomPolicy(domains)
    if kind is PolicyKind.ROUND_ROBIN:
        return RoundRobinPolicy(range(len(distances)), domains)
    if kind is PolicyKind.ADR:
        return ADRPolicy(distances, domains, cfg, spec.adr_margin_db, payload_bytes)
    if kind is PolicyKind.RS_LORA:
        return RSLoRaPolicy(distances, domains, cfg, spec.adr_margin_db, payload_bytes)
    base = spec.reward or RewardConfig()
    reward = variant_config(variant, base.tp_term) if variant else base
    return DLoRaPolicy(len(distances), domains, reward, spec.c)
