"""Per-node UCB1 agents: one bandit per LoRa parameter, plus reward shaping."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .network import DEFAULT_DOMAINS, ParameterDomains
from .phy import LoRaParams, PacketFate

DIMENSIONS = ("sf", "bw", "cf", "tp")
DEFAULT_C = 2.0


class Mode(enum.Enum):
    TRAINING = "training"
    TEST = "test"


class Bandit:
    """Incremental-mean action values with a UCB1 exploration bonus."""

    __slots__ = ("arms", "q", "n", "t")

    def __init__(self, arms: Sequence) -> None:
        if not arms:
            raise ValueError("bandit needs at least one arm")
        self.arms = tuple(arms)
        self.q = [0.0] * len(self.arms)
        self.n = [0] * len(self.arms)
        self.t = 0

    def select(self, c: float = DEFAULT_C, greedy: bool = False) -> int:
        q = self.q
        if greedy:
            return q.index(max(q))
        n = self.n
        if 0 in n:
            return n.index(0)
        scale = math.log(self.t) / 2.0
        best, best_val = 0, -math.inf
        for i, qi in enumerate(q):
            v = qi + c * math.sqrt(scale / n[i])
            if v > best_val:
                best, best_val = i, v
        return best

    def update(self, arm: int, reward: float) -> None:
        self.n[arm] += 1
        self.q[arm] += (reward - self.q[arm]) / self.n[arm]
        self.t += 1

    def to_dict(self) -> dict:
        return {"arms": list(self.arms), "q": list(self.q), "n": list(self.n), "t": self.t}

    @classmethod
    def from_dict(cls, d: dict) -> "Bandit":
        b = cls(d["arms"])
        b.q = [float(x) for x in d["q"]]
        b.n = [int(x) for x in d["n"]]
        b.t = int(d["t"])
        if b.t != sum(b.n) or len(b.q) != len(b.arms) or len(b.n) != len(b.arms):
            raise ValueError("inconsistent bandit snapshot")
        return b


def ucb_select(b: Bandit, rng=None, c: float = DEFAULT_C, mode: Mode = Mode.TRAINING) -> int:
    """Pick an arm; ``rng`` is accepted for interface symmetry, ties go to the lowest index."""
    return b.select(c, greedy=mode is Mode.TEST)


def q_update(b: Bandit, arm: int, reward: float) -> Bandit:
    b.update(arm, reward)
    return b


# Base rewards per outcome, ordered (sf, bw, cf, tp).
REWARD_TABLE: dict[PacketFate, tuple[float, float, float, float]] = {
    PacketFate.COLLISION_LOSS: (-1.0, -0.5, -0.5, 0.0),
    PacketFate.SIGNAL_LOSS: (-0.5, -0.5, 0.0, -1.0),
    PacketFate.RECEIVED: (1.0, 1.0, 1.0, 1.0),
}


TP_TERM_MODES = ("penalize", "literal")


@dataclass(frozen=True)
class RewardConfig:
    table: dict = field(default_factory=lambda: dict(REWARD_TABLE))
    xi: float = 0.0  # SF metric factor
    zeta: float = 0.0  # BW metric factor
    eta: float = 0.0  # TP metric factor
    # "penalize": higher TP earns less; "literal": higher TP earns more
    tp_term: str = "penalize"

    def __post_init__(self) -> None:
        if self.tp_term not in TP_TERM_MODES:
            raise ValueError(f"tp_term must be one of {TP_TERM_MODES}, got {self.tp_term!r}")


VARIANTS: dict[str, tuple[float, float, float]] = {
    "pdr": (0.0, 0.0, 0.0),
    "ee": (0.0, 0.0, 3.5),
    "th": (10.0, 10.0, 0.0),
    "balance": (0.0, 0.0, 1.8),
}


def variant_config(name: str, tp_term: str = "penalize") -> RewardConfig:
    xi, zeta, eta = VARIANTS[name]
    return RewardConfig(xi=xi, zeta=zeta, eta=eta, tp_term=tp_term)


def assign_rewards(fate: PacketFate, cfg: RewardConfig = RewardConfig()) -> tuple[float, float, float, float]:
    return tuple(cfg.table[fate])


class MetricTerms:
    """Precomputed per-arm shaping increments for one parameter domain set."""

    def __init__(self, domains: ParameterDomains, cfg: RewardConfig) -> None:
        sf_w = {sf: sf / 2**sf for sf in domains.sf}
        sf_tot = sum(sf_w.values())
        bw_tot = sum(domains.bw)
        tp_tot = sum(domains.tp)
        self.sf = {sf: cfg.xi * w / sf_tot for sf, w in sf_w.items()}
        self.bw = {bw: cfg.zeta * bw / bw_tot for bw in domains.bw}
        sign = 1.0 if cfg.tp_term == "literal" else -1.0
        self.tp = {tp: sign * cfg.eta * tp / tp_tot for tp in domains.tp}

    def apply(self, rewards: Sequence[float], p: LoRaParams) -> tuple[float, float, float, float]:
        r_sf, r_bw, r_cf, r_tp = rewards
        return (r_sf + self.sf[p.sf], r_bw + self.bw[p.bw], r_cf, r_tp + self.tp[p.tp])


def apply_metric_terms(
    rewards: Sequence[float],
    p: LoRaParams,
    cfg: RewardConfig,
    domains: ParameterDomains = DEFAULT_DOMAINS,
) -> tuple[float, float, float, float]:
    return MetricTerms(domains, cfg).apply(rewards, p)


class AgentState:
    """Four bandits (SF, BW, CF, TP) owned by a single node."""

    def __init__(
        self,
        domains: ParameterDomains = DEFAULT_DOMAINS,
        c: float = DEFAULT_C,
        mode: Mode = Mode.TRAINING,
    ) -> None:
        self.domains = domains
        self.c = c
        self.mode = mode
        self.bandits = {dim: Bandit(getattr(domains, dim)) for dim in DIMENSIONS}
        self._last: tuple[int, int, int, int] | None = None

    def select(self) -> LoRaParams:
        greedy = self.mode is Mode.TEST
        b = self.bandits
        idx = (
            b["sf"].select(self.c, greedy),
            b["bw"].select(self.c, greedy),
            b["cf"].select(self.c, greedy),
            b["tp"].select(self.c, greedy),
        )
        self._last = idx
        return LoRaParams(
            b["sf"].arms[idx[0]], b["bw"].arms[idx[1]], b["cf"].arms[idx[2]], b["tp"].arms[idx[3]]
        )

    def learn(self, rewards: Sequence[float]) -> None:
        """Credit the most recent selection; a no-op in test mode."""
        if self.mode is Mode.TEST:
            return
        if self._last is None:
            raise RuntimeError("learn() called before select()")
        for dim, arm, r in zip(DIMENSIONS, self._last, rewards):
            self.bandits[dim].update(arm, r)
        self._last = None

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "mode": self.mode.value,
            "bandits": {dim: b.to_dict() for dim, b in self.bandits.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AgentState":
        bandits = {dim: Bandit.from_dict(d["bandits"][dim]) for dim in DIMENSIONS}
        domains = ParameterDomains(*(tuple(bandits[dim].arms) for dim in DIMENSIONS))
        agent = cls(domains, float(d["c"]), Mode(d["mode"]))
        agent.bandits = bandits
        return agent


def save_agents(agents: Sequence[AgentState], path: str | Path) -> None:
    Path(path).write_text(json.dumps([a.to_dict() for a in agents], indent=1))


def load_agents(path: str | Path) -> list[AgentState]:
    return [AgentState.from_dict(d) for d in json.loads(Path(path).read_text())]
