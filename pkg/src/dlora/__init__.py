"""Distributed LoRa parameter adaptation with per-node UCB bandits."""

from .bandit import AgentState, Bandit, Mode, RewardConfig, variant_config
from .engine import SimConfig, Simulation, run_experiment
from .network import EpisodeMetrics
from .phy import ChannelModelConfig, LoRaParams, PacketFate

__all__ = [
    "AgentState",
    "Bandit",
    "ChannelModelConfig",
    "EpisodeMetrics",
    "LoRaParams",
    "Mode",
    "PacketFate",
    "RewardConfig",
    "SimConfig",
    "Simulation",
    "run_experiment",
    "variant_config",
]
