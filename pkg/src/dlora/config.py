"""YAML configuration: schema with defaults and units, loading and validation."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import yaml

from .bandit import REWARD_TABLE, TP_TERM_MODES, RewardConfig
from .baselines import POLICY_NAMES, parse_policy
from .engine import SimConfig
from .network import ParameterDomains
from .phy import BW_SET, CF_SET, SF_SET, TP_SET, ChannelModelConfig, PacketFate

OUT_DIR_ENV = "DLORA_OUT_DIR"


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""


@dataclass(frozen=True)
class Key:
    section: str
    name: str
    default: Any
    unit: str
    help: str
    check: Callable[[Any], str | None] | None = None

    @property
    def path(self) -> str:
        return f"{self.section}.{self.name}"


def _positive(v):
    return None if isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0 else "must be a number > 0"


def _non_negative(v):
    return None if isinstance(v, (int, float)) and not isinstance(v, bool) and v >= 0 else "must be a number >= 0"


def _count(minimum):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
            return f"must be an integer >= {minimum}"
        return None

    return check


def _number(v):
    return None if isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) else "must be a finite number"


def _flag(v):
    return None if v in (0, 1) and not isinstance(v, float) else "must be 0 or 1"


def _subset(allowed):
    def check(v):
        if not isinstance(v, list) or not v:
            return "must be a non-empty list"
        for x in v:
            if x not in allowed:
                return f"value {x!r} not allowed (choose from {list(allowed)})"
        if len(set(v)) != len(v):
            return "contains duplicates"
        return None

    return check


def _numbers(v):
    if not isinstance(v, list) or not v:
        return "must be a non-empty list"
    for x in v:
        if _positive(x):
            return f"value {x!r} must be a number > 0"
    if len(set(v)) != len(v):
        return "contains duplicates"
    return None


def _policy(v):
    try:
        parse_policy(str(v))
    except ValueError as e:
        return str(e)
    return None


def _policies(v):
    if not isinstance(v, list) or not v:
        return "must be a non-empty list"
    for p in v:
        err = _policy(p)
        if err:
            return err
    return None


def _seeds(v):
    if not isinstance(v, list) or not v or any(_count(0)(s) for s in v):
        return "must be a non-empty list of integers >= 0"
    return None


def _reward_row(v):
    if not isinstance(v, list) or len(v) != 4 or any(_number(x) for x in v):
        return "must be a list of 4 numbers (r_sf, r_bw, r_cf, r_tp)"
    return None


def _choice(options):
    def check(v):
        return None if v in options else f"must be one of {list(options)}"

    return check


def _optional_count(v):
    return None if v is None else _count(1)(v)


SCHEMA: tuple[Key, ...] = (
    Key("network", "n_nodes", 50, "count", "nodes placed uniformly in the disk", _count(1)),
    Key("network", "radius_m", 1000.0, "m", "network radius around the gateway", _positive),
    Key("network", "payload_bytes", 20, "bytes", "payload size of every packet", _count(1)),
    Key("network", "lambda_per_s", 0.25, "1/s", "exponential send rate per node", _positive),
    Key("network", "packets_per_node", 100, "packets", "packets each node sends per episode", _count(1)),
    Key("experiment", "train_episodes", 50, "episodes", "learning episodes before the test phase", _count(0)),
    Key("experiment", "test_episodes", 10, "episodes", "frozen greedy evaluation episodes", _count(1)),
    Key("experiment", "seed", 0, "-", "root seed of all random streams", _count(0)),
    Key("experiment", "policy", "dlora-pdr", "-", f"one of {', '.join(POLICY_NAMES)}, dlora", _policy),
    Key("channel", "mean_pl_d0_db", 128.95, "dB", "mean path loss at the reference distance", _number),
    Key("channel", "d0_m", 1000.0, "m", "reference distance", _positive),
    Key("channel", "gamma", 2.32, "-", "path-loss exponent", _positive),
    Key("channel", "sigma_shadow_db", 7.8, "dB", "shadowing std dev, resampled per packet", _non_negative),
    Key("channel", "sigma_awgn_db", 1.0, "dB", "noise-floor jitter std dev", _non_negative),
    Key("channel", "noise_figure_db", 6.0, "dB", "receiver noise figure", _number),
    Key("channel", "n_preamble", 8, "symbols", "preamble length", _count(1)),
    Key("channel", "crc", 1, "flag", "CRC enabled", _flag),
    Key("channel", "header", 0, "flag", "0 = explicit header", _flag),
    Key("channel", "de", 0, "flag", "low data rate optimisation", _flag),
    Key("channel", "cr", 1, "-", "coding rate 4/(4+cr), 1..4", _choice((1, 2, 3, 4))),
    Key("channel", "min_distance_m", 1.0, "m", "distance clamp for the path-loss log", _positive),
    Key("collision", "capture_threshold_db", 6.0, "dB", "power margin to survive a co-SF collision", _number),
    Key("domains", "sf", list(SF_SET), "-", "available spreading factors", _subset(SF_SET)),
    Key("domains", "bw_hz", list(BW_SET), "Hz", "available bandwidths", _subset(BW_SET)),
    Key("domains", "cf_hz", list(CF_SET), "Hz", "available carrier frequencies", _subset(CF_SET)),
    Key("domains", "tp_dbm", list(TP_SET), "dBm", "available transmit powers", _subset(TP_SET)),
    Key("agent", "c", 2.0, "-", "UCB exploration weight", _non_negative),
    Key("agent", "xi", 0.0, "-", "SF metric factor (plain 'dlora' policy)", _number),
    Key("agent", "zeta", 0.0, "-", "BW metric factor (plain 'dlora' policy)", _number),
    Key("agent", "eta", 0.0, "-", "TP metric factor (plain 'dlora' policy)", _number),
    Key("agent", "tp_term", "penalize", "-", f"TP metric term mode, one of {list(TP_TERM_MODES)}", _choice(TP_TERM_MODES)),
    Key("agent", "reward_collision", list(REWARD_TABLE[PacketFate.COLLISION_LOSS]), "-", "rewards (sf, bw, cf, tp) on collision loss", _reward_row),
    Key("agent", "reward_signal", list(REWARD_TABLE[PacketFate.SIGNAL_LOSS]), "-", "rewards (sf, bw, cf, tp) on signal loss", _reward_row),
    Key("agent", "reward_received", list(REWARD_TABLE[PacketFate.RECEIVED]), "-", "rewards (sf, bw, cf, tp) on reception", _reward_row),
    Key("baselines", "adr_margin_db", 10.0, "dB", "link margin used by ADR and RS-LoRa", _number),
    Key("utility", "theta", 1 / 3, "-", "PDR weight (weights sum to 1)", _non_negative),
    Key("utility", "phi", 1 / 3, "-", "normalised EE weight", _non_negative),
    Key("utility", "psi", 1 / 3, "-", "normalised TH weight", _non_negative),
    Key("sweep", "radii_m", [1000.0, 1500.0, 2000.0, 2500.0], "m", "radii swept by 'sweep'", _numbers),
    Key("sweep", "policies", list(POLICY_NAMES), "-", "policies swept by 'sweep'", _policies),
    Key("sweep", "seeds", [0, 1, 2, 3, 4], "-", "seeds swept by 'sweep'", _seeds),
    Key("sweep", "workers", None, "processes", "worker pool size (null = CPU count)", _optional_count),
    Key("output", "dir", "results", "path", f"output directory (env {OUT_DIR_ENV} overrides)", None),
    Key("output", "trace", False, "flag", "also write per-packet trace.csv", _choice((True, False))),
    Key("output", "save_agents", False, "flag", "write agent q-table snapshots (D-LoRa runs)", _choice((True, False))),
)

SECTIONS = tuple(dict.fromkeys(k.section for k in SCHEMA))


def schema_help() -> str:
    lines = ["config keys (section.key = default [unit]: meaning):"]
    for k in SCHEMA:
        lines.append(f"  {k.path} = {k.default!r} [{k.unit}]: {k.help}")
    return "\n".join(lines)


@dataclass(frozen=True)
class SweepSpec:
    base: SimConfig = field(default_factory=SimConfig)
    radii: tuple[float, ...] = (1000.0, 1500.0, 2000.0, 2500.0)
    policies: tuple[str, ...] = POLICY_NAMES
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    workers: int | None = None
    out_dir: str = "results"
    trace: bool = False
    save_agents: bool = False


def resolve(raw: dict | None) -> dict[str, Any]:
    """Flatten a parsed document into ``{"section.key": value}`` with defaults filled."""
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("<root>: expected a mapping of sections")
    known = {k.path: k for k in SCHEMA}
    values = {k.path: k.default for k in SCHEMA}
    for section, body in raw.items():
        if section not in SECTIONS:
            raise ConfigError(f"{section}: unknown section (expected one of {list(SECTIONS)})")
        if body is None:
            continue
        if not isinstance(body, dict):
            raise ConfigError(f"{section}: expected a mapping")
        for name, value in body.items():
            path = f"{section}.{name}"
            key = known.get(path)
            if key is None:
                raise ConfigError(f"{path}: unknown key")
            if key.check is not None:
                err = key.check(value)
                if err:
                    raise ConfigError(f"{path}: {err}")
            values[path] = value
    if not math.isclose(values["utility.theta"] + values["utility.phi"] + values["utility.psi"], 1.0, abs_tol=1e-9):
        raise ConfigError("utility: theta + phi + psi must equal 1")
    return values


def spec_from_values(v: dict[str, Any]) -> SweepSpec:
    try:
        channel = ChannelModelConfig(
            mean_pl_d0=float(v["channel.mean_pl_d0_db"]),
            d0=float(v["channel.d0_m"]),
            gamma=float(v["channel.gamma"]),
            sigma_shadow=float(v["channel.sigma_shadow_db"]),
            sigma_awgn=float(v["channel.sigma_awgn_db"]),
            noise_figure=float(v["channel.noise_figure_db"]),
            n_preamble=v["channel.n_preamble"],
            crc=v["channel.crc"],
            header=v["channel.header"],
            de=v["channel.de"],
            cr=v["channel.cr"],
            min_distance=float(v["channel.min_distance_m"]),
        )
    except ValueError as e:
        raise ConfigError(f"channel: {e}") from None
    domains = ParameterDomains(
        sf=tuple(v["domains.sf"]),
        bw=tuple(float(x) for x in v["domains.bw_hz"]),
        cf=tuple(float(x) for x in v["domains.cf_hz"]),
        tp=tuple(v["domains.tp_dbm"]),
    )
    reward = RewardConfig(
        table={
            PacketFate.COLLISION_LOSS: tuple(float(x) for x in v["agent.reward_collision"]),
            PacketFate.SIGNAL_LOSS: tuple(float(x) for x in v["agent.reward_signal"]),
            PacketFate.RECEIVED: tuple(float(x) for x in v["agent.reward_received"]),
        },
        xi=float(v["agent.xi"]),
        zeta=float(v["agent.zeta"]),
        eta=float(v["agent.eta"]),
        tp_term=v["agent.tp_term"],
    )
    base = SimConfig(
        n_nodes=v["network.n_nodes"],
        radius=float(v["network.radius_m"]),
        payload_bytes=v["network.payload_bytes"],
        lam=float(v["network.lambda_per_s"]),
        packets_per_node=v["network.packets_per_node"],
        train_episodes=v["experiment.train_episodes"],
        test_episodes=v["experiment.test_episodes"],
        seed=v["experiment.seed"],
        channel=channel,
        domains=domains,
        policy=str(v["experiment.policy"]),
        reward=reward,
        c=float(v["agent.c"]),
        capture_threshold_db=float(v["collision.capture_threshold_db"]),
        adr_margin_db=float(v["baselines.adr_margin_db"]),
        weights=(float(v["utility.theta"]), float(v["utility.phi"]), float(v["utility.psi"])),
    )
    return SweepSpec(
        base=base,
        radii=tuple(float(r) for r in v["sweep.radii_m"]),
        policies=tuple(str(p) for p in v["sweep.policies"]),
        seeds=tuple(v["sweep.seeds"]),
        workers=v["sweep.workers"],
        out_dir=os.environ.get(OUT_DIR_ENV) or str(v["output.dir"]),
        trace=bool(v["output.trace"]),
        save_agents=bool(v["output.save_agents"]),
    )


def parse_config(text: str) -> SweepSpec:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"<root>: not valid YAML: {e}") from None
    return spec_from_values(resolve(raw))


def load_config(path: str | Path | None) -> SweepSpec:
    """Load and validate a config file; ``None`` yields all defaults."""
    if path is None:
        return spec_from_values(resolve({}))
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"<file>: config file not found: {p}")
    return parse_config(p.read_text())
