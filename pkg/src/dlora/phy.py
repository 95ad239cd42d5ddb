"""Analytical LoRa PHY model: airtime, sensitivity, path loss, SINR, energy.

Every function here is pure. Random samples (shadowing, noise jitter) are
drawn by the caller and passed in.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable

SF_SET: tuple[int, ...] = (7, 8, 9, 10, 11, 12)
BW_SET: tuple[float, ...] = (125e3, 250e3, 500e3)
CF_SET: tuple[float, ...] = tuple(float(470_100_000 + 200_000 * i) for i in range(8))
TP_SET: tuple[int, ...] = (2, 4, 6, 8, 10, 12, 14)

# Receiver sensitivity (dBm) keyed by (SF, BW in Hz).
SENSITIVITY_DBM: dict[tuple[int, float], float] = {}
for _bw, _row in (
    (125e3, (-123, -126, -129, -132, -133, -136)),
    (250e3, (-120, -123, -125, -128, -130, -133)),
    (500e3, (-116, -119, -122, -125, -128, -130)),
):
    for _sf, _rs in zip(SF_SET, _row):
        SENSITIVITY_DBM[(_sf, _bw)] = float(_rs)

SINR_THRESHOLD_DB: dict[int, float] = {
    7: -7.5,
    8: -10.0,
    9: -12.5,
    10: -15.0,
    11: -17.5,
    12: -20.0,
}

MIN_DISTANCE_M = 1.0


class ParameterError(ValueError):
    """A LoRa parameter or model setting is outside its valid domain."""


class PacketFate(enum.Enum):
    RECEIVED = "received"
    COLLISION_LOSS = "collision_loss"
    SIGNAL_LOSS = "signal_loss"


@dataclass(frozen=True, slots=True)
class LoRaParams:
    """Transmission configuration of one packet.

    ``bw`` and ``cf`` are in Hz, ``tp`` in dBm.
    """

    sf: int
    bw: float
    cf: float
    tp: float


@dataclass(frozen=True)
class ChannelModelConfig:
    mean_pl_d0: float = 128.95  # dB
    d0: float = 1000.0  # m
    gamma: float = 2.32
    sigma_shadow: float = 7.8  # dB
    sigma_awgn: float = 1.0  # dB
    noise_figure: float = 6.0  # dB
    n_preamble: int = 8
    crc: int = 1
    header: int = 0  # 0 = explicit header
    de: int = 0  # low data rate optimisation
    cr: int = 1  # coding rate 4/(4+cr)
    min_distance: float = MIN_DISTANCE_M  # m

    def __post_init__(self) -> None:
        if not self.d0 > 0:
            raise ParameterError(f"d0 must be > 0, got {self.d0}")
        if not self.gamma > 0:
            raise ParameterError(f"gamma must be > 0, got {self.gamma}")
        if self.sigma_shadow < 0:
            raise ParameterError(f"sigma_shadow must be >= 0, got {self.sigma_shadow}")
        if self.sigma_awgn < 0:
            raise ParameterError(f"sigma_awgn must be >= 0, got {self.sigma_awgn}")
        if self.n_preamble < 1:
            raise ParameterError(f"n_preamble must be >= 1, got {self.n_preamble}")
        if self.min_distance <= 0:
            raise ParameterError(f"min_distance must be > 0, got {self.min_distance}")


DEFAULT_CHANNEL = ChannelModelConfig()


def validate_params(p: LoRaParams) -> None:
    if p.sf not in SINR_THRESHOLD_DB:
        raise ParameterError(f"invalid SF {p.sf}")
    if (p.sf, p.bw) not in SENSITIVITY_DBM:
        raise ParameterError(f"invalid BW {p.bw}")
    if not (p.cf > 0 and math.isfinite(p.tp)):
        raise ParameterError(f"invalid CF/TP in {p}")


def payload_symbols(payload_bytes: int, p: LoRaParams, cfg: ChannelModelConfig = DEFAULT_CHANNEL) -> int:
    if payload_bytes < 1:
        raise ParameterError(f"payload_bytes must be >= 1, got {payload_bytes}")
    denom = 4 * (p.sf - 2 * cfg.de)
    if p.sf not in SINR_THRESHOLD_DB or denom <= 0:
        raise ParameterError(f"invalid SF {p.sf}")
    num = 8 * payload_bytes - 4 * p.sf + 28 + 16 * cfg.crc - 20 * cfg.header
    # integer ceil keeps the symbol count exact
    blocks = -(-num // denom)
    return 8 + max(blocks * (cfg.cr + 4), 0)


def symbol_time(sf: int, bw: float) -> float:
    return (2**sf) / bw


def time_on_air(payload_bytes: int, p: LoRaParams, cfg: ChannelModelConfig = DEFAULT_CHANNEL) -> float:
    """Packet duration in seconds (preamble plus payload)."""
    validate_params(p)
    t_sym = symbol_time(p.sf, p.bw)
    n_pay = payload_symbols(payload_bytes, p, cfg)
    return (cfg.n_preamble + 4.25) * t_sym + n_pay * t_sym


def receiver_sensitivity(sf: int, bw: float) -> float:
    try:
        return SENSITIVITY_DBM[(sf, float(bw))]
    except KeyError:
        raise ParameterError(f"no sensitivity entry for SF={sf}, BW={bw}") from None


def sinr_threshold(sf: int) -> float:
    try:
        return SINR_THRESHOLD_DB[sf]
    except KeyError:
        raise ParameterError(f"no SINR threshold for SF={sf}") from None


def mean_path_loss(distance: float, cfg: ChannelModelConfig = DEFAULT_CHANNEL) -> float:
    """Log-distance path loss in dB without the shadowing term."""
    d = max(distance, cfg.min_distance)
    return cfg.mean_pl_d0 + 10.0 * cfg.gamma * math.log10(d / cfg.d0)


def rssi_at_gateway(
    p: LoRaParams,
    distance: float,
    shadow_sample: float = 0.0,
    cfg: ChannelModelConfig = DEFAULT_CHANNEL,
) -> float:
    return p.tp - mean_path_loss(distance, cfg) - shadow_sample


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    return 10.0 * math.log10(mw)


def thermal_noise_dbm(bw: float, cfg: ChannelModelConfig = DEFAULT_CHANNEL, jitter_db: float = 0.0) -> float:
    return -174.0 + 10.0 * math.log10(bw) + cfg.noise_figure + jitter_db


def compute_sinr(target_rssi: float, interferer_rssis: Iterable[float], noise_dbm: float) -> float:
    """SINR in dB, summing interference and noise in linear milliwatts."""
    denom = dbm_to_mw(noise_dbm)
    interferers = list(interferer_rssis)
    if not interferers:
        return target_rssi - noise_dbm
    for r in interferers:
        denom += dbm_to_mw(r)
    return 10.0 * math.log10(dbm_to_mw(target_rssi) / denom)


def decode_check(target_rssi: float, sinr: float, p: LoRaParams) -> bool:
    """True when the signal survives propagation (clears RS and SINR threshold)."""
    return target_rssi >= receiver_sensitivity(p.sf, p.bw) and sinr >= sinr_threshold(p.sf)


def packet_energy(p: LoRaParams, toa: float) -> float:
    """Transmit energy in mJ: linear TP (mW) times airtime (s)."""
    if toa <= 0:
        raise ParameterError(f"toa must be > 0, got {toa}")
    return dbm_to_mw(p.tp) * toa
