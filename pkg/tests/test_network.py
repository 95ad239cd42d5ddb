import math
import random

import pytest

from dlora.network import (
    EpisodeMetrics,
    Gateway,
    MetricError,
    Node,
    PacketRecord,
    compute_ee,
    compute_pdr,
    compute_th,
    generate_topology,
    normalized_utilities,
    utility,
)
from dlora.phy import CF_SET, LoRaParams, PacketFate


def record(pid, fate, toa=0.056576, tp=14, ps=20):
    return PacketRecord.build(pid, 0, ps, LoRaParams(7, 125e3, CF_SET[0], tp), toa, fate)


def ledger(fates, **kw):
    node, gw = Node(0, 0.0, 0.0), Gateway()
    for i, f in enumerate(fates):
        r = record(i, f, **kw)
        node.sent.append(r)
        if f is PacketFate.RECEIVED:
            node.received_ok.append(r)
            gw.received.append(r)
        else:
            node.lost.append(r)
    return [node], gw


R, C, S = PacketFate.RECEIVED, PacketFate.COLLISION_LOSS, PacketFate.SIGNAL_LOSS


class TestPDR:
    def test_ratio(self):
        assert compute_pdr(*ledger([R] * 80 + [C] * 20)) == 0.8

    def test_all_received(self):
        assert compute_pdr(*ledger([R] * 7)) == 1.0

    def test_nothing_sent(self):
        with pytest.raises(MetricError):
            compute_pdr([Node(0, 0, 0)], Gateway())

    def test_random_ledger_recount(self):
        rng = random.Random(5)
        fates = [rng.choice([R, C, S]) for _ in range(500)]
        assert compute_pdr(*ledger(fates)) == fates.count(R) / 500


class TestEE:
    def test_single_packet(self):
        assert compute_ee(*ledger([R])) == pytest.approx(112.59, abs=5e-3)

    def test_nothing_received(self):
        assert compute_ee(*ledger([C, S])) == 0.0

    def test_scale_invariance(self):
        fates = [R, C, R, S]
        a = compute_ee(*ledger(fates, ps=20, toa=0.05))
        b = compute_ee(*ledger(fates, ps=40, toa=0.10))
        assert a == pytest.approx(b, rel=1e-12)

    def test_zero_energy(self):
        with pytest.raises(MetricError):
            compute_ee([Node(0, 0, 0)], Gateway())


class TestTH:
    def test_single_packet(self):
        assert compute_th(*ledger([R])) == pytest.approx(2828.05, abs=0.01)

    def test_nothing_received(self):
        assert compute_th(*ledger([S])) == 0.0

    def test_random_ledger_recount(self):
        rng = random.Random(9)
        toas = [rng.uniform(0.05, 1.3) for _ in range(200)]
        fates = [rng.choice([R, C, S]) for _ in range(200)]
        node, gw = Node(0, 0, 0), Gateway()
        for i, (f, t) in enumerate(zip(fates, toas)):
            r = record(i, f, toa=t)
            node.sent.append(r)
            if f is R:
                gw.received.append(r)
        expect = 160 * fates.count(R) / sum(toas)
        assert compute_th([node], gw) == pytest.approx(expect, rel=1e-12)


def test_record_energy_is_linear_power_times_airtime():
    r = record(0, R, toa=0.5, tp=10)
    assert r.energy == 10.0 * 0.5


class TestUtility:
    def test_pdr_only(self):
        m = EpisodeMetrics(0.7, 50.0, 900.0)
        assert utility(m, 1, 0, 0, (0, 100), (0, 1000)) == 0.7

    def test_identical_metrics(self):
        ms = [EpisodeMetrics(0.5, 10.0, 100.0)] * 3
        us = normalized_utilities(ms, 0.2, 0.3, 0.5)
        assert us[0] == us[1] == us[2]

    def test_two_episodes(self):
        a, b = EpisodeMetrics(0.9, 40.0, 500.0), EpisodeMetrics(0.6, 100.0, 300.0)
        ua, ub = normalized_utilities([a, b], 0.5, 0.25, 0.25)
        # a: EE at the min, TH at the max; b the reverse
        assert ua == pytest.approx(0.5 * 0.9 + 0.25 * 0 + 0.25 * 1)
        assert ub == pytest.approx(0.5 * 0.6 + 0.25 * 1 + 0.25 * 0)

    def test_bad_weights(self):
        with pytest.raises(ValueError):
            utility(EpisodeMetrics(0.5, 1, 1), 0.5, 0.5, 0.5, (0, 1), (0, 1))
        with pytest.raises(ValueError):
            utility(EpisodeMetrics(0.5, 1, 1), 1.5, -0.5, 0.0, (0, 1), (0, 1))


def test_metrics_range_checked():
    with pytest.raises(MetricError):
        EpisodeMetrics(1.2, 0, 0)


class TestTopology:
    def test_inside_disk(self):
        pts = generate_topology(500, 1500.0, random.Random(1))
        assert all(math.hypot(x, y) <= 1500.0 for x, y in pts)

    def test_deterministic(self):
        assert generate_topology(50, 1000, random.Random(3)) == generate_topology(50, 1000, random.Random(3))

    def test_mean_distance(self):
        pts = generate_topology(100_000, 1000.0, random.Random(7))
        mean = sum(math.hypot(x, y) for x, y in pts) / len(pts)
        assert mean == pytest.approx(2000.0 / 3.0, rel=0.02)

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            generate_topology(0, 10, random.Random(0))
