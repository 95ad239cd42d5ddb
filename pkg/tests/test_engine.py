import statistics
from dataclasses import replace

import pytest

from dlora.bandit import Mode
from dlora.baselines import POLICY_NAMES, Policy
from dlora.collision import Transmission, resolve_collisions
from dlora.engine import EventQueue, SimConfig, Simulation, make_streams, run_experiment
from dlora.network import compute_metrics
from dlora.phy import CF_SET, ChannelModelConfig, LoRaParams, PacketFate, mean_path_loss, thermal_noise_dbm

from oracles import single_link_success

SMALL = SimConfig(n_nodes=10, packets_per_node=20, train_episodes=3, test_episodes=2)


class Fixed(Policy):
    def __init__(self, params):
        self.params = params

    def select(self, node, rng):
        return self.params


def P(sf=7, bw=125e3, tp=14, cf=CF_SET[0]):
    return LoRaParams(sf, bw, cf, tp)


def test_event_queue_tiebreak():
    q = EventQueue()
    q.push(1.0, 3, EventQueue.START)
    q.push(1.0, 1, EventQueue.END)
    q.push(0.5, 9, EventQueue.START)
    q.push(1.0, 1, EventQueue.START)
    assert [q.pop()[:3] for _ in range(4)] == [(0.5, 9, 0), (1.0, 1, 1), (1.0, 1, 0), (1.0, 3, 0)]


def test_streams_independent_and_reproducible():
    a, b = make_streams(3), make_streams(3)
    assert [a["traffic"].random() for _ in range(3)] == [b["traffic"].random() for _ in range(3)]
    assert make_streams(3)["traffic"].random() != make_streams(3)["noise"].random()


class TestTinyNetworks:
    def test_single_packet_close_in(self):
        cfg = replace(SMALL, n_nodes=1, packets_per_node=1)
        ep = Simulation(cfg, Fixed(P()), positions=[(100.0, 0.0)]).run_episode()
        assert ep.metrics.pdr == 1.0
        assert ep.fates[PacketFate.RECEIVED] == 1

    def test_identical_pair_collides(self):
        cfg = replace(
            SMALL, n_nodes=2, packets_per_node=1, lam=1e6, channel=ChannelModelConfig(sigma_shadow=0.0)
        )
        ep = Simulation(cfg, Fixed(P()), positions=[(300.0, 0.0), (300.0, 0.0)]).run_episode(keep_records=True)
        assert ep.fates[PacketFate.COLLISION_LOSS] == 2
        assert all(r.collided for r in ep.records)

    def test_far_weak_node_loses_signal(self):
        cfg = replace(SMALL, n_nodes=1, packets_per_node=5)
        ep = Simulation(cfg, Fixed(P(tp=2)), positions=[(10_000.0, 0.0)]).run_episode()
        assert ep.fates[PacketFate.SIGNAL_LOSS] == 5
        assert ep.metrics.ee == ep.metrics.th == 0.0

    def test_stronger_packet_captures(self):
        cfg = replace(
            SMALL, n_nodes=2, packets_per_node=1, lam=1e6, channel=ChannelModelConfig(sigma_shadow=0.0)
        )
        ep = Simulation(cfg, Fixed(P()), positions=[(50.0, 0.0), (900.0, 0.0)]).run_episode(keep_records=True)
        by_node = {r.sender: r.fate for r in ep.records}
        assert by_node == {0: PacketFate.RECEIVED, 1: PacketFate.COLLISION_LOSS}


def _episode(policy, seed=0, radius=1000.0, phase_mode=Mode.TRAINING):
    cfg = replace(SMALL, policy=policy, seed=seed, radius=radius, n_nodes=20)
    sim = Simulation(cfg)
    sim.set_mode(phase_mode)
    return sim, sim.run_episode(keep_records=True)


@pytest.mark.parametrize("policy", POLICY_NAMES)
def test_ledgers_conserve(policy):
    sim, ep = _episode(policy, seed=4)
    sent = sum(len(n.sent) for n in sim.nodes)
    assert sent == 20 * 20 == sum(ep.fates.values())
    assert sent == len(sim.gateway.received) + sum(len(n.lost) for n in sim.nodes)
    for r in sim.gateway.received:
        assert not r.collided and not r.signal_lost


@pytest.mark.parametrize("policy", ["random", "adr", "dlora-pdr"])
def test_fate_precedence_and_recount(policy):
    sim, ep = _episode(policy, seed=1)
    for r in ep.records:
        if r.collided:
            assert r.fate is PacketFate.COLLISION_LOSS
        elif r.signal_lost:
            assert r.fate is PacketFate.SIGNAL_LOSS
        else:
            assert r.fate is PacketFate.RECEIVED
    again = compute_metrics(sim.nodes, sim.gateway)
    assert again.pdr == pytest.approx(ep.metrics.pdr, abs=1e-9)
    assert again.ee == pytest.approx(ep.metrics.ee, rel=1e-9)
    assert again.th == pytest.approx(ep.metrics.th, rel=1e-9)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_online_collisions_match_batch_resolution(seed):
    _, ep = _episode("random", seed=seed, radius=500.0)
    batch = [Transmission(r.packet_id, r.sender, r.params, r.start, r.start + r.toa, r.rssi) for r in ep.records]
    resolved = resolve_collisions(batch)
    assert {r.packet_id: r.collided for r in ep.records} == resolved
    assert any(resolved.values())


def test_same_seed_same_episodes():
    a = run_experiment(replace(SMALL, policy="dlora-ee", seed=8))
    b = run_experiment(replace(SMALL, policy="dlora-ee", seed=8))
    assert [e.metrics for e in a.train + a.test] == [e.metrics for e in b.train + b.test]


def test_single_link_matches_closed_form():
    ch = ChannelModelConfig()
    d = 2223.0
    p = P(7, 125e3, 14)
    cfg = SimConfig(n_nodes=1, packets_per_node=10_000, seed=21)
    ep = Simulation(cfg, Fixed(p), positions=[(d, 0.0)]).run_episode()
    expect = single_link_success(
        14 - mean_path_loss(d, ch), -123.0, thermal_noise_dbm(125e3, ch), -7.5, ch.sigma_shadow, ch.sigma_awgn
    )
    assert 0.2 < expect < 0.8
    assert ep.metrics.pdr == pytest.approx(expect, abs=0.02)


def test_no_training_means_greedy_first_arms():
    res = run_experiment(replace(SMALL, policy="dlora-pdr", train_episodes=0, test_episodes=1), keep_records=True)
    assert {r.params for r in res.test[0].records} == {P(7, 125e3, 2, CF_SET[0])}


def test_random_train_and_test_agree():
    res = run_experiment(replace(SMALL, policy="random", n_nodes=30, train_episodes=10, test_episodes=10))
    tr = statistics.fmean(e.metrics.pdr for e in res.train)
    te = statistics.fmean(e.metrics.pdr for e in res.test)
    assert tr == pytest.approx(te, abs=0.05)


def test_training_improves_delivery():
    cfg = SimConfig(n_nodes=30, train_episodes=20, test_episodes=3, packets_per_node=50, policy="dlora-pdr", seed=2)
    res = run_experiment(cfg)
    assert statistics.fmean(e.metrics.pdr for e in res.test) > res.train[0].metrics.pdr


def test_episode_indices_continue_into_test():
    res = run_experiment(SMALL)
    assert [e.index for e in res.train + res.test] == list(range(5))
    assert [e.phase for e in res.test] == ["test", "test"]


def test_test_phase_leaves_tables_frozen():
    sim = Simulation(replace(SMALL, policy="dlora-th"))
    sim.run_episode()
    before = [a.to_dict()["bandits"] for a in sim.policy.agents]
    sim.set_mode(Mode.TEST)
    sim.run_episode("test")
    assert [a.to_dict()["bandits"] for a in sim.policy.agents] == before


def test_invalid_config():
    with pytest.raises(ValueError):
        Simulation(replace(SMALL, policy="csma"))
    with pytest.raises(ValueError):
        Simulation(replace(SMALL, weights=(0.5, 0.5, 0.5)))
