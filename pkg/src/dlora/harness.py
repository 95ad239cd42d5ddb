"""Sweeps over radius x policy x seed, CSV serialisation and summary statistics."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

from .bandit import Mode, save_agents
from .baselines import DLoRaPolicy
from .config import SweepSpec
from .engine import Simulation, SimConfig
from .network import EpisodeMetrics, normalized_utilities

log = logging.getLogger(__name__)

RESULT_HEADER = ("policy", "radius_m", "seed", "episode", "phase", "pdr", "ee_bits_per_mj", "th_bps", "utility")
SUMMARY_HEADER = (
    "policy", "radius_m", "n",
    "pdr_mean", "pdr_std", "ee_mean", "ee_std", "th_mean", "th_std", "utility_mean", "utility_std",
)
TRACE_HEADER = (
    "policy", "radius_m", "seed", "episode", "phase", "packet_id", "node", "start_s",
    "sf", "bw_hz", "cf_hz", "tp_dbm", "toa_s", "energy_mj", "rssi_dbm", "sinr_db", "fate",
)


@dataclass(frozen=True)
class ResultRow:
    policy: str
    radius: float
    seed: int
    episode: int
    phase: str
    pdr: float
    ee: float
    th: float
    utility: float = 0.0

    def as_tuple(self) -> tuple:
        return (self.policy, self.radius, self.seed, self.episode, self.phase, self.pdr, self.ee, self.th, self.utility)


@dataclass
class CellResult:
    rows: list[ResultRow]
    trace: list[tuple] | None = None
    agents: list | None = None


def cells(spec: SweepSpec) -> list[SimConfig]:
    """Every (policy, radius, seed) run, policy-major, in a fixed order."""
    return [
        replace(spec.base, policy=p, radius=r, seed=s)
        for p in spec.policies
        for r in spec.radii
        for s in spec.seeds
    ]


def run_cell(cfg: SimConfig, trace: bool = False, keep_agents: bool = False) -> CellResult:
    sim = Simulation(cfg)
    rows: list[ResultRow] = []
    trace_rows: list[tuple] | None = [] if trace else None
    phases = [("train", Mode.TRAINING)] * cfg.train_episodes + [("test", Mode.TEST)] * cfg.test_episodes
    for phase, mode in phases:
        sim.set_mode(mode)
        ep = sim.run_episode(phase, keep_records=trace)
        m = ep.metrics
        rows.append(ResultRow(cfg.policy, cfg.radius, cfg.seed, ep.index, phase, m.pdr, m.ee, m.th))
        if trace_rows is not None:
            for r in ep.records:
                p = r.params
                trace_rows.append((
                    cfg.policy, cfg.radius, cfg.seed, ep.index, phase, r.packet_id, r.sender, r.start,
                    p.sf, p.bw, p.cf, p.tp, r.toa, r.energy, r.rssi, r.sinr, r.fate.value,
                ))
    agents = None
    if keep_agents and isinstance(sim.policy, DLoRaPolicy):
        agents = sim.policy.agents
    return CellResult(rows, trace_rows, agents)


def _run_cell_args(args) -> CellResult:
    return run_cell(*args)


def assign_utilities(rows: Sequence[ResultRow], weights: tuple[float, float, float]) -> list[ResultRow]:
    """Fill utilities, normalising EE/TH over all rows sharing a radius."""
    by_radius: dict[float, list[int]] = {}
    for i, r in enumerate(rows):
        by_radius.setdefault(r.radius, []).append(i)
    out = list(rows)
    for idx in by_radius.values():
        ms = [EpisodeMetrics(rows[i].pdr, rows[i].ee, rows[i].th) for i in idx]
        for i, u in zip(idx, normalized_utilities(ms, *weights)):
            out[i] = replace(rows[i], utility=u)
    return out


def _mean_std(vals: Sequence[float]) -> tuple[float, float]:
    if not vals:
        return math.nan, math.nan
    return statistics.fmean(vals), (statistics.stdev(vals) if len(vals) > 1 else 0.0)


def summarize(rows: Iterable[ResultRow]) -> list[tuple]:
    """Mean and sample std of test-phase metrics per (policy, radius)."""
    groups: dict[tuple[str, float], list[ResultRow]] = {}
    for r in rows:
        if r.phase == "test":
            groups.setdefault((r.policy, r.radius), []).append(r)
    out = []
    for (policy, radius), g in groups.items():
        stats = []
        for name in ("pdr", "ee", "th", "utility"):
            stats.extend(_mean_std([getattr(r, name) for r in g]))
        out.append((policy, radius, len(g), *stats))
    return out


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    # str(float) is the shortest round-trip repr, so values reload exactly
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def read_results(path: str | Path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RESULT_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [
            ResultRow(
                d["policy"], float(d["radius_m"]), int(d["seed"]), int(d["episode"]), d["phase"],
                float(d["pdr"]), float(d["ee_bits_per_mj"]), float(d["th_bps"]), float(d["utility"]),
            )
            for d in reader
        ]


def format_summary(summary: Sequence[tuple]) -> str:
    buf = io.StringIO()
    buf.write(f"{'policy':<15}{'radius_m':>10}{'n':>5}  {'PDR':>16}  {'EE bits/mJ':>18}  {'TH bps':>20}\n")
    for policy, radius, n, pm, ps, em, es, tm, ts, *_ in summary:
        buf.write(
            f"{policy:<15}{radius:>10g}{n:>5}  {pm:>8.4f} ± {ps:<6.4f}  {em:>9.2f} ± {es:<6.2f}  {tm:>10.1f} ± {ts:<7.1f}\n"
        )
    return buf.getvalue()


def run_sweep(spec: SweepSpec, out_dir: str | Path | None = None) -> tuple[Path, list[tuple]]:
    """Run every cell, write results.csv and summary.csv, return (results path, summary)."""
    out = Path(out_dir or spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    todo = cells(spec)
    for c in todo:
        c.validate()
    args = [(c, spec.trace, spec.save_agents) for c in todo]
    workers = spec.workers or os.cpu_count() or 1
    workers = min(workers, len(todo))
    log.info("running %d cells on %d worker(s)", len(todo), workers)
    if workers <= 1:
        results = [_run_cell_args(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            # map keeps submission order regardless of completion order
            results = list(pool.map(_run_cell_args, args))

    rows = assign_utilities([r for res in results for r in res.rows], spec.base.weights)
    results_path = out / "results.csv"
    write_csv(results_path, RESULT_HEADER, (r.as_tuple() for r in rows))
    summary = summarize(rows)
    write_csv(out / "summary.csv", SUMMARY_HEADER, summary)
    if spec.trace:
        write_csv(out / "trace.csv", TRACE_HEADER, (t for res in results for t in res.trace))
    if spec.save_agents:
        for cfg, res in zip(todo, results):
            if res.agents is not None:
                save_agents(res.agents, out / f"agents_{cfg.policy}_{cfg.radius:g}_{cfg.seed}.json")
    return results_path, summary
