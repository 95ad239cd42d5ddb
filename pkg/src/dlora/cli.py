"""Command line entry point: ``dlora {run,sweep,validate,toa}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .baselines import parse_policy
from .config import OUT_DIR_ENV, ConfigError, SweepSpec, load_config, schema_help
from .harness import format_summary, run_sweep
from .phy import DEFAULT_CHANNEL, LoRaParams, ParameterError, packet_energy, payload_symbols, symbol_time, time_on_air


def _apply_overrides(spec: SweepSpec, args, single: bool) -> SweepSpec:
    base = spec.base
    if args.seed is not None:
        base = replace(base, seed=args.seed)
        spec = replace(spec, seeds=(args.seed,))
    if args.policy is not None:
        parse_policy(args.policy)
        base = replace(base, policy=args.policy)
        spec = replace(spec, policies=(args.policy,))
    if single:
        spec = replace(spec, radii=(base.radius,), policies=(base.policy,), seeds=(base.seed,))
    spec = replace(spec, base=base)
    if args.out:
        spec = replace(spec, out_dir=args.out)
    if getattr(args, "workers", None):
        spec = replace(spec, workers=args.workers)
    return spec


def cmd_run(args, single: bool) -> int:
    spec = _apply_overrides(load_config(args.config), args, single)
    path, summary = run_sweep(spec)
    print(format_summary(summary), end="")
    print(f"wrote {path} and {path.with_name('summary.csv')}")
    return 0


def cmd_validate(args) -> int:
    spec = _apply_overrides(load_config(args.config), args, single=False)
    b = spec.base
    print(
        f"ok: policy={b.policy} n_nodes={b.n_nodes} radius_m={b.radius:g} "
        f"train={b.train_episodes} test={b.test_episodes} seed={b.seed}; "
        f"sweep {len(spec.policies)} policies x {len(spec.radii)} radii x {len(spec.seeds)} seeds"
    )
    return 0


def cmd_toa(args) -> int:
    p = LoRaParams(args.sf, args.bw, 470_100_000.0, args.tp)
    toa = time_on_air(args.payload, p, DEFAULT_CHANNEL)
    print(f"symbol_time_s={symbol_time(p.sf, p.bw)!r}")
    print(f"payload_symbols={payload_symbols(args.payload, p, DEFAULT_CHANNEL)}")
    print(f"toa_s={toa!r}")
    print(f"energy_mj={packet_energy(p, toa)!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    epilog = schema_help() + f"\n\nenvironment: {OUT_DIR_ENV} overrides output.dir"
    fmt = argparse.RawDescriptionHelpFormatter
    parser = argparse.ArgumentParser(
        prog="dlora",
        description="LoRa uplink simulator with per-node UCB parameter agents and baselines.",
        epilog=epilog,
        formatter_class=fmt,
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH", help="YAML config file (defaults used when omitted)")
        p.add_argument("--out", metavar="DIR", help="output directory (overrides config and env)")
        p.add_argument("--seed", type=int, metavar="N", help="seed override")
        p.add_argument("--policy", metavar="NAME", help="policy override")

    p_run = sub.add_parser("run", help="one run from experiment.* settings", epilog=epilog, formatter_class=fmt)
    common(p_run)
    p_sweep = sub.add_parser("sweep", help="radius x policy x seed sweep", epilog=epilog, formatter_class=fmt)
    common(p_sweep)
    p_sweep.add_argument("--workers", type=int, metavar="N", help="worker processes")
    p_val = sub.add_parser("validate", help="check a config without running", epilog=epilog, formatter_class=fmt)
    common(p_val)

    p_toa = sub.add_parser("toa", help="airtime calculator")
    p_toa.add_argument("--sf", type=int, default=7, help="spreading factor (default 7)")
    p_toa.add_argument("--bw", type=float, default=125e3, help="bandwidth in Hz (default 125000)")
    p_toa.add_argument("--payload", type=int, default=20, help="payload in bytes (default 20)")
    p_toa.add_argument("--tp", type=float, default=14.0, help="transmit power in dBm (default 14)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "toa":
            return cmd_toa(args)
        if args.command == "validate":
            return cmd_validate(args)
        return cmd_run(args, single=args.command == "run")
    except (ConfigError, ParameterError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001 - any run failure must surface as a nonzero exit
        print(f"error: run failed: {e!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
