"""Command-line front end for the experiment harness.

Scenario settings come from an optional flat key=value config file; command
line flags override file values.  Results go to stdout as a mean +/- std
summary and, with --out, to a CSV with one row per seeded run.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import (
    ConfigError,
    ScenarioConfig,
    emit_csv,
    parse_config,
    parse_placement,
    run_experiment,
    summarize,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="namecast",
        description="Run seeded simulations of adaptive-rate named-data "
                    "applications over wireless ad-hoc or wired networks.",
    )
    parser.add_argument("--config", metavar="FILE",
                        help="flat key=value scenario file")
    parser.add_argument("--scenario", help="scenario label echoed into the CSV")
    parser.add_argument("--topology",
                        choices=["grid", "linear-wireless", "linear-wired"])
    parser.add_argument("--nodes", type=int)
    parser.add_argument("--speed", type=float, help="node speed in m/s (0-8)")
    parser.add_argument("--duration", type=float, help="seconds per run")
    parser.add_argument("--traffic",
                        choices=["one-to-one", "many-to-one", "many-to-many"])
    parser.add_argument("--consumers", type=int)
    parser.add_argument("--producers", type=int)
    parser.add_argument("--cs", type=int, dest="cs_capacity",
                        help="content store capacity in packets")
    parser.add_argument("--cwl", dest="cwl_enabled", action="store_true",
                        default=None, help="enable the hop-count window limit")
    parser.add_argument("--no-cwl", dest="cwl_enabled", action="store_false",
                        default=None)
    parser.add_argument("--dil", dest="dil_enabled", action="store_true",
                        default=None, help="enable dynamic Interest lifetime")
    parser.add_argument("--no-dil", dest="dil_enabled", action="store_false",
                        default=None)
    parser.add_argument("--gamma", type=float, help="timeout checker multiplier")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--runs", type=int)
    parser.add_argument("--payload", type=int)
    parser.add_argument("--bottleneck", action="store_true", default=None)
    parser.add_argument("--p-byte-error", type=float, dest="p_byte_error")
    parser.add_argument("--p-frame-error", type=float, dest="p_frame_error")
    parser.add_argument("--placement-file", metavar="FILE",
                        help="pin consumer/producer node ids for scripted tests")
    parser.add_argument("--out", metavar="CSV", help="write per-run metric rows")
    parser.add_argument("--trace", action="store_true",
                        help="write per-run cwnd/RTT time series next to --out")
    return parser


OVERRIDE_KEYS = [
    "scenario", "topology", "nodes", "speed", "duration", "traffic",
    "consumers", "producers", "cs_capacity", "cwl_enabled", "dil_enabled",
    "gamma", "seed", "runs", "payload", "bottleneck", "p_byte_error",
    "p_frame_error",
]


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            with open(args.config) as fh:
                config = parse_config(fh.read())
        else:
            config = ScenarioConfig()
        overrides = {
            key: getattr(args, key)
            for key in OVERRIDE_KEYS
            if getattr(args, key) is not None
        }
        if overrides:
            from dataclasses import replace
            config = replace(config, **overrides)
            config.validate()
        placement = None
        if args.placement_file:
            with open(args.placement_file) as fh:
                placement = parse_placement(fh.read(), config)
        if args.trace and not args.out:
            parser.error("--trace requires --out")
        trace_stem = args.out.rsplit(".", 1)[0] if (args.trace and args.out) else None
        records = run_experiment(config, placement=placement, trace_stem=trace_stem)
    except (ConfigError, OSError) as exc:
        print(f"namecast: {exc}", file=sys.stderr)
        return 1

    if args.out:
        emit_csv(records, args.out)
        print(f"wrote {len(records)} runs to {args.out}")
    stats = summarize(records)
    width = max(len(name) for name in stats)
    print(f"{config.scenario}: {len(records)} runs, seeds "
          f"{config.seed}..{config.seed + config.runs - 1}")
    for name, (mean, std) in stats.items():
        print(f"  {name:<{width}}  {mean:12.6f} +/- {std:.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
