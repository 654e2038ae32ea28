"""Command-line entry point.

`rocesim run` executes one scenario and writes a report directory; `rocesim
sweep` runs the cross-product of one or more value lists over config keys,
one report directory per point plus an index CSV.

Exit codes: 0 success, 2 configuration or validation error, 3 runtime
assertion (for example an input-buffer overflow caused by degenerate manual
watermarks).
"""

from __future__ import annotations

import argparse
import copy
import itertools
import os
import sys
from pathlib import Path

from .link import BufferOverflow, HeadroomExceedsCapacity
from .presets import PRESETS
from .report import write_report_dir
from .scenario import (
    ParseError,
    Scenario,
    ValidationError,
    finalize_scenario,
    parse_duration_ns,
    parse_scenario,
    render_scenario,
    set_config_value,
)
from .simulation import Simulation

DEFAULT_OUT = "rocesim-out"

CONFIG_ERRORS = (ParseError, ValidationError, HeadroomExceedsCapacity, ValueError)
RUNTIME_ERRORS = (BufferOverflow, AssertionError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rocesim",
        description="Packet-level simulator of lossless RoCEv2-style fabrics "
                    "(per-VL PFC plus ECN/CNP congestion management).")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("--scenario", choices=sorted(PRESETS),
                           help="built-in scenario preset")
        group.add_argument("--config", metavar="FILE",
                           help="scenario file to load")
        p.add_argument("--rcm", choices=["off", "1a", "1b"],
                       help="congestion detection mode (shorthand for --set rcm.mode=...)")
        p.add_argument("--mark-at", choices=["root", "root+victim"], dest="mark_at",
                       help="marking scope for mode 1a")
        p.add_argument("--duration", default="10ms",
                       help="simulated time to run (ns/us/ms/s suffixes; default 10ms)")
        p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
        p.add_argument("--out", help="report directory (default $ROCESIM_OUT or ./%s)"
                       % DEFAULT_OUT)
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       dest="overrides",
                       help="override a config key, e.g. rcm.recovery_time_ns=50us "
                            "(repeatable; wins over --rcm/--mark-at)")
        p.add_argument("--no-figures", action="store_true",
                       help="skip rendering PNG figures")

    run_p = sub.add_parser("run", help="run one scenario and write reports")
    add_common(run_p)
    run_p.add_argument("--trace", action="store_true",
                       help="dump the event trace (time,seq,target,kind) for "
                            "determinism diffing")

    sweep_p = sub.add_parser("sweep", help="run a cross-product of config values")
    add_common(sweep_p)
    sweep_p.add_argument("--sweep", action="append", default=[], required=True,
                         metavar="KEY=V1,V2[,...]", dest="sweeps",
                         help="key with a comma-separated value list (repeatable; "
                              "the cross-product of all lists is run)")
    return parser


def _load_scenario(args) -> Scenario:
    if args.scenario:
        return PRESETS[args.scenario]()
    text = Path(args.config).read_text()
    return parse_scenario(text)


def _apply_overrides(scenario: Scenario, args, extra: list[tuple[str, str]] = ()):
    topo, flows, mech = scenario
    if args.rcm:
        set_config_value(mech, "rcm.mode", args.rcm)
    if args.mark_at:
        set_config_value(mech, "rcm.mark_at", args.mark_at)
    for item in args.overrides:
        key, sep, value = item.partition("=")
        if not sep or not key.strip() or not value.strip():
            raise ValidationError(f"--set expects KEY=VALUE, got {item!r}")
        set_config_value(mech, key, value)
    for key, value in extra:
        set_config_value(mech, key, value)
    finalize_scenario(topo, flows, mech)


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get("ROCESIM_OUT") or DEFAULT_OUT)


def _run_one(scenario: Scenario, duration_ns: int, seed: int, out_dir: Path,
             trace: bool, figures: bool) -> Simulation:
    out_dir.mkdir(parents=True, exist_ok=True)
    trace_handle = open(out_dir / "trace.csv", "w") if trace else None
    try:
        sim = Simulation(scenario, duration_ns, seed=seed, trace=trace_handle)
        summary = sim.run()
    finally:
        if trace_handle is not None:
            trace_handle.close()
    write_report_dir(sim.stats, out_dir,
                     effective_scenario=render_scenario(scenario),
                     figures=figures)
    for key in sim.stats.flow_order:
        fs = sim.stats.flows[key]
        print(f"flow {fs.flow_id}: steady {sim.stats.steady_gbps(key):.3f} Gbps, "
              f"{fs.packets_delivered} packets delivered")
    print(f"{summary.events_processed} events in {summary.wall_seconds:.2f}s "
          f"wall; reports in {out_dir}")
    return sim


def _parse_positive_duration(text: str) -> int:
    duration = parse_duration_ns(text)
    if duration <= 0:
        raise ValueError(f"duration must be positive, got {text!r}")
    return duration


def cmd_run(args) -> int:
    try:
        duration = _parse_positive_duration(args.duration)
        scenario = _load_scenario(args)
        _apply_overrides(scenario, args)
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        _run_one(scenario, duration, args.seed, _out_dir(args),
                 trace=args.trace, figures=not args.no_figures)
    except RUNTIME_ERRORS as exc:
        print(f"runtime assertion: {exc}", file=sys.stderr)
        return 3
    return 0


def _parse_sweeps(items: list[str]) -> list[tuple[str, list[str]]]:
    sweeps = []
    for item in items:
        key, sep, values = item.partition("=")
        key = key.strip()
        value_list = [v.strip() for v in values.split(",") if v.strip()]
        if not sep or not key or not value_list:
            raise ValidationError(f"--sweep expects KEY=V1,V2[,...], got {item!r}")
        sweeps.append((key, value_list))
    return sweeps


def cmd_sweep(args) -> int:
    try:
        duration = _parse_positive_duration(args.duration)
        base = _load_scenario(args)
        _apply_overrides(base, args)
        sweeps = _parse_sweeps(args.sweeps)
        # dry-run every point's overrides so a bad value fails before any run
        for combo in itertools.product(*(values for _, values in sweeps)):
            probe = copy.deepcopy(base)
            _apply_overrides(probe, argparse.Namespace(rcm=None, mark_at=None,
                                                       overrides=[]),
                             extra=list(zip((k for k, _ in sweeps), combo)))
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out_root = _out_dir(args)
    out_root.mkdir(parents=True, exist_ok=True)
    keys = [k for k, _ in sweeps]
    index_lines = ["point," + ",".join(keys) + ",flow,steady_gbps"]
    try:
        for idx, combo in enumerate(
                itertools.product(*(values for _, values in sweeps))):
            point = copy.deepcopy(base)
            _apply_overrides(point, argparse.Namespace(rcm=None, mark_at=None,
                                                       overrides=[]),
                             extra=list(zip(keys, combo)))
            point_dir = out_root / f"point_{idx:03d}"
            print(f"[point {idx}] " + " ".join(f"{k}={v}" for k, v in zip(keys, combo)))
            sim = _run_one(point, duration, args.seed, point_dir,
                           trace=False, figures=not args.no_figures)
            for key in sim.stats.flow_order:
                fs = sim.stats.flows[key]
                index_lines.append(
                    f"point_{idx:03d}," + ",".join(combo) +
                    f",{fs.flow_id},{sim.stats.steady_gbps(key):.6f}")
    except RUNTIME_ERRORS as exc:
        print(f"runtime assertion: {exc}", file=sys.stderr)
        return 3
    (out_root / "index.csv").write_text("\n".join(index_lines) + "\n")
    print(f"sweep index in {out_root / 'index.csv'}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    return cmd_sweep(args)


if __name__ == "__main__":
    sys.exit(main())
