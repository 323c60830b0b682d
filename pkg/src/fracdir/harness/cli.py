"""Command line entry point: ``fracdir <command> --config file.json``."""

from __future__ import annotations

import argparse
import sys

from ..errors import ConfigError
from .scenario import COMMAND_SUITES, run_scenario


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracdir", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, suites in COMMAND_SUITES.items():
        p = sub.add_parser(name, help="default suites: " + ", ".join(suites))
        p.add_argument("--config", required=True, help="JSON scenario file")
        p.add_argument("--seed", type=int, default=None, help="override mc.seed")
        p.add_argument("--out", default="fracdir-out", help="output directory")
        p.add_argument("--paths", type=int, default=None, help="override mc.paths")
        p.add_argument("--falsify", action="store_true",
                       help="allow parameters outside the hypotheses and add falsification probes")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report = run_scenario(args.config, args.out, command=args.command, seed=args.seed,
                              paths=args.paths, falsify=args.falsify)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    v = report["verdicts"]
    for name, s in v["suites"].items():
        print(f"{s['verdict']:>12}  {name}")
        for c in s["checks"]:
            tag = "" if c["asserted"] else " (reported)"
            print(f"{'':>14}{c['verdict']:<12} {c['name']}{tag}")
    print(f"overall: {v['overall']} ({v['asserted']} asserted checks) -> {args.out}/report.json")
    return 0 if v["overall"] == "pass" else 1


if __name__ == "__main__":
    sys.exit(main())
