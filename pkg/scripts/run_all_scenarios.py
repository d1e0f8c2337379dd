#!/usr/bin/env python3
"""Run every bundled scenario and print a combined verdict table.

Usage: python scripts/run_all_scenarios.py [--output-root DIR] [--parallel]
Exit status is 0 only if every scenario exits 0.
"""

import argparse
import os
import sys

from koopsets.cli import run_scenario

SCENARIO_DIR = os.path.join(os.path.dirname(__file__), "..", "scenarios")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--output-root", default=None,
                        help="write per-scenario reports under this root")
    parser.add_argument("--parallel", action="store_true",
                        help="run each scenario's checks concurrently")
    args = parser.parse_args(argv)

    configs = sorted(
        f for f in os.listdir(SCENARIO_DIR) if f.endswith(".toml"))
    if not configs:
        print("no scenarios found", file=sys.stderr)
        return 2

    worst = 0
    rows = []
    for name in configs:
        path = os.path.join(SCENARIO_DIR, name)
        out_dir = None
        if args.output_root:
            out_dir = os.path.join(args.output_root,
                                   os.path.splitext(name)[0])
        code = run_scenario(path, output_dir=out_dir, parallel=args.parallel)
        rows.append((name, code))
        worst = max(worst, code)

    width = max(len(name) for name, _ in rows)
    print("\nscenario".ljust(width + 1), "exit")
    for name, code in rows:
        print(name.ljust(width + 1), code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
