"""Command-line front end.

    cryocim run <scenario> [--out DIR]
    cryocim check <scenario>
    cryocim version

``<scenario>`` is a path or the name of a bundled scenario (fig2_hysteresis,
fig4_read, fig4_logic, fig4_mc). The output directory defaults to
``$CRYOCIM_OUT`` or ``./cryocim_out``.
"""
from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .runner import RunError, run_scenario
from .scenario import ScenarioError, bundled_scenarios, check_file, load_scenario

OUT_ENV = "CRYOCIM_OUT"


def _run(args) -> int:
    try:
        sc = load_scenario(args.scenario)
    except FileNotFoundError as exc:
        print(f"error: {exc.filename}: no such scenario file", file=sys.stderr)
        return 2
    except ScenarioError as exc:
        for v in exc.violations:
            print(f"error: {v}", file=sys.stderr)
        return 2
    if args.workers:
        sc.workers = args.workers
    out = args.out or os.environ.get(OUT_ENV) or "cryocim_out"
    try:
        run_scenario(sc, out)
    except RunError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    with open(os.path.join(out, "summary.txt")) as fh:
        sys.stdout.write(fh.read())
    print(f"artifacts written to {out}")
    return 0


def _check(args) -> int:
    violations = check_file(args.scenario)
    if violations:
        for v in violations:
            print(v)
        return 1
    print("OK")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="cryocim", description="QAHE compute-in-memory array simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a scenario and write artifacts")
    p.add_argument("scenario", help=f"scenario file or bundled name ({', '.join(bundled_scenarios())})")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./cryocim_out)")
    p.add_argument("--workers", type=int, default=None, help="threads for Monte-Carlo sampling")
    p.set_defaults(func=_run)

    p = sub.add_parser("check", help="validate a scenario without running it")
    p.add_argument("scenario")
    p.set_defaults(func=_check)

    p = sub.add_parser("version", help="print the tool version")
    p.set_defaults(func=lambda args: print(f"cryocim {__version__}") or 0)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
