"""Run every bundled scenario into one output tree and print each summary.

    python scripts/reproduce_results.py [--out DIR] [--workers N]
"""
import argparse
from pathlib import Path

from cryocim.runner import run_scenario
from cryocim.scenario import bundled_scenarios, load_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="cryocim_results")
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()
    for name in bundled_scenarios():
        sc = load_scenario(name)
        if args.workers:
            sc.workers = args.workers
        out = Path(args.out) / name
        run_scenario(sc, out)
        print((out / "summary.txt").read_text())


if __name__ == "__main__":
    main()
