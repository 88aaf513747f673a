"""Run every built-in scenario and print a one-line summary per scenario."""

import argparse
import time

from tmgeom.cli import run
from tmgeom.scenarios import BUILTINS


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=50)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--verbose", action="store_true", help="print the full report of each scenario")
    args = ap.parse_args()
    n_fail = 0
    for name in BUILTINS:
        t0 = time.perf_counter()
        rep = run(BUILTINS[name](), samples=args.samples, seed=args.seed)
        bad = [c.name for c in rep.checks if c.verdict != "pass"]
        n_fail += bool(bad)
        status = "pass" if not bad else "FAIL " + ",".join(bad)
        print(f"{name:<26} {len(rep.checks):>3} checks  {time.perf_counter() - t0:6.2f} s  {status}")
        if args.verbose:
            print(rep.to_text(), end="\n\n")
    raise SystemExit(1 if n_fail else 0)


if __name__ == "__main__":
    main()
