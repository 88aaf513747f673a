"""Sweep the Stiefel family (I_a, I_b, I_a I_b) on flat R^8.

For random orthonormal pairs (a, b) prints the algebra defects of the triple
and the size of d Omega_{a,b}.  All should sit at rounding level.
"""

import argparse

import numpy as np

from tmgeom import tangent_bundle as tb
from tmgeom.checks import random_stiefel_pair
from tmgeom.cli import sample_tm_points
from tmgeom.scenarios import BUILTINS


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pairs", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    mfd = BUILTINS["r8_quaternionic_flat"]().manifold()
    pts = sample_tm_points(mfd, args.pairs, args.seed)
    print(f"{'a':>30}  {'b':>30}  {'anticomm':>9}  {'dOmega':>9}")
    for p in pts:
        a, b = random_stiefel_pair(rng)
        geo = tb.TMGeometry(mfd, p)
        Ia, Ib, _ = (S.val for S in geo.family(a, b))
        anti = np.max(np.abs(Ia @ Ib + Ib @ Ia))
        dk = tb.d_kraines(mfd, geo, (a, b))
        fmt = lambda u: np.array2string(u, precision=3, suppress_small=True)  # noqa: E731
        print(f"{fmt(a):>30}  {fmt(b):>30}  {anti:9.1e}  {dk:9.1e}")


if __name__ == "__main__":
    main()
