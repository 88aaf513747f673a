"""Fit the constant c in d Omega = c * sum_i omega_i ^ lambda_i.

Uses the QK defect decomposition nabla S_j = sum_i S_i alpha_ij + L_j at
sampled points of every scenario where d Omega does not vanish.
"""

import numpy as np

from tmgeom import tangent_bundle as tb
from tmgeom.cli import sample_tm_points
from tmgeom.scenarios import BUILTINS


def main():
    for name, spec in ((n, f()) for n, f in BUILTINS.items()):
        if spec.acs is None:
            continue
        mfd = spec.manifold()
        consts, disc, raw = [], [], []
        for p in sample_tm_points(mfd, 10, 1):
            q = tb.qk_defect(mfd, p)
            if np.max(np.abs(q.dOmega)) < 1e-8:
                continue
            consts.append(q.best_constant)
            disc.append(q.discrepancy)
            raw.append(q.raw_discrepancy)
        if not consts:
            print(f"{name:<26} d Omega = 0 at all points")
            continue
        print(
            f"{name:<26} c in [{min(consts):.12f}, {max(consts):.12f}]"
            f"  residual {max(disc):.1e}  residual with c = 1: {min(raw):.2e}"
        )


if __name__ == "__main__":
    main()
