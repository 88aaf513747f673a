"""Ricci curvature of TM over surfaces.

Prints the scalar curvature of TM over the round sphere against 2 - c^2/2,
the Einstein defect, and the scalar equation for the constant torsion plane.
"""

import numpy as np

from tmgeom.cli import sample_tm_points
from tmgeom.scenarios import BUILTINS
from tmgeom.surface2d import einstein_defect, tm_ricci
from tmgeom.tangent_bundle import tm_metric


def main():
    s2 = BUILTINS["s2_round"]().manifold()
    print("round sphere: scal(TM) vs 2 - c^2/2")
    for p in sample_tm_points(s2, 6, 5):
        G = tm_metric(s2, p)
        scal = np.einsum("ab,ab->", np.linalg.inv(G), tm_ricci(s2, p))
        c2 = p.v @ s2.metric.value(p.x) @ p.v
        d = einstein_defect(s2, p)
        print(f"  c = {np.sqrt(c2):.3f}  scal {scal: .8f}  closed form {2 - c2 / 2: .8f}  Einstein defect {d.defect:.3f}")
    f2 = BUILTINS["surface_torsion_f2"]().manifold()
    print("constant torsion plane: Ricci, scalar equation, -f2^2")
    for p in sample_tm_points(f2, 6, 5):
        d = einstein_defect(f2, p)
        print(f"  |Ric| {np.max(np.abs(d.ricci)):.1e}  scalar_eq {d.scalar_eq_residual: .2e}  -f2^2 {-d.f2**2: .4f}")


if __name__ == "__main__":
    main()
