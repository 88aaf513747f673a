"""What happens to constant type (3,0) torsion on flat C^2.

Compares the raw connection LC + contorsion with its Hermitian projection.
The projection removes the torsion entirely, while the raw connection is
neither Hermitian nor flat.
"""

import numpy as np

from tmgeom import base_manifold as bm
from tmgeom import tangent_bundle as tb
from tmgeom.cli import sample_tm_points
from tmgeom.scenarios import BUILTINS


def main():
    for name in ("flat_c2_type30_torsion", "flat_c2_type30_raw"):
        mfd = BUILTINS[name]().manifold()
        p = sample_tm_points(mfd, 1, 3)[0]
        x = p.x
        D = bm.metric_connection(mfd, x)
        T = bm.torsion_of(D.gamma)
        ty = bm.torsion_J_type(T, mfd.acs.value(x), mfd.metric.value(x))
        R = bm.curvature(mfd, x)
        print(f"{name}  connection={mfd.connection}")
        print(f"  realised |T|        {np.max(np.abs(T)):.3e}")
        print(f"  type: mixed {ty.mixed:.2e}  skew {ty.skew3:.2e}  pure {ty.pure:.2e}")
        print(f"  |D J| (hermitian)   {bm.hermitian_residual(mfd, x):.3e}")
        print(f"  |R|                 {np.max(np.abs(R)):.3e}")
        for kind in ("J+", "J-"):
            print(f"  d omega_{kind:<3}         {tb.d_two_form(kind, mfd, p).max_abs():.3e}")
            print(f"  N({kind})              {tb.nijenhuis(kind, mfd, p):.3e}")


if __name__ == "__main__":
    main()
