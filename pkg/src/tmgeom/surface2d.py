"""TM over a surface: the frame (xi, eta, xi_h, eta_h) and its connection table.

With ``c = |v|``, ``u = v / c`` and ``eta`` the unit vector making ``(u, eta)``
a direct orthonormal basis, the four frame fields on TM are

    xi = (0, v),  eta = (0, eta),  xi_h = lift(v),  eta_h = lift(eta)

in the induced chart, where ``lift(a) = (a, -Gamma(a, v))``.  The functions

    k  = <R(u, eta) u, eta>,      T(v, eta) = f1 v + f2 eta

enter the table of covariant derivatives.  With the curvature sign used in
this package, ``k`` is minus the Gauss curvature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dual as du
from .base_manifold import ChartManifold, ManifoldError
from .dual import Dual
from .tangent_bundle import TMGeometry, TMPoint

FRAME_NAMES = ("xi", "eta", "xi_h", "eta_h")
_ROT = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class SurfaceFrame:
    c: float
    u: np.ndarray  # v / c on the base
    eta_base: np.ndarray
    fields: dict[str, np.ndarray]  # chart vectors of xi, eta, xi_h, eta_h
    k: float
    f1: float
    f2: float


def _sqrt(a: Dual) -> Dual:
    return du.apply(a, np.sqrt, lambda t: 0.5 / np.sqrt(t))


def _recip(a: Dual) -> Dual:
    return du.apply(a, lambda t: 1.0 / t, lambda t: -1.0 / t**2)


def _scal(a: Dual, b: Dual) -> Dual:
    return du.einsum(",->", a, b)


class SurfaceGeometry:
    """Frame fields with exact first derivatives at one point of TM."""

    def __init__(self, mfd: ChartManifold, p: TMPoint, zero_tol: float = 1e-12):
        if mfd.m != 2:
            raise ValueError("surface computations need a 2-dimensional base")
        self.geo = TMGeometry(mfd, p)
        self.mfd = mfd
        geo = self.geo
        g = geo._lift(geo._base[0])
        gam = geo._lift(geo._base[1])
        v = geo._v
        c2 = du.einsum("i,ij,j->", v, g, v)
        if c2.val <= zero_tol:
            raise ManifoldError("surface frame is undefined on the zero section", p.x)
        c = _sqrt(c2)
        u = du.einsum("i,->i", v, _recip(c))
        det = du.einsum(",->", g[0, 0], g[1, 1]) - du.einsum(",->", g[0, 1], g[1, 0])
        eta = du.einsum("ab,bc,c,->a", du.inv(g), _ROT, u, _sqrt(det))
        lift = lambda a: du.concat([a, -du.einsum("kij,i,j->k", gam, a, v)])  # noqa: E731
        self.c = c
        self.u = u
        self.eta_base = eta
        self.fields: dict[str, Dual] = {
            "xi": du.concat([np.zeros(2), v]),
            "eta": du.concat([np.zeros(2), eta]),
            "xi_h": lift(v),
            "eta_h": lift(eta),
        }
        # torsion functions as fields on TM
        if mfd.torsion is not None and mfd.connection != "lc":
            T = geo._lift(mfd.torsion.dual(p.x)[0])
        else:
            T = du.const(np.zeros((2, 2, 2)), geo.n)
        Tve = du.einsum("kij,i,j->k", T, v, eta)
        self.f1 = du.einsum("k,kl,l,->", Tve, g, v, _recip(c2))
        self.f2 = du.einsum("k,kl,l->", Tve, g, eta)

    @property
    def k(self) -> float:
        R = self.geo.curvature
        u, e = self.u.val, self.eta_base.val
        return float(np.einsum("lkij,i,j,k,lm,m->", R, u, e, u, self.geo.g, e))

    def frame(self) -> SurfaceFrame:
        return SurfaceFrame(
            float(self.c.val),
            self.u.val,
            self.eta_base.val,
            {k: f.val for k, f in self.fields.items()},
            self.k,
            float(self.f1.val),
            float(self.f2.val),
        )

    def nabla(self, X: str, Y: str) -> np.ndarray:
        """``nabla_X Y`` for two frame fields, as a chart vector."""
        gam = self.geo.gamma_formula
        x, y = self.fields[X], self.fields[Y]
        return y.der @ x.val + np.einsum("cab,a,b->c", gam, x.val, y.val)

    def bracket(self, X: str, Y: str) -> np.ndarray:
        x, y = self.fields[X], self.fields[Y]
        return y.der @ x.val - x.der @ y.val

    def table_rhs(self) -> dict[tuple[str, str], np.ndarray]:
        F = {k: f.val for k, f in self.fields.items()}
        c2 = float(self.c.val) ** 2
        k, f1, f2 = self.k, float(self.f1.val), float(self.f2.val)
        z = np.zeros(4)
        xi, eta, xh, eh = F["xi"], F["eta"], F["xi_h"], F["eta_h"]
        return {
            ("xi", "xi"): xi,
            ("xi", "eta"): z,
            ("xi", "xi_h"): xh,
            ("xi", "eta_h"): z,
            ("eta", "xi"): eta,
            ("eta", "eta"): -xi / c2,
            ("eta", "xi_h"): (1 + 0.5 * k * c2) * eh,
            ("eta", "eta_h"): -(1 / c2 + 0.5 * k) * xh,
            ("eta_h", "xi"): z,
            ("eta_h", "eta"): -0.5 * k * xh,
            ("eta_h", "xi_h"): 0.5 * k * c2 * eta + f2 * eh,
            ("eta_h", "eta_h"): -f2 * xh / c2,
            ("xi_h", "xi"): z,
            ("xi_h", "eta"): 0.5 * k * c2 * eh,
            ("xi_h", "xi_h"): f1 * c2 * eh,
            ("xi_h", "eta_h"): -0.5 * k * c2 * eta - f1 * xh,
        }

    def table_residuals(self) -> dict[tuple[str, str], float]:
        return {
            key: float(np.max(np.abs(self.nabla(*key) - rhs)))
            for key, rhs in self.table_rhs().items()
        }

    def bracket_residual(self) -> float:
        F = {k: f.val for k, f in self.fields.items()}
        c2 = float(self.c.val) ** 2
        rhs = -c2 * self.k * F["eta"] - float(self.f1.val) * F["xi_h"] - float(self.f2.val) * F["eta_h"]
        return float(np.max(np.abs(self.bracket("xi_h", "eta_h") - rhs)))

    def scalar_eq_residual(self) -> float:
        """``c^2 eta_h(f1) - xi_h(f2) - c^2 f1^2 - f2^2``."""
        c2 = float(self.c.val) ** 2
        f1, f2 = self.f1, self.f2
        d_f1 = float(f1.der @ self.fields["eta_h"].val)
        d_f2 = float(f2.der @ self.fields["xi_h"].val)
        return c2 * d_f1 - d_f2 - c2 * float(f1.val) ** 2 - float(f2.val) ** 2


def surface_frame(mfd: ChartManifold, p: TMPoint) -> SurfaceFrame:
    return SurfaceGeometry(mfd, p).frame()


def table_check(mfd: ChartManifold, p: TMPoint) -> dict[tuple[str, str], float]:
    return SurfaceGeometry(mfd, p).table_residuals()


def bracket_check(mfd: ChartManifold, p: TMPoint) -> float:
    return SurfaceGeometry(mfd, p).bracket_residual()


# --------------------------------------------------------------- Ricci


def _gamma_at(mfd: ChartManifold, z: np.ndarray) -> np.ndarray:
    m = mfd.m
    return TMGeometry(mfd, TMPoint(z[:m], z[m:])).gamma_formula


def gamma_derivative(mfd: ChartManifold, p: TMPoint, h: float = 1e-4) -> np.ndarray:
    """``d_l Gamma~`` of the TM connection, ``[C, A, B, l]``.

    Central differences at steps ``h`` and ``h/2`` combined by Richardson
    extrapolation (error O(h^4) plus rounding ~ eps / h).
    """
    z0 = p.z
    n = z0.size
    out = np.zeros((n, n, n, n))
    for l in range(n):
        e = np.zeros(n)
        e[l] = 1.0

        def central(step):
            return (_gamma_at(mfd, z0 + step * e) - _gamma_at(mfd, z0 - step * e)) / (2 * step)

        out[..., l] = (4 * central(h / 2) - central(h)) / 3
    return out


def tm_ricci(mfd: ChartManifold, p: TMPoint, h: float = 1e-4) -> np.ndarray:
    """Ricci tensor of TM in the induced chart, ``Ric(Y, Z) = tr(X -> R(X, Y) Z)``."""
    from .base_manifold import curvature_of

    geo = TMGeometry(mfd, p)
    R = curvature_of(geo.gamma_formula, gamma_derivative(mfd, p, h))
    return np.einsum("adab->bd", R)


@dataclass(frozen=True)
class EinsteinDefect:
    ricci: np.ndarray
    defect: float  # G-norm of the trace-free part of Ric
    scalar_eq_residual: float
    k: float
    f1: float
    f2: float


def einstein_defect(mfd: ChartManifold, p: TMPoint, h: float = 1e-4) -> EinsteinDefect:
    sg = SurfaceGeometry(mfd, p)
    ric = tm_ricci(mfd, p, h)
    G = sg.geo.G.val
    Gi = np.linalg.inv(G)
    tf = ric - np.einsum("ab,ab->", Gi, ric) / 4.0 * G
    defect = float(np.sqrt(abs(np.einsum("ab,cd,ac,bd->", tf, tf, Gi, Gi))))
    fr = sg.frame()
    return EinsteinDefect(ric, defect, sg.scalar_eq_residual(), fr.k, fr.f1, fr.f2)
