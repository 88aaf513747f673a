"""Registry of pointwise checks run by the scenario runner.

Every check maps one sample point of a scenario to a single non-negative
number.  A check expected to be ``zero`` passes when the largest value over
the sample is at most its threshold; a check expected to be ``nonzero``
passes when the smallest value is above its nonzero threshold.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from . import base_manifold as bm
from . import obata, surface2d
from . import tangent_bundle as tb
from .base_manifold import ChartManifold


class CheckNotApplicable(Exception):
    """The scenario lacks the data a check needs."""


@dataclass
class PointContext:
    mfd: ChartManifold
    p: tb.TMPoint
    rng: np.random.Generator

    @cached_property
    def geo(self) -> tb.TMGeometry:
        return tb.TMGeometry(self.mfd, self.p)

    @cached_property
    def surface(self) -> surface2d.SurfaceGeometry:
        return surface2d.SurfaceGeometry(self.mfd, self.p)

    def kinds(self) -> list[str]:
        return ["I"] + (["J+", "J-", "K"] if self.mfd.acs is not None else [])


@dataclass(frozen=True)
class Check:
    name: str
    anchor: str
    fn: Callable[[PointContext], float]
    zero_tol: float = 1e-8
    nonzero_tol: float = 1e-3
    needs: tuple[str, ...] = ()  # "acs", "triple", "surface", "torsion"

    def applicable(self, mfd: ChartManifold) -> bool:
        for need in self.needs:
            if need == "acs" and mfd.acs is None:
                return False
            if need == "triple" and mfd.triple is None:
                return False
            if need == "surface" and mfd.m != 2:
                return False
            if need == "torsion" and (mfd.torsion is None or mfd.connection == "lc"):
                return False
        return True


REGISTRY: dict[str, Check] = {}


def register(name, anchor, zero_tol=1e-8, nonzero_tol=1e-3, needs=()):
    def deco(fn):
        REGISTRY[name] = Check(name, anchor, fn, zero_tol, nonzero_tol, tuple(needs))
        return fn

    return deco


def _max(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


# ---------------------------------------------------------------- TM core


@register("oracle", "Levi-Civita connection of TM: formula vs Christoffel symbols of G", 1e-6)
def _oracle(c):
    return _max(c.geo.gamma_formula - c.geo.gamma_oracle)


@register("tm_metric", "Levi-Civita connection of TM is metric for G")
def _tm_metric(c):
    return c.geo.metric_residual()


@register("tm_torsion_free", "Levi-Civita connection of TM is torsion free")
def _tm_torsion(c):
    return c.geo.torsion_residual()


@register("horizontal_bracket", "vertical part of [X^h, Y^h] equals -R(X, Y) v")
def _hbracket(c):
    return tb.horizontal_bracket_defect(c.mfd, c.geo)


@register("splitting", "theta^t theta = 1_H + 0, theta theta^t = 0 + 1_V; xi vertical", 1e-10)
def _splitting(c):
    s = c.geo.splitting
    xi = tb.canonical_xi(c.p).chart
    return max(
        _max(s.theta_t @ s.theta - s.proj_h),
        _max(s.theta @ s.theta_t - s.proj_v),
        _max(s.proj_h @ xi),
    )


@register("xi_parallel", "X horizontal iff (pi*D)_X xi = 0", 1e-10)
def _xi_parallel(c):
    geo = c.geo
    m = geo.m
    hl = geo.splitting.horizontal_lift
    # D*_X xi for the section xi = v of pi*TM: X(v) + Gamma(dpi X, v)
    vals = [hl[m:, i] + geo.gamma_base[:, i, :] @ c.p.v for i in range(m)]
    return _max(vals)


@register("tau", "tau = 0 if and only if T = 0", 1e-10, 1e-6)
def _tau(c):
    return _max(c.geo.frame_terms["tau"])


@register("tensor_types", "R*xi and tau vanish on vertical slots; A vanishes on hh and vv", 1e-12)
def _tensor_types(c):
    m = c.geo.m
    t = c.geo.frame_terms
    h, v = slice(0, m), slice(m, 2 * m)
    return max(
        _max(t["A"][:, h, h]),
        _max(t["A"][:, v, v]),
        _max(t["tau"][:, v, :]),
        _max(t["tau"][:, :, v]),
        _max(t["curv"][:, v, :]),
        _max(t["curv"][:, :, v]),
    )


@register("structure_algebra", "S^2 = -1, G-orthogonal; K = IJ = -JI", 1e-10)
def _structure_algebra(c):
    geo = c.geo
    G = geo.G.val
    n = geo.n
    worst = 0.0
    mats = {k: geo.structure(k).val for k in c.kinds()}
    for S in mats.values():
        worst = max(worst, _max(S @ S + np.eye(n)), _max(S.T @ G @ S - G))
    if "K" in mats:
        I, J, K = mats["I"], mats["J-"], mats["K"]
        worst = max(worst, _max(I @ J - K), _max(J @ I + K))
    return worst


@register("dstar_parallel", "I, J+, J-, K are parallel for the pull-back connection D*", 1e-10)
def _dstar(c):
    # the J-type structures are D*-parallel only when D J = 0
    kinds = ["I"]
    if c.mfd.acs is not None and bm.hermitian_residual(c.mfd, c.p.x) <= 1e-9:
        kinds = c.kinds()
    return max(tb.parallelism_residual(k, c.mfd, c.geo, "pullback") for k in kinds)


def _nij(kind):
    def fn(c):
        return _max(c.geo.nijenhuis(c.geo.structure(kind)))

    return fn


def _domega(kind):
    def fn(c):
        return _max(c.geo.d_two_form(c.geo.structure(kind)))

    return fn


for _kind, _anchor in (
    ("I", "I integrable iff D torsion free and flat"),
    ("J+", "J+ integrable iff structure integrable and R(u,v)wbar = 0"),
    ("J-", "J- integrable iff structure integrable and R(u,v)w = 0"),
    ("K", "K integrable iff D flat and torsion free"),
):
    register(
        f"nijenhuis_{_kind}",
        _anchor,
        1e-8,
        1e-3 if _kind == "I" else 1e-4,
        needs=() if _kind == "I" else ("acs",),
    )(_nij(_kind))

for _kind, _anchor in (
    ("I", "omega_I closed iff D torsion free"),
    ("J+", "omega_J+ closed iff D flat with torsion in [[A]] + [[X]]"),
    ("J-", "omega_J- closed iff D flat with torsion in [[A]] + [[X]]"),
    ("K", "omega_K closed iff D torsion free"),
):
    register(f"domega_{_kind}", _anchor, 1e-8, 1e-4, needs=() if _kind == "I" else ("acs",))(_domega(_kind))


@register("nabla_I", "TM Kahler flat: nabla I = 0 when D is flat and torsion free", 1e-8, 1e-3)
def _nabla_I(c):
    return _max(c.geo.covariant_endo(c.geo.structure("I")))


@register("dkraines", "(TM, I, J, K) quaternionic Kahler iff D flat and torsion free", 1e-7, 1e-4, needs=("acs",))
def _dkraines(c):
    return _max(c.geo.d_kraines())


@register("qk_L", "quaternionic Kahler condition L = 0 in nabla q = q alpha + L", 1e-7, 1e-4, needs=("acs",))
def _qk_L(c):
    return tb.qk_defect(c.mfd, c.geo).L_norm


@register("qk_alpha_skew", "alpha is a skew-symmetric matrix of 1-forms", 1e-10, needs=("acs",))
def _qk_alpha(c):
    return tb.qk_defect(c.mfd, c.geo).alpha_skew_defect


def random_stiefel_pair(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal pair in R^4 by Gram-Schmidt on two Gaussian vectors."""
    a = rng.normal(size=4)
    a /= np.linalg.norm(a)
    b = rng.normal(size=4)
    b -= (b @ a) * a
    b /= np.linalg.norm(b)
    return a, b


@register("family_anticommute", "I_a I_b = -I_b I_a for (a, b) in the Stiefel manifold", 1e-10, needs=("triple",))
def _family_anti(c):
    a, b = random_stiefel_pair(c.rng)
    Ia, Ib, Iab = (S.val for S in c.geo.family(a, b))
    n = c.geo.n
    return max(_max(Ia @ Ib + Ib @ Ia), _max(Ia @ Ia + np.eye(n)), _max(Iab @ Iab + np.eye(n)))


@register("family_dkraines", "d Omega_{a,b} = 0 for flat torsion-free D, sampled (a, b)", 1e-6, 1e-4, needs=("triple",))
def _family_dk(c):
    a, b = random_stiefel_pair(c.rng)
    return _max(c.geo.d_kraines((a, b)))


# -------------------------------------------------------------- base M


@register("base_metric", "D is a metric connection", 1e-9)
def _base_metric(c):
    x = c.p.x
    D = bm.metric_connection(c.mfd, x)
    g, dg = c.mfd.metric.dual(x)
    return bm.metric_residual(D.gamma, g.val, dg.val)


@register("base_torsion", "torsion of D equals the prescribed T", 1e-10, needs=("torsion",))
def _base_torsion(c):
    return _max(c.geo.torsion - c.mfd.torsion.value(c.p.x))


@register("bianchi", "first Bianchi identity for torsion-free D", 1e-9)
def _bianchi(c):
    return bm.bianchi_residual(c.geo.curvature)


@register("torsion_norm", "realised torsion of D", 1e-10, 1e-3)
def _torsion_norm(c):
    return _max(c.geo.torsion)


@register("curvature_norm", "curvature of D", 1e-9, 1e-3)
def _curv_norm(c):
    return _max(c.geo.curvature)


@register("hermitian", "D J = 0 (Hermitian connection)", 1e-9, 1e-3, needs=("acs",))
def _hermitian(c):
    return bm.hermitian_residual(c.mfd, c.p.x)


@register("torsion_type", "T has no skew part and is (3,0)+(0,3)", 1e-9, 1e-4, needs=("acs",))
def _torsion_type(c):
    J = c.mfd.acs.value(c.p.x)
    t = bm.torsion_J_type(c.geo.torsion, J, c.geo.g)
    return max(t.mixed, t.skew3)


@register("holo_J+", "R(u, v) wbar = 0 block (J+ condition)", 1e-9, 1e-3, needs=("acs",))
def _holo_plus(c):
    J = c.mfd.acs.value(c.p.x)
    h = bm.curvature_holo_components(c.geo.curvature, J)
    return h["R(u,v)wbar"]


@register("holo_J-", "R(u, v) w = 0 block (J- condition)", 1e-9, 1e-3, needs=("acs",))
def _holo_minus(c):
    J = c.mfd.acs.value(c.p.x)
    h = bm.curvature_holo_components(c.geo.curvature, J)
    return h["R(u,v)w"]


# ----------------------------------------------------------------- Obata


@register("obata_parallel", "D = nabla + 1/4 (A_I + A_J + A_K) gives DI = DJ = DK = 0", 1e-8, needs=("triple",))
def _ob_par(c):
    return max(obata.obata_connection(c.mfd, c.p.x).parallel_residuals)


@register("obata_input", "input connection does not parallelise the triple", 1e-8, 1e-3, needs=("triple",))
def _ob_in(c):
    return obata.obata_connection(c.mfd, c.p.x).input_residuals[0]


@register("obata_metric", "Obata connection is metric", 1e-8, needs=("triple",))
def _ob_met(c):
    return obata.obata_connection(c.mfd, c.p.x).metric_residual


@register("obata_skew", "D - nabla is g-skew", 1e-9, needs=("triple",))
def _ob_skew(c):
    return obata.obata_connection(c.mfd, c.p.x).skew_residual


@register("obata_identity", "[A_J, I] = [K, nabla J]", 1e-9, needs=("triple",))
def _ob_id(c):
    return obata.commutator_identity(c.mfd, c.p.x)


# --------------------------------------------------------------- surface


@register("surface_table", "16-entry table of the Levi-Civita connection of TM over a surface", 1e-7, needs=("surface",))
def _s_table(c):
    return max(c.surface.table_residuals().values())


@register("surface_bracket", "[xi_h, eta_h] = -c^2 k eta - f1 xi_h - f2 eta_h", 1e-7, needs=("surface",))
def _s_bracket(c):
    return c.surface.bracket_residual()


@register("surface_k_scale", "k depends only on x: k(x, v) = k(x, 2v)", 1e-10, needs=("surface",))
def _s_k(c):
    other = surface2d.SurfaceGeometry(c.mfd, tb.TMPoint(c.p.x, 2 * c.p.v))
    return abs(c.surface.k - other.k)


@register("ricci", "Ricci tensor of TM (Ricci flat when M is flat)", 1e-5, 1e-3, needs=("surface",))
def _ricci(c):
    return _max(surface2d.tm_ricci(c.mfd, c.p))


@register("einstein_defect", "TM Einstein iff k = 0 and the scalar equation holds", 1e-5, 1e-3, needs=("surface",))
def _einstein(c):
    return surface2d.einstein_defect(c.mfd, c.p).defect


@register(
    "scalar_eq",
    "c^2 eta_h(f1) - xi_h(f2) - c^2 f1^2 - f2^2 = 0",
    1e-8,
    1e-4,
    needs=("surface",),
)
def _scalar_eq(c):
    return abs(c.surface.scalar_eq_residual())


SURFACE_CHECKS = {n for n, ch in REGISTRY.items() if "surface" in ch.needs}
