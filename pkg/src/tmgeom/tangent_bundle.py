"""Geometry of TM in the induced chart ``(x1..xm, v1..vm)``.

Two bases of ``T_(x,v) TM`` are used:

* the *chart* basis ``(d/dx_i, d/dv_i)``;
* the *frame* basis ``(e_i^h, e_i^v)`` of horizontal lifts and vertical
  vectors for the splitting ``TTM = H + V`` induced by ``D``.

A chart vector ``(a, b)`` has frame components ``(a, b + Gamma(a, v))`` where
``Gamma(a, v)^k = Gamma^k_{ij} a^i v^j``; the matrix of this change is
``P = [[1, 0], [N, 1]]`` with ``N^k_i = Gamma^k_{ij} v^j``.  In the frame the
metric is ``diag(g, g)``, ``theta(h, w) = (0, h)`` and ``I = theta^t - theta``
acts as ``(h, w) -> (w, -h)``.

Connection coefficients on TM follow the base convention:
``gamma[C, A, B]`` with ``nabla_{d_A} d_B = gamma[C, A, B] d_C``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import dual as du
from .base_manifold import ChartManifold, ManifoldError, connection_dual, curvature_of, torsion_of
from .dual import Dual
from .forms import AltForm, exterior_derivative, wedge, wedge22_dual

STRUCTURE_KINDS = ("I", "J+", "J-", "K")


@dataclass(frozen=True)
class TMPoint:
    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).reshape(-1))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).reshape(-1))
        if self.x.shape != self.v.shape:
            raise ValueError("x and v must have the same dimension")

    @property
    def z(self) -> np.ndarray:
        return np.concatenate([self.x, self.v])


@dataclass(frozen=True)
class TMVector:
    a: np.ndarray  # d/dx coefficients
    b: np.ndarray  # d/dv coefficients

    @property
    def chart(self) -> np.ndarray:
        return np.concatenate([self.a, self.b])


@dataclass(frozen=True)
class Splitting:
    """Chart matrices of the splitting at a point (all ``2m x 2m`` unless noted)."""

    horizontal_lift: np.ndarray  # 2m x m, u -> (u, -Gamma(u, v))
    vertical_injection: np.ndarray  # 2m x m, w -> (0, w)
    proj_h: np.ndarray
    proj_v: np.ndarray
    theta: np.ndarray
    theta_t: np.ndarray


def canonical_xi(p: TMPoint) -> TMVector:
    return TMVector(np.zeros_like(p.v), p.v.copy())


def _covariant_endo_np(gamma: np.ndarray, S: np.ndarray, dS: np.ndarray) -> np.ndarray:
    """``(nabla_A S)[C, B]`` stacked as ``[A, C, B]``; ``dS[C, B, A] = d_A S_CB``."""
    return (
        np.einsum("cba->acb", dS)
        + np.einsum("cad,db->acb", gamma, S)
        - np.einsum("cd,dab->acb", S, gamma)
    )


def _christoffel(G: np.ndarray, dG: np.ndarray) -> np.ndarray:
    """Classical formula; ``dG[A, B, C] = d_C G_AB``."""
    low = 0.5 * (np.einsum("lji->lij", dG) + dG - np.einsum("ijl->lij", dG))
    return np.einsum("kl,lij->kij", np.linalg.inv(G), low)


class TMGeometry:
    """All TM quantities at one point ``(x, v)``, computed lazily."""

    def __init__(self, mfd: ChartManifold, p: TMPoint):
        if p.x.size != mfd.m:
            raise ValueError("point dimension does not match the manifold")
        self.mfd = mfd
        self.p = p
        self.m = mfd.m
        self.n = 2 * mfd.m

    # ------------------------------------------------------------ base data

    @cached_property
    def _base(self):
        m = self.m
        x = self.p.x
        g, _ = self.mfd.metric.dual(x)
        gamma = connection_dual(self.mfd, x)
        return g, gamma

    @property
    def g(self) -> np.ndarray:
        return self._base[0].val

    @property
    def gamma_base(self) -> np.ndarray:
        return self._base[1].val

    @cached_property
    def curvature(self) -> np.ndarray:
        gam = self._base[1]
        return curvature_of(gam.val, gam.der)

    @cached_property
    def torsion(self) -> np.ndarray:
        return torsion_of(self.gamma_base)

    @cached_property
    def torsion_lowered(self) -> np.ndarray:
        return np.einsum("kl,lij->ijk", self.g, self.torsion)

    def _lift(self, d: Dual) -> Dual:
        # base quantities depend on x only
        return d.pad(0, self.m)

    @cached_property
    def _v(self) -> Dual:
        m = self.m
        der = np.zeros((m, 2 * m))
        der[:, m:] = np.eye(m)
        return Dual(self.p.v.copy(), der)

    # ---------------------------------------------------------- frame change

    @cached_property
    def N(self) -> Dual:
        gamma = self._lift(self._base[1])
        return du.einsum("kij,j->ki", gamma, self._v)

    @cached_property
    def P(self) -> Dual:
        """Chart -> frame components."""
        m, n = self.m, self.n
        val = np.eye(n)
        der = np.zeros((n, n, n))
        val[m:, :m] = self.N.val
        der[m:, :m] = self.N.der
        return Dual(val, der)

    @cached_property
    def Pinv(self) -> Dual:
        m, n = self.m, self.n
        val = np.eye(n)
        der = np.zeros((n, n, n))
        val[m:, :m] = -self.N.val
        der[m:, :m] = -self.N.der
        return Dual(val, der)

    def to_chart(self, S_frame: Dual) -> Dual:
        """Endomorphism frame matrix -> chart matrix ``P^-1 S P``."""
        return du.einsum("ab,bc,cd->ad", self.Pinv, S_frame, self.P)

    @cached_property
    def G(self) -> Dual:
        """Induced metric in the chart, with exact first derivatives."""
        g = self._lift(self._base[0])
        m, n = self.m, self.n
        blk = Dual(np.zeros((n, n)), np.zeros((n, n, n)))
        val = blk.val.copy()
        der = blk.der.copy()
        val[:m, :m] = g.val
        val[m:, m:] = g.val
        der[:m, :m] = g.der
        der[m:, m:] = g.der
        return du.einsum("ba,bc,cd->ad", self.P, Dual(val, der), self.P)

    @cached_property
    def splitting(self) -> Splitting:
        m = self.m
        P, Pi = self.P.val, self.Pinv.val
        hl = np.vstack([np.eye(m), -self.N.val])
        vi = np.vstack([np.zeros((m, m)), np.eye(m)])
        z = np.zeros((m, m))
        e = np.eye(m)
        frame = lambda M: Pi @ M @ P  # noqa: E731
        return Splitting(
            hl,
            vi,
            frame(np.block([[e, z], [z, z]])),
            frame(np.block([[z, z], [z, e]])),
            frame(np.block([[z, z], [e, z]])),
            frame(np.block([[z, e], [z, z]])),
        )

    # ----------------------------------------------------------- structures

    def _acs(self, which=None) -> Dual:
        if which is None:
            if self.mfd.acs is None:
                raise ManifoldError("structure needs an almost complex structure on the base")
            f = self.mfd.acs
        else:
            if self.mfd.triple is None:
                raise ManifoldError("FAMILY needs a quaternionic triple on the base")
            f = self.mfd.triple[which]
        J, _ = f.dual(self.p.x)
        return self._lift(J)

    def _block(self, tl, tr, bl, br) -> Dual:
        m, n = self.m, self.n
        val = np.zeros((n, n))
        der = np.zeros((n, n, n))
        for blk, (r, c) in ((tl, (0, 0)), (tr, (0, m)), (bl, (m, 0)), (br, (m, m))):
            if blk is None:
                continue
            if isinstance(blk, Dual):
                val[r : r + m, c : c + m] = blk.val
                der[r : r + m, c : c + m] = blk.der
            else:
                val[r : r + m, c : c + m] = blk
        return Dual(val, der)

    def frame_structure(self, kind: str, which=None) -> Dual:
        e = np.eye(self.m)
        if kind == "I":
            return self._block(None, e, -e, None)
        J = self._acs(which)
        if kind == "J+":
            return self._block(J, None, None, J)
        if kind == "J-":
            return self._block(J, None, None, -J)
        if kind == "K":
            return self._block(None, -J, -J, None)
        raise ValueError(f"unknown structure kind {kind!r}")

    def structure(self, kind: str) -> Dual:
        """Chart matrix of ``I``, ``J+``, ``J-`` or ``K`` with its derivatives."""
        return self.to_chart(self.frame_structure(kind))

    def family_frame(self, x4) -> Dual:
        """``x0 I + x1 I_1 + x2 I_2 + x3 I_3`` with ``I_i = J_i + (-J_i)``."""
        x4 = np.asarray(x4, dtype=float)
        out = self.frame_structure("I") * x4[0]
        for k in range(3):
            out = out + self.frame_structure("J-", which=k) * x4[k + 1]
        return out

    def family(self, a, b, tol: float = 1e-10) -> tuple[Dual, Dual, Dual]:
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if abs(a @ a - 1) > tol or abs(b @ b - 1) > tol or abs(a @ b) > tol:
            raise ValueError("(a, b) must be an orthonormal pair in R^4")
        Ia = self.to_chart(self.family_frame(a))
        Ib = self.to_chart(self.family_frame(b))
        return Ia, Ib, du.einsum("ab,bc->ac", Ia, Ib)

    def triple(self, family=None) -> tuple[Dual, Dual, Dual]:
        if family is not None:
            return self.family(*family)
        I = self.structure("I")
        J = self.structure("J-")
        return I, J, self.structure("K")

    # --------------------------------------------------- Levi-Civita of TM

    def _terms(self, h: np.ndarray, w: np.ndarray):
        """Pointwise tensor terms of the Levi-Civita formula on vectors given
        by horizontal parts ``h`` (m x k) and vertical parts ``w`` (m x k).

        Returns (curv, A, tau) as frame-valued arrays ``[r, a, b]``: curv is
        vertical (``-1/2 R(h_a, h_b) v``), A and tau are horizontal.
        """
        g, R, v = self.g, self.curvature, self.p.v
        gi = np.linalg.inv(g)
        Rv = np.einsum("lkij,k->lij", R, v)  # R(d_i, d_j) v
        curv = -0.5 * np.einsum("lij,ia,jb->lab", Rv, h, h)
        Rv_low = np.einsum("ml,lij->mij", g, Rv)  # <R(d_i, d_j) v, d_m>
        # <A_X Y, Z> = 1/2 <R(X^h, Z) v, Y^v> + 1/2 <R(Y^h, Z) v, X^v>
        half = 0.5 * np.einsum("mij,ia,mb->abj", Rv_low, h, w)
        A_low = half + half.transpose(1, 0, 2)
        A = np.einsum("cj,abj->cab", gi, A_low)
        Tl = self.torsion_lowered
        # tau(X, Y, Z) = 1/2 (T(Y,X,Z) - T(Z,X,Y) + T(Y,Z,X))
        tau_low = 0.5 * (
            np.einsum("jic,jb,ia->abc", Tl, h, h)
            - np.einsum("cij,ia,jb->abc", Tl, h, h)
            + np.einsum("jci,jb,ia->abc", Tl, h, h)
        )
        tau = np.einsum("cj,abj->cab", gi, tau_low)
        return curv, A, tau

    @cached_property
    def _chart_hw(self):
        P = self.P.val
        return P[: self.m], P[self.m :]

    @cached_property
    def dstar_frame(self) -> np.ndarray:
        """``D*_{d_A} d_B`` in frame components, ``[r, A, B]``."""
        m = self.m
        gam = self.gamma_base
        P = self.P
        h, _ = self._chart_hw
        out = np.einsum("rba->rab", P.der).copy()
        out[:m] += np.einsum("kij,ia,jb->kab", gam, h, P.val[:m])
        out[m:] += np.einsum("kij,ia,jb->kab", gam, h, P.val[m:])
        return out

    @cached_property
    def connection_parts(self) -> dict[str, np.ndarray]:
        """Chart Christoffel arrays of the four terms of the formula."""
        m = self.m
        h, w = self._chart_hw
        curv, A, tau = self._terms(h, w)
        Pi = self.Pinv.val
        n = self.n

        def chart_of(top, bottom):
            f = np.zeros((n, n, n))
            if top is not None:
                f[:m] = top
            if bottom is not None:
                f[m:] = bottom
            return np.einsum("cr,rab->cab", Pi, f)

        return {
            "dstar": np.einsum("cr,rab->cab", Pi, self.dstar_frame),
            "curv": chart_of(None, curv),
            "A": chart_of(A, None),
            "tau": chart_of(tau, None),
        }

    @cached_property
    def gamma_formula(self) -> np.ndarray:
        parts = self.connection_parts
        return parts["dstar"] + parts["curv"] + parts["A"] + parts["tau"]

    @cached_property
    def gamma_oracle(self) -> np.ndarray:
        G = self.G
        return _christoffel(G.val, G.der)

    @cached_property
    def frame_terms(self) -> dict[str, np.ndarray]:
        """curv/A/tau evaluated on the frame basis ``(e_i^h, e_i^v)``."""
        m = self.m
        z = np.zeros((m, m))
        e = np.eye(m)
        h = np.hstack([e, z])
        w = np.hstack([z, e])
        curv, A, tau = self._terms(h, w)
        return {"curv": curv, "A": A, "tau": tau}

    # -------------------------------------------------------------- checks

    def torsion_residual(self, gamma=None) -> float:
        gamma = self.gamma_formula if gamma is None else gamma
        return float(np.max(np.abs(gamma - gamma.transpose(0, 2, 1))))

    def metric_residual(self, gamma=None) -> float:
        gamma = self.gamma_formula if gamma is None else gamma
        G = self.G
        r = (
            np.einsum("bca->abc", G.der)
            - np.einsum("dab,dc->abc", gamma, G.val)
            - np.einsum("dac,bd->abc", gamma, G.val)
        )
        return float(np.max(np.abs(r)))

    def covariant_endo(self, S: Dual, gamma=None) -> np.ndarray:
        gamma = self.gamma_formula if gamma is None else gamma
        return _covariant_endo_np(gamma, S.val, S.der)

    def nijenhuis(self, S: Dual) -> np.ndarray:
        """``N^C_{AB}`` on coordinate fields, ``[C, A, B]``."""
        s, d = S.val, S.der  # d[C, B, D] = d_D S^C_B
        t1 = np.einsum("da,cbd->cab", s, d)
        t2 = np.einsum("db,cad->cab", s, d)
        t3 = np.einsum("cd,dba->cab", s, d) - np.einsum("cd,dab->cab", s, d)
        return t1 - t2 - t3

    def two_form(self, S: Dual) -> Dual:
        """``w(X, Y) = G(SX, Y)`` as a chart matrix with derivatives."""
        w = du.einsum("ca,cb->ab", S, self.G)
        return (w - w.T) * 0.5

    def d_two_form(self, S: Dual) -> np.ndarray:
        return exterior_derivative(self.two_form(S))

    def kraines(self, family=None) -> Dual:
        ws = [self.two_form(S) for S in self.triple(family)]
        out = wedge22_dual(ws[0])
        for w in ws[1:]:
            out = out + wedge22_dual(w)
        return out

    def d_kraines(self, family=None) -> np.ndarray:
        return exterior_derivative(self.kraines(family))


# ------------------------------------------------------------- module API


def _geom(mfd, p) -> TMGeometry:
    if isinstance(p, TMGeometry):
        return p
    return TMGeometry(mfd, p)


def splitting(mfd, p) -> Splitting:
    return _geom(mfd, p).splitting


def tm_metric(mfd, p) -> np.ndarray:
    return _geom(mfd, p).G.val


def tm_levi_civita(mfd, p) -> np.ndarray:
    return _geom(mfd, p).gamma_formula


def tm_levi_civita_oracle(mfd, p) -> np.ndarray:
    return _geom(mfd, p).gamma_oracle


def _structure_dual(geo: TMGeometry, kind):
    if isinstance(kind, tuple):
        if kind[0] != "FAMILY":
            raise ValueError(f"unknown structure kind {kind!r}")
        return geo.family(kind[1], kind[2])
    return geo.structure(kind)


def structure(kind, mfd, p):
    """Chart matrix of a structure; ``("FAMILY", a, b)`` returns the triple."""
    s = _structure_dual(_geom(mfd, p), kind)
    if isinstance(s, tuple):
        return tuple(t.val for t in s)
    return s.val


def nijenhuis(S_kind, mfd, p) -> float:
    geo = _geom(mfd, p)
    return float(np.max(np.abs(geo.nijenhuis(geo.structure(S_kind)))))


def two_form(S_kind, mfd, p) -> AltForm:
    geo = _geom(mfd, p)
    return AltForm(geo.two_form(geo.structure(S_kind)).val)


def d_two_form(S_kind, mfd, p) -> AltForm:
    geo = _geom(mfd, p)
    return AltForm(geo.d_two_form(geo.structure(S_kind)))


def kraines_tm(mfd, p, family=None) -> AltForm:
    return AltForm(_geom(mfd, p).kraines(family).val)


def d_kraines(mfd, p, family=None) -> float:
    return float(np.max(np.abs(_geom(mfd, p).d_kraines(family))))


def parallelism_residual(S_kind, mfd, p, connection: str = "levi-civita") -> float:
    """``max |nabla S|`` (or under the pull-back connection ``D*``)."""
    geo = _geom(mfd, p)
    S = geo.structure(S_kind)
    if connection == "levi-civita":
        gam = geo.gamma_formula
    elif connection == "pullback":
        gam = geo.connection_parts["dstar"]
    else:
        raise ValueError("connection must be 'levi-civita' or 'pullback'")
    return float(np.max(np.abs(geo.covariant_endo(S, gam))))


def horizontal_bracket_defect(mfd, p) -> float:
    """``max |[e_i^h, e_j^h]^v + R(e_i, e_j) v|`` over coordinate directions."""
    geo = _geom(mfd, p)
    m = geo.m
    gam = geo._lift(geo._base[1])
    F = []
    for i in range(m):
        # chart field of the horizontal lift of d_i: (e_i, -Gamma^k_{ij} v^j)
        col = du.einsum("kj,j->k", gam[:, i, :], geo._v) * -1.0
        val = np.concatenate([np.eye(m)[i], col.val])
        der = np.concatenate([np.zeros((m, geo.n)), col.der])
        F.append(Dual(val, der))
    Rv = np.einsum("lkij,k->lij", geo.curvature, geo.p.v)
    worst = 0.0
    for i in range(m):
        for j in range(m):
            br = F[j].der @ F[i].val - F[i].der @ F[j].val
            a, b = br[:m], br[m:]
            vert = b + np.einsum("kij,i,j->k", geo.gamma_base, a, geo.p.v)
            worst = max(worst, float(np.max(np.abs(vert + Rv[:, i, j]))))
    return worst


# ------------------------------------------------------------- QK defect


@dataclass(frozen=True)
class QKDefect:
    alpha: np.ndarray  # [A, i, j]: alpha_ij(d_A), with nabla S_j = sum_i S_i alpha_ij + L_j
    L: np.ndarray  # [j, A, C, B]
    lam: np.ndarray  # [j, A, B, C] three 3-forms
    alpha_skew_defect: float
    L_norm: float
    dOmega: np.ndarray
    wedge_sum: np.ndarray  # sum_j w_j ^ lambda_j
    best_constant: float
    discrepancy: float  # |dOmega - best_constant * wedge_sum|_max
    raw_discrepancy: float  # |dOmega - wedge_sum|_max


def endo_inner(A: np.ndarray, B: np.ndarray, G: np.ndarray) -> float:
    """Normalised trace form ``tr(A^* B) / dim`` with ``A^*`` the G-adjoint."""
    Ga = np.linalg.solve(G, A.T @ G)
    return float(np.trace(Ga @ B) / A.shape[0])


def qk_defect(mfd, p, family=None) -> QKDefect:
    geo = _geom(mfd, p)
    trip = geo.triple(family)
    G = geo.G.val
    gi = np.linalg.inv(G)
    n = geo.n
    nab = [geo.covariant_endo(S) for S in trip]  # each [A, C, B]
    Ss = [S.val for S in trip]
    for i, S in enumerate(Ss):
        if np.max(np.abs(S @ S + np.eye(n))) > 1e-8:
            raise ManifoldError(f"triple member {i} is not a complex structure")
    adj = [gi @ S.T @ G for S in Ss]
    alpha = np.zeros((n, 3, 3))
    for j in range(3):
        for i in range(3):
            alpha[:, i, j] = np.einsum("cd,adc->a", adj[i], nab[j]) / n
    L = np.stack(
        [nab[j] - np.einsum("ai,icb->acb", alpha[:, :, j], np.stack(Ss)) for j in range(3)]
    )
    ell = np.einsum("jadb,dc->jabc", L, G)  # <L_j(d_A) d_B, d_C>
    lam = ell + np.einsum("jbca->jabc", ell) + np.einsum("jcab->jabc", ell)
    ws = [geo.two_form(S).val for S in trip]
    W = sum(wedge(ws[j], lam[j]) for j in range(3))
    dOm = exterior_derivative(geo.kraines(family))
    ww = float(np.sum(W * W))
    c = float(np.sum(dOm * W) / ww) if ww > 1e-24 else float("nan")
    disc = float(np.max(np.abs(dOm - (0.0 if np.isnan(c) else c) * W)))
    skew = float(np.max(np.abs(alpha + alpha.transpose(0, 2, 1))))
    raw = float(np.max(np.abs(dOm - W)))
    return QKDefect(alpha, L, lam, skew, float(np.max(np.abs(L))), dOm, W, c, disc, raw)
