"""Chart-based tensor calculus on the base manifold.

Index conventions (pinned once, used everywhere):

* ``gamma[k, i, j] = Gamma^k_{ij}`` with ``D_{d_i} d_j = Gamma^k_{ij} d_k``;
  ``i`` is the differentiation direction.
* ``dgamma[k, i, j, l] = d_l Gamma^k_{ij}``.
* ``torsion[k, i, j] = T^k_{ij}``, ``T(d_i, d_j) = T^k_{ij} d_k``.
* ``curv[l, k, i, j] = R^l_{kij}``, ``R(d_i, d_j) d_k = R^l_{kij} d_l`` with
  ``R(X, Y) = D_X D_Y - D_Y D_X - D_[X,Y]``.
* An endomorphism field ``E`` is stored as ``E[a, b]`` (``E d_b = E[a, b] d_a``).

Connections are specified by their torsion: the metric connection with
torsion ``T`` is Levi-Civita plus the contorsion
``<C(X)Y, Z> = 1/2 (T(X,Y,Z) - T(Y,Z,X) + T(Z,X,Y))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import dual as du
from .dual import Dual
from .exprlang import Expr, Num, eval_jet2, parse, to_source

CONNECTION_MODES = ("lc", "torsioned", "hermitianized", "obata")


class ManifoldError(ValueError):
    """Structural invariant violated (optionally at a sample point)."""

    def __init__(self, message: str, point=None):
        self.point = None if point is None else np.asarray(point, dtype=float)
        where = "" if point is None else f" at x = {np.array2string(self.point, precision=6)}"
        super().__init__(message + where)


# ------------------------------------------------------------------ fields


class ExprField:
    """An array of expressions evaluated together as value/grad/hess arrays."""

    def __init__(self, exprs, shape: tuple[int, ...]):
        flat = list(np.asarray(exprs, dtype=object).reshape(-1))
        self.shape = tuple(shape)
        self.exprs = [e if not isinstance(e, str) else parse(e) for e in flat]
        if len(self.exprs) != int(np.prod(self.shape)):
            raise ValueError("expression count does not match shape")
        self._const = [e.value if isinstance(e, Num) else None for e in self.exprs]

    @classmethod
    def from_sources(cls, sources, shape, dim: int) -> "ExprField":
        flat = list(np.asarray(sources, dtype=object).reshape(-1))
        return cls([parse(str(s), dim) for s in flat], shape)

    def sources(self) -> np.ndarray:
        return np.array([to_source(e) for e in self.exprs], dtype=object).reshape(self.shape)

    def jets(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        m = x.size
        n = len(self.exprs)
        val = np.zeros(n)
        grad = np.zeros((n, m))
        hess = np.zeros((n, m, m))
        for idx, (e, c) in enumerate(zip(self.exprs, self._const)):
            if c is not None:
                val[idx] = c
                continue
            j = eval_jet2(e, x)
            val[idx], grad[idx], hess[idx] = j.value, j.grad, j.hess
        return (
            val.reshape(self.shape),
            grad.reshape(self.shape + (m,)),
            hess.reshape(self.shape + (m, m)),
        )

    def value(self, x) -> np.ndarray:
        return self.jets(x)[0]

    def dual(self, x) -> tuple[Dual, Dual]:
        """(field, first derivatives) each carrying one more derivative."""
        v, g, h = self.jets(x)
        return Dual(v, g), Dual(g, h)


# ---------------------------------------------------------------- manifold


@dataclass(frozen=True)
class ChartManifold:
    """A single-chart Riemannian manifold with optional torsion and complex data.

    ``torsion`` holds ``T^k_{ij}`` as ``[k][i][j]``; ``acs`` holds the almost
    complex structure ``J[a][b]``; ``triple`` holds three such structures.
    """

    name: str
    m: int
    box: np.ndarray
    metric: ExprField
    torsion: ExprField | None = None
    acs: ExprField | None = None
    triple: tuple[ExprField, ExprField, ExprField] | None = None
    connection: str = "lc"

    def __post_init__(self):
        if self.connection not in CONNECTION_MODES:
            raise ManifoldError(f"unknown connection mode {self.connection!r}")
        if self.connection == "torsioned" and self.torsion is None:
            raise ManifoldError("connection 'torsioned' needs torsion expressions")
        if self.connection == "hermitianized" and self.acs is None:
            raise ManifoldError("connection 'hermitianized' needs an almost complex structure")
        if self.connection == "obata" and self.triple is None:
            raise ManifoldError("connection 'obata' needs a triple of structures")
        box = np.asarray(self.box, dtype=float)
        if box.shape != (self.m, 2) or np.any(box[:, 0] >= box[:, 1]):
            raise ManifoldError("chart box must be m intervals (lo < hi)")
        object.__setattr__(self, "box", box)

    @classmethod
    def from_sources(
        cls,
        name: str,
        m: int,
        box,
        metric,
        torsion=None,
        acs=None,
        triple=None,
        connection: str | None = None,
    ) -> "ChartManifold":
        g = ExprField.from_sources(metric, (m, m), m)
        t = None if torsion is None else ExprField.from_sources(torsion, (m, m, m), m)
        a = None if acs is None else ExprField.from_sources(acs, (m, m), m)
        q = None
        if triple is not None:
            q = tuple(ExprField.from_sources(s, (m, m), m) for s in triple)
        if connection is None:
            connection = "torsioned" if t is not None else "lc"
        return cls(name, m, box, g, t, a, q, connection)

    def with_connection(self, connection: str) -> "ChartManifold":
        return ChartManifold(
            self.name, self.m, self.box, self.metric, self.torsion, self.acs, self.triple, connection
        )

    def with_acs(self, acs: ExprField) -> "ChartManifold":
        return ChartManifold(
            self.name, self.m, self.box, self.metric, self.torsion, acs, self.triple, self.connection
        )

    # -- sampling & validation

    def sample_points(self, rng: np.random.Generator, n: int, margin: float = 0.0) -> np.ndarray:
        lo, hi = self.box[:, 0], self.box[:, 1]
        pad = margin * (hi - lo)
        return rng.uniform(lo + pad, hi - pad, size=(n, self.m))

    def validate(self, points, tol_t: float = 1e-10, tol_j: float = 1e-8) -> None:
        for x in np.atleast_2d(points):
            g = self.metric.value(x)
            if np.max(np.abs(g - g.T)) > 1e-12:
                raise ManifoldError("metric is not symmetric", x)
            try:
                np.linalg.cholesky(g)
            except np.linalg.LinAlgError:
                raise ManifoldError("metric is not positive definite", x) from None
            if self.torsion is not None:
                T = self.torsion.value(x)
                if np.max(np.abs(T + T.transpose(0, 2, 1))) > tol_t:
                    raise ManifoldError("torsion is not antisymmetric in its lower indices", x)
            if self.acs is not None:
                J = self.acs.value(x)
                check_complex_structure(J, g, tol_j, x, "acs")
            if self.triple is not None:
                Js = [f.value(x) for f in self.triple]
                for k, J in enumerate(Js):
                    check_complex_structure(J, g, tol_j, x, f"triple[{k}]")
                if np.max(np.abs(Js[0] @ Js[1] - Js[2])) > tol_j:
                    raise ManifoldError("triple violates J1 J2 = J3", x)
                if np.max(np.abs(Js[1] @ Js[0] + Js[2])) > tol_j:
                    raise ManifoldError("triple violates J2 J1 = -J3", x)


def check_complex_structure(J, g, tol, x=None, label="J") -> None:
    m = J.shape[0]
    if np.max(np.abs(J @ J + np.eye(m))) > tol:
        raise ManifoldError(f"{label}^2 != -Id", x)
    if np.max(np.abs(J.T @ g @ J - g)) > tol:
        raise ManifoldError(f"{label} is not g-orthogonal", x)


# -------------------------------------------------------------- connections


@dataclass(frozen=True)
class ConnectionCoeffs:
    gamma: np.ndarray  # [k, i, j]
    dgamma: np.ndarray  # [k, i, j, l]
    is_metric: bool = True
    is_hermitian: bool = False

    @property
    def dual(self) -> Dual:
        return Dual(self.gamma, self.dgamma)


def _metric_duals(mfd: ChartManifold, x):
    g, dg = mfd.metric.dual(x)  # dg[a, b, c] = d_c g_ab
    return g, dg


def _levi_civita_dual(g: Dual, dg: Dual) -> Dual:
    gi = du.inv(g)
    # Gamma_{l i j} (lowered) = 1/2 (d_i g_lj + d_j g_li - d_l g_ij)
    low = (du.einsum("lji->lij", dg) + du.einsum("lij->lij", dg) - du.einsum("ijl->lij", dg)) * 0.5
    return du.einsum("kl,lij->kij", gi, low)


def contorsion_dual(g: Dual, T: Dual) -> Dual:
    """``C^k_{ij}`` with ``<C(d_i) d_j, d_k> = 1/2 (T_ijk - T_jki + T_kij)``."""
    Tl = du.einsum("kl,lij->ijk", g, T)  # T_{ijk} = <T(d_i, d_j), d_k>
    C_low = (du.einsum("ijk->ijk", Tl) - du.einsum("jki->ijk", Tl) + du.einsum("kij->ijk", Tl)) * 0.5
    gi = du.inv(g)
    return du.einsum("kl,ijl->kij", gi, C_low)


def covariant_endo(gamma: Dual, E: Dual, dE: Dual) -> Dual:
    """``(D_i E)[a, b] = d_i E_ab + Gamma^a_{ic} E_cb - E_ac Gamma^c_{ib}``, as ``[i, a, b]``."""
    return du.einsum("abi->iab", dE) + du.einsum("aic,cb->iab", gamma, E) - du.einsum("ac,cib->iab", E, gamma)


def _hermitianize(gamma: Dual, J: Dual, dJ: Dual) -> Dual:
    DJ = covariant_endo(gamma, J, dJ)
    return gamma + du.einsum("iac,cb->aib", DJ, J) * 0.5


def _obata(gamma: Dual, triple) -> Dual:
    out = gamma
    for E, dE in triple:
        DE = covariant_endo(gamma, E, dE)
        out = out + du.einsum("iac,cb->aib", DE, E) * 0.25
    return out


def _base_gamma(mfd: ChartManifold, x, g: Dual, dg: Dual) -> Dual:
    gamma = _levi_civita_dual(g, dg)
    if mfd.torsion is not None and mfd.connection != "lc":
        T, _ = mfd.torsion.dual(x)
        gamma = gamma + contorsion_dual(g, T)
    return gamma


def connection_dual(mfd: ChartManifold, x) -> Dual:
    """Coefficients of the scenario's connection with exact first derivatives."""
    x = np.asarray(x, dtype=float)
    g, dg = _metric_duals(mfd, x)
    gamma = _base_gamma(mfd, x, g, dg)
    if mfd.connection == "hermitianized":
        J, dJ = mfd.acs.dual(x)
        gamma = _hermitianize(gamma, J, dJ)
    elif mfd.connection == "obata":
        gamma = _obata(gamma, [f.dual(x) for f in mfd.triple])
    return gamma


def levi_civita(mfd: ChartManifold, x) -> ConnectionCoeffs:
    x = np.asarray(x, dtype=float)
    g, dg = _metric_duals(mfd, x)
    try:
        np.linalg.cholesky(g.val)
    except np.linalg.LinAlgError:
        raise ManifoldError("metric is not positive definite", x) from None
    d = _levi_civita_dual(g, dg)
    return ConnectionCoeffs(d.val, d.der, True, False)


def metric_connection(mfd: ChartManifold, x) -> ConnectionCoeffs:
    """The scenario's metric connection ``D`` at ``x``."""
    x = np.asarray(x, dtype=float)
    if mfd.torsion is not None and mfd.connection != "lc":
        T = mfd.torsion.value(x)
        if np.max(np.abs(T + T.transpose(0, 2, 1))) > 1e-10:
            raise ManifoldError("torsion components not antisymmetric", x)
    d = connection_dual(mfd, x)
    herm = mfd.connection in ("hermitianized", "obata") or (
        mfd.acs is not None and hermitian_residual(mfd, x, d) < 1e-9
    )
    return ConnectionCoeffs(d.val, d.der, True, bool(herm))


# ------------------------------------------------------ torsion & curvature


def torsion_of(gamma: np.ndarray) -> np.ndarray:
    return gamma - gamma.transpose(0, 2, 1)


def curvature_of(gamma: np.ndarray, dgamma: np.ndarray) -> np.ndarray:
    """``R^l_{kij}`` as ``[l, k, i, j]``."""
    term = np.einsum("ljki->lkij", dgamma)  # d_i Gamma^l_{jk}
    quad = np.einsum("lim,mjk->lkij", gamma, gamma)
    R = term + quad
    return R - R.transpose(0, 1, 3, 2)


def torsion(mfd: ChartManifold, x) -> np.ndarray:
    return torsion_of(metric_connection(mfd, x).gamma)


def curvature(mfd: ChartManifold, x) -> np.ndarray:
    c = metric_connection(mfd, x)
    return curvature_of(c.gamma, c.dgamma)


def lower_curvature(R: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``R_{klij} = g_{km} R^m_{lij}`` i.e. ``<R(d_i, d_j) d_l, d_k>``."""
    return np.einsum("km,mlij->klij", g, R)


def metric_residual(gamma: np.ndarray, g: np.ndarray, dg: np.ndarray) -> float:
    """``max |d_i g_jk - Gamma^l_ij g_lk - Gamma^l_ik g_jl|``; ``dg[j,k,i] = d_i g_jk``."""
    r = np.einsum("jki->ijk", dg) - np.einsum("lij,lk->ijk", gamma, g) - np.einsum("lik,jl->ijk", gamma, g)
    return float(np.max(np.abs(r)))


def bianchi_residual(R: np.ndarray) -> float:
    s = R + np.einsum("lijk->lkij", R) + np.einsum("ljki->lkij", R)
    return float(np.max(np.abs(s)))


def hermitian_residual(mfd: ChartManifold, x, gamma: Dual | None = None) -> float:
    """``max |D J|`` for the scenario's almost complex structure."""
    if mfd.acs is None:
        raise ManifoldError("no almost complex structure")
    gamma = connection_dual(mfd, x) if gamma is None else gamma
    J, dJ = mfd.acs.dual(x)
    return float(np.max(np.abs(covariant_endo(gamma, J, dJ).val)))


def sectional_curvature(R: np.ndarray, g: np.ndarray, X, Y) -> float:
    """``<R(X,Y)Y, X> / (|X|^2 |Y|^2 - <X,Y>^2)``."""
    X, Y = np.asarray(X, float), np.asarray(Y, float)
    num = np.einsum("lkij,i,j,k,lm,m->", R, X, Y, Y, g, X)
    den = (X @ g @ X) * (Y @ g @ Y) - (X @ g @ Y) ** 2
    return float(num / den)


# ------------------------------------------------------ torsion decomposition


@dataclass(frozen=True)
class TorsionParts:
    """Lowered parts ``T_{ijk} = <T(d_i, d_j), d_k>``."""

    a_part: np.ndarray
    skew3: np.ndarray
    vectorial: np.ndarray
    vector: np.ndarray  # V with vectorial part  <V,X>Y - <V,Y>X


def lower_torsion(T: np.ndarray, g: np.ndarray) -> np.ndarray:
    return np.einsum("kl,lij->ijk", g, T)


def raise_torsion(Tl: np.ndarray, g: np.ndarray) -> np.ndarray:
    return np.einsum("kl,ijl->kij", np.linalg.inv(g), Tl)


def tensor_inner(P: np.ndarray, Q: np.ndarray, g: np.ndarray) -> float:
    gi = np.linalg.inv(g)
    return float(np.einsum("ijk,abc,ia,jb,kc->", P, Q, gi, gi, gi, optimize=True))


def torsion_decompose(T: np.ndarray, g: np.ndarray, tol: float = 1e-10) -> TorsionParts:
    """Split ``T`` (upper index form) into the three pairwise orthogonal parts."""
    T = np.asarray(T, dtype=float)
    g = np.asarray(g, dtype=float)
    if np.max(np.abs(T + T.transpose(0, 2, 1))) > tol:
        raise ManifoldError("torsion is not antisymmetric in its lower indices")
    m = g.shape[0]
    Tl = lower_torsion(T, g)
    skew = (Tl + Tl.transpose(1, 2, 0) + Tl.transpose(2, 0, 1)) / 3.0
    # for T(X,Y) = <V,X>Y - <V,Y>X the trace T^a_{ia} equals (m-1) V_i
    trace = np.einsum("aia->i", T)
    V_low = trace / (m - 1) if m > 1 else np.zeros(m)
    vect = np.einsum("i,jk->ijk", V_low, g) - np.einsum("j,ik->ijk", V_low, g)
    A = Tl - skew - vect
    return TorsionParts(A, skew, vect, np.linalg.solve(g, V_low))


def vectorial_torsion(V, g) -> np.ndarray:
    """``T(X,Y) = <V,X>Y - <V,Y>X`` in upper-index form."""
    V = np.asarray(V, dtype=float)
    Vl = np.asarray(g, dtype=float) @ V
    m = V.size
    eye = np.eye(m)
    return np.einsum("i,kj->kij", Vl, eye) - np.einsum("j,ki->kij", Vl, eye)


# ---------------------------------------------------- complex type analysis


def holomorphic_projectors(J: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(P', P'') = (1/2 (1 - iJ), 1/2 (1 + iJ))`` onto the ``+i`` / ``-i`` eigenspaces."""
    m = J.shape[0]
    eye = np.eye(m)
    return 0.5 * (eye - 1j * J), 0.5 * (eye + 1j * J)


@dataclass(frozen=True)
class TorsionType:
    mixed: float  # max |component| over the six mixed-type blocks
    skew3: float  # max |component| of the totally skew part
    pure: float  # max |component| of the (3,0)+(0,3) part

    def admissible(self, tol: float = 1e-9) -> bool:
        return self.mixed <= tol and self.skew3 <= tol


def type_blocks3(Tl: np.ndarray, J: np.ndarray) -> dict[str, np.ndarray]:
    """Trilinear ``Tl`` restricted to each of the 8 type combinations.

    Keys are strings over ``'1'`` (T'M) and ``'0'`` (T''M), one per slot.
    """
    P1, P0 = holomorphic_projectors(J)
    P = {"1": P1, "0": P0}
    out = {}
    for a in "10":
        for b in "10":
            for c in "10":
                out[a + b + c] = np.einsum("ijk,ia,jb,kc->abc", Tl, P[a], P[b], P[c], optimize=True)
    return out


def torsion_J_type(T: np.ndarray, J: np.ndarray, g: np.ndarray, tol: float = 1e-8) -> TorsionType:
    check_complex_structure(J, g, tol)
    Tl = lower_torsion(T, g)
    blocks = type_blocks3(Tl, J)
    mixed = max(float(np.max(np.abs(b))) for k, b in blocks.items() if k not in ("111", "000"))
    pure = max(float(np.max(np.abs(blocks["111"]))), float(np.max(np.abs(blocks["000"]))))
    skew = float(np.max(np.abs(torsion_decompose(T, g).skew3)))
    return TorsionType(mixed, skew, pure)


def type30_torsion(c: np.ndarray, J: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Real torsion ``2 Re c(P'X, P'Y, P'Z)`` from a complex array ``c``.

    ``c`` is antisymmetrised in its first two slots; the result is returned
    in upper-index form.
    """
    c = 0.5 * (c - c.transpose(1, 0, 2))
    P1, _ = holomorphic_projectors(J)
    tau = np.einsum("abc,ai,bj,ck->ijk", c, P1, P1, P1, optimize=True)
    return raise_torsion(2.0 * tau.real, g)


def curvature_holo_components(R: np.ndarray, J: np.ndarray) -> dict[str, float]:
    """Max magnitudes of ``R(a, b) c`` on type combinations of ``a, b, c``.

    Keys: ``"R(u,v)w"``, ``"R(u,v)wbar"``, ``"R(ubar,vbar)w"``, ... .  The
    result vector is reported in full (both of its type components).
    """
    P1, P0 = holomorphic_projectors(J)
    P = {"": P1, "bar": P0}
    out = {}
    for a in ("", "bar"):
        for b in ("", "bar"):
            for c in ("", "bar"):
                blk = np.einsum("lkij,ia,jb,kc->labc", R, P[a], P[b], P[c], optimize=True)
                out[f"R(u{a},v{b})w{c}"] = float(np.max(np.abs(blk)))
    return out
