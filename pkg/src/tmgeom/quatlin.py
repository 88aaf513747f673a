"""Quaternionic linear algebra on a single Euclidean fibre.

Conventions
-----------
* ``H^n`` is ``R^{4n}`` with blocks of coordinates on ``(1, i, j, k)``.
* The standard triple is ``I = R_i``, ``J = R_j`` (right multiplication) and
  ``K = IJ``; since right multiplication reverses products, ``K = -R_k``.
* 2-forms are ``w_S(X, Y) = <SX, Y>``, as a matrix ``S^T g``.
* Wedges follow :mod:`tmgeom.forms` (determinant convention).  Under it the
  Kraines form ``sum w_S ^ w_S`` takes the value 6 on an orthonormal frame
  ``(Y, IY, JY, KY)``.  :data:`KRAINES_NORMALIZATION` rescales it so that the
  same frame gives 4, which is the value used by the quaternionic-line lemma.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm, null_space

from .forms import AltForm, hodge_star2, levi_civita, wedge22

KRAINES_NORMALIZATION = 2.0 / 3.0


class NotIsometryError(ValueError):
    pass


class NotComplexStructureError(ValueError):
    pass


# ---------------------------------------------------------------- quaternions


@dataclass(frozen=True)
class Quaternion:
    w: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @classmethod
    def from_array(cls, a) -> "Quaternion":
        a = np.asarray(a, dtype=float).reshape(4)
        return cls(*map(float, a))

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def __mul__(self, q: "Quaternion") -> "Quaternion":
        return quat_mul(self, q)

    def __add__(self, q: "Quaternion") -> "Quaternion":
        return Quaternion(self.w + q.w, self.x + q.x, self.y + q.y, self.z + q.z)

    def conj(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))


def quat_mul(p: Quaternion, q: Quaternion) -> Quaternion:
    """Hamilton product."""
    return Quaternion(
        p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z,
        p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
        p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x,
        p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w,
    )


def left_matrix(p: Quaternion) -> np.ndarray:
    """4x4 real matrix of ``q -> p q``."""
    w, x, y, z = p.w, p.x, p.y, p.z
    return np.array(
        [
            [w, -x, -y, -z],
            [x, w, -z, y],
            [y, z, w, -x],
            [z, -y, x, w],
        ]
    )


def right_matrix(p: Quaternion) -> np.ndarray:
    """4x4 real matrix of ``q -> q p``."""
    w, x, y, z = p.w, p.x, p.y, p.z
    return np.array(
        [
            [w, -x, -y, -z],
            [x, w, z, -y],
            [y, -z, w, x],
            [z, y, -x, w],
        ]
    )


# -------------------------------------------------------------------- triples


@dataclass(frozen=True)
class QTriple:
    I: np.ndarray
    J: np.ndarray
    K: np.ndarray
    g: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.g is None:
            object.__setattr__(self, "g", np.eye(self.I.shape[0]))

    @property
    def dim(self) -> int:
        return self.I.shape[0]

    def matrices(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.I, self.J, self.K

    def defects(self) -> dict[str, float]:
        """Residuals of the triple identities (all ~0 for a valid triple)."""
        I, J, K, g = self.I, self.J, self.K, self.g
        eye = np.eye(self.dim)
        out = {}
        for name, S in (("I", I), ("J", J), ("K", K)):
            out[f"{name}^2+1"] = _maxabs(S @ S + eye)
            out[f"{name} orth"] = _maxabs(S.T @ g @ S - g)
            out[f"{name} skew"] = _maxabs(g @ S + (g @ S).T)
        out["IJ-K"] = _maxabs(I @ J - K)
        out["JI+K"] = _maxabs(J @ I + K)
        return out

    def max_defect(self) -> float:
        return max(self.defects().values())

    def conjugate(self, P: np.ndarray) -> "QTriple":
        """Triple ``P S P^{-1}`` for an isometry ``P`` of ``g``."""
        Pi = np.linalg.inv(P)
        return QTriple(P @ self.I @ Pi, P @ self.J @ Pi, P @ self.K @ Pi, self.g)

    def rotate(self, a: np.ndarray) -> "QTriple":
        """Triple ``(sum_j a_ij S_j)_i`` for ``a`` in SO(3)."""
        S = np.stack(self.matrices())
        new = np.einsum("ij,jab->iab", a, S)
        return QTriple(new[0], new[1], new[2], self.g)


def _maxabs(a) -> float:
    return float(np.max(np.abs(a)))


def standard_triple(n: int) -> QTriple:
    if n < 1:
        raise ValueError("n must be a positive integer")
    blocks_i = right_matrix(Quaternion(0, 1, 0, 0))
    blocks_j = right_matrix(Quaternion(0, 0, 1, 0))
    eye = np.eye(n)
    I = np.kron(eye, blocks_i)
    J = np.kron(eye, blocks_j)
    return QTriple(I, J, I @ J)


def two_form_of(S: np.ndarray, g: np.ndarray | None = None, tol: float = 1e-8) -> np.ndarray:
    """Matrix of ``w(X, Y) = <SX, Y>_g`` for a compatible complex structure S."""
    S = np.asarray(S, dtype=float)
    g = np.eye(S.shape[0]) if g is None else np.asarray(g, dtype=float)
    if _maxabs(S @ S + np.eye(S.shape[0])) > tol:
        raise NotComplexStructureError("S^2 != -Id")
    if _maxabs(S.T @ g @ S - g) > tol:
        raise NotComplexStructureError("S is not g-orthogonal")
    w = S.T @ g
    return 0.5 * (w - w.T)


@dataclass(frozen=True)
class KrainesForm:
    raw: AltForm
    normalized: AltForm


def kraines(t: QTriple) -> KrainesForm:
    """The 4-form ``w_I^w_I + w_J^w_J + w_K^w_K``, raw and normalised."""
    raw = sum(wedge22(two_form_of(S, t.g)) for S in t.matrices())
    return KrainesForm(AltForm(raw), AltForm(KRAINES_NORMALIZATION * raw))


def random_so3(rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


# ------------------------------------------------------- isometries and G(n)


def _check_isometry(A: np.ndarray, g: np.ndarray, tol: float = 1e-8) -> None:
    if A.shape != g.shape or _maxabs(A.T @ g @ A - g) > tol:
        raise NotIsometryError("matrix is not an isometry of g")


def _orthonormal_coords(g: np.ndarray) -> np.ndarray:
    # x -> L^T x maps g to the identity
    return np.linalg.cholesky(g).T


def subspace_distance(B1: np.ndarray, B2: np.ndarray, g: np.ndarray | None = None) -> float:
    """Spectral norm of the difference of the g-orthogonal projectors onto
    the column spans of ``B1`` and ``B2`` (the sine of the largest principal
    angle)."""
    if g is not None:
        Lt = _orthonormal_coords(g)
        B1, B2 = Lt @ B1, Lt @ B2
    q1 = _range_basis(B1)
    q2 = _range_basis(B2)
    if q1.shape[1] != q2.shape[1]:
        return 1.0
    return float(np.linalg.norm(q1 @ q1.T - q2 @ q2.T, 2))


def _range_basis(B: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    u, s, _ = np.linalg.svd(B, full_matrices=False)
    rank = int(np.sum(s > tol * max(1.0, s[0])))
    return u[:, :rank]


def quaternionic_line(X: np.ndarray, t: QTriple) -> np.ndarray:
    """Columns ``X, IX, JX, KX``."""
    return np.column_stack([X, t.I @ X, t.J @ X, t.K @ X])


def _probe_vectors(d: int) -> list[np.ndarray]:
    eye = np.eye(d)
    vecs = [eye[i] for i in range(d)]
    vecs += [(eye[i] + eye[j]) / np.sqrt(2) for i in range(d) for j in range(i + 1, d)]
    return vecs


@dataclass(frozen=True)
class MembershipResult:
    member: bool
    residual: float

    def __bool__(self) -> bool:
        return self.member


def in_Gn(A: np.ndarray, t: QTriple, tol: float = 1e-8) -> MembershipResult:
    """Does the isometry ``A`` map quaternionic lines to quaternionic lines?

    Probes every basis vector and every normalised sum of two basis vectors.
    """
    A = np.asarray(A, dtype=float)
    _check_isometry(A, t.g)
    res = 0.0
    for X in _probe_vectors(t.dim):
        image = A @ quaternionic_line(X, t)
        target = quaternionic_line(A @ X, t)
        res = max(res, subspace_distance(image, target, t.g))
    return MembershipResult(res < tol, res)


def pullback4(omega: np.ndarray, A: np.ndarray) -> np.ndarray:
    return np.einsum("abcd,ai,bj,ck,dl->ijkl", omega, A, A, A, A, optimize=True)


def isotropy_check(A: np.ndarray, t: QTriple) -> float:
    """``max |A^*Omega - Omega|`` over all basis 4-tuples (raw Kraines form)."""
    A = np.asarray(A, dtype=float)
    _check_isometry(A, t.g)
    omega = kraines(t).raw.array
    return _maxabs(pullback4(omega, A) - omega)


def sp1_algebra(t: QTriple) -> list[np.ndarray]:
    return list(t.matrices())


def spn_algebra(t: QTriple) -> list[np.ndarray]:
    """Basis of the g-skew endomorphisms commuting with I and J.

    Solves the linear equations ``[B, I] = [B, J] = 0`` on the space of
    g-skew matrices.
    """
    d = t.dim
    Lt = _orthonormal_coords(t.g)
    Lti = np.linalg.inv(Lt)
    # work with orthonormal-coordinate representatives; skew there <=> g-skew
    I = Lt @ t.I @ Lti
    J = Lt @ t.J @ Lti
    basis = []
    for a in range(d):
        for b in range(a + 1, d):
            E = np.zeros((d, d))
            E[a, b], E[b, a] = 1.0, -1.0
            basis.append(E)
    cols = [np.concatenate([(E @ I - I @ E).ravel(), (E @ J - J @ E).ravel()]) for E in basis]
    ns = null_space(np.column_stack(cols))
    out = []
    for c in ns.T:
        B = sum(ci * E for ci, E in zip(c, basis))
        out.append(Lti @ B @ Lt)
    return out


def sample_Gn(t: QTriple, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Random element ``exp(a) exp(b)``, a in sp(1), b in sp(n)."""
    a = sum(rng.normal(scale=scale) * S for S in sp1_algebra(t))
    b = sum(rng.normal(scale=scale) * B for B in spn_algebra(t))
    return expm(a) @ expm(b)


def sample_generic_isometry(t: QTriple, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """``exp(B)`` for a random g-skew ``B``."""
    d = t.dim
    M = rng.normal(scale=scale, size=(d, d))
    Lt = _orthonormal_coords(t.g)
    Lti = np.linalg.inv(Lt)
    return Lti @ expm(M - M.T) @ Lt


# ------------------------------------------------------------------ appendix


@dataclass(frozen=True)
class LineLemma:
    det: float
    max_z_norm: float
    omega_normalized: float
    residual: float  # |omega_normalized - 4 det|
    coefficients: np.ndarray  # rows (alpha_j, beta_j, gamma_j)


def line_lemma_check(Y, Y1, Y2, Y3, t: QTriple, tol: float = 1e-8) -> LineLemma:
    """Decompose ``Y_j = a_j IY + b_j JY + c_j KY + Z_j`` and compare
    ``Omega_normalized(Y, Y1, Y2, Y3)`` with ``4 det[a b c]``."""
    vecs = [np.asarray(v, dtype=float) for v in (Y, Y1, Y2, Y3)]
    F = np.column_stack(vecs)
    if _maxabs(F.T @ t.g @ F - np.eye(4)) > tol:
        raise ValueError("(Y, Y1, Y2, Y3) is not orthonormal")
    Y = vecs[0]
    line = [t.I @ Y, t.J @ Y, t.K @ Y]
    coeff = np.array([[vj @ t.g @ s for s in line] for vj in vecs[1:]])
    zs = [vj - sum(c * s for c, s in zip(row, line)) - (vj @ t.g @ Y) * Y for vj, row in zip(vecs[1:], coeff)]
    max_z = max(float(np.sqrt(z @ t.g @ z)) for z in zs)
    det = float(np.linalg.det(coeff))
    om = kraines(t).normalized(*vecs)
    return LineLemma(det, max_z, om, abs(om - 4.0 * det), coeff)


def sample_lemma_frame(t: QTriple, rng: np.random.Generator) -> tuple[np.ndarray, ...]:
    """Orthonormal ``(Y, Y1, Y2, Y3)`` with ``Y2, Y3`` in the quaternionic line
    of ``Y`` and ``Y1`` a random unit vector orthogonal to the other three.

    The lemma's identity ``Omega = 4 det`` holds on such frames; when two or
    more ``Y_j`` leave the line, the ``w_S(Z_i, Z_j)`` terms contribute too.
    """
    Y = rng.normal(size=t.dim)
    Y /= np.sqrt(Y @ t.g @ Y)
    im = np.column_stack([t.I @ Y, t.J @ Y, t.K @ Y])  # g-orthonormal
    r = random_so3(rng)
    Y2, Y3 = im @ r[:, 0], im @ r[:, 1]
    B = np.column_stack([Y, Y2, Y3])
    Y1 = rng.normal(size=t.dim)
    Y1 -= B @ (B.T @ t.g @ Y1)
    Y1 /= np.sqrt(Y1 @ t.g @ Y1)
    return Y, Y1, Y2, Y3


# --------------------------------------------------------------- dimension 4


def _default_vol(g: np.ndarray) -> np.ndarray:
    return np.sqrt(np.linalg.det(g)) * levi_civita(4)


def dim4_product(U, X1, X2, g=None, vol=None, tol: float = 1e-10) -> np.ndarray:
    """Quaternionic product on an oriented Euclidean 4-space with unit ``U``
    playing the role of 1."""
    U, X1, X2 = (np.asarray(a, dtype=float) for a in (U, X1, X2))
    g = np.eye(4) if g is None else np.asarray(g, dtype=float)
    vol = _default_vol(g) if vol is None else np.asarray(vol, dtype=float)
    if abs(U @ g @ U - 1.0) > tol:
        raise ValueError("U is not a unit vector")
    l1, l2 = U @ g @ X1, U @ g @ X2
    A1, A2 = X1 - l1 * U, X2 - l2 * U
    cross_low = np.einsum("abcd,a,b,c->d", vol, U, A1, A2)
    cross = np.linalg.solve(g, cross_low)
    return (l1 * l2 - A1 @ g @ A2) * U + l1 * A2 + l2 * A1 + cross


def left_product_matrix(v, U, g=None, vol=None) -> np.ndarray:
    """Matrix of ``X -> v . X`` for :func:`dim4_product`."""
    return np.column_stack([dim4_product(U, v, e, g, vol) for e in np.eye(4)])


def dim4_omega(U, v, g=None, vol=None, tol: float = 1e-10) -> AltForm:
    """2-form of the complex structure ``v .`` (left product by ``v``)."""
    U, v = np.asarray(U, dtype=float), np.asarray(v, dtype=float)
    g = np.eye(4) if g is None else np.asarray(g, dtype=float)
    if abs(U @ g @ U - 1.0) > tol or abs(v @ g @ v - 1.0) > tol or abs(U @ g @ v) > tol:
        raise ValueError("U, v must be orthonormal")
    M = left_product_matrix(v, U, g, vol)
    return AltForm(two_form_of(M, g))


def dim4_omega_formula(U, v, g=None, vol_sign: float = 1.0) -> AltForm:
    """``U^b ^ v^b + *(U^b ^ v^b)``."""
    U, v = np.asarray(U, dtype=float), np.asarray(v, dtype=float)
    g = np.eye(4) if g is None else np.asarray(g, dtype=float)
    ub, vb = g @ U, g @ v
    w = np.outer(ub, vb) - np.outer(vb, ub)
    return AltForm(w + hodge_star2(w, g, vol_sign))
