"""Alternating tensors stored as dense antisymmetric arrays.

Wedge products use the determinant convention: for 1-forms
``(a^b)(X, Y) = a(X)b(Y) - a(Y)b(X)``, and in general ``alpha ^ beta`` is the
signed sum over (k, l)-shuffles, with no 1/k! factors.  In particular

    (w ^ w)(a, b, c, d) = 2 [w(a,b) w(c,d) - w(a,c) w(b,d) + w(a,d) w(b,c)].

The exterior derivative matches: ``(d alpha)(X0..Xk) = sum_j (-1)^j
X_j(alpha(..X_j omitted..))`` on coordinate fields.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import factorial

import numpy as np

from . import dual as du
from .dual import Dual


def perm_sign(p) -> int:
    p = list(p)
    sign = 1
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def antisymmetrize(t: np.ndarray) -> np.ndarray:
    """Average of signed index permutations (the projection onto forms)."""
    k = t.ndim
    out = np.zeros_like(t)
    for p in itertools.permutations(range(k)):
        out += perm_sign(p) * np.transpose(t, p)
    return out / factorial(k)


def _place(outer: np.ndarray, positions: list[int]) -> np.ndarray:
    # outer's axis j belongs at result position positions[j]
    axes = [positions.index(p) for p in range(len(positions))]
    return np.transpose(outer, axes)


def wedge(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Shuffle-sum wedge of two dense forms (determinant convention)."""
    k, l = alpha.ndim, beta.ndim
    if k == 0 or l == 0:
        return alpha * beta
    n = k + l
    outer = np.multiply.outer(alpha, beta)
    out = np.zeros(outer.shape)
    for s in itertools.combinations(range(n), k):
        rest = [i for i in range(n) if i not in s]
        positions = list(s) + rest
        out += perm_sign(positions) * _place(outer, positions)
    return out


def wedge22(w: np.ndarray, u: np.ndarray | None = None) -> np.ndarray:
    """``w ^ u`` for 2-forms, written out (faster than :func:`wedge`)."""
    u = w if u is None else u
    return (
        np.einsum("ab,cd->abcd", w, u)
        - np.einsum("ac,bd->abcd", w, u)
        + np.einsum("ad,bc->abcd", w, u)
        + np.einsum("ab,cd->abcd", u, w)
        - np.einsum("ac,bd->abcd", u, w)
        + np.einsum("ad,bc->abcd", u, w)
    )


def wedge22_dual(w: Dual) -> Dual:
    """``w ^ w`` for a 2-form carrying first derivatives."""
    a = du.einsum("ab,cd->abcd", w, w)
    b = du.einsum("ac,bd->abcd", w, w)
    c = du.einsum("ad,bc->abcd", w, w)
    return (a - b + c) * 2.0


def exterior_derivative(form: Dual) -> np.ndarray:
    """``d`` of a k-form whose coordinate derivatives are carried in ``form.der``.

    ``form.der[..., i]`` is the partial derivative along coordinate ``i``.
    """
    k = form.val.ndim
    dmat = np.moveaxis(form.der, -1, 0)  # derivative index first
    out = np.zeros(dmat.shape)
    for j in range(k + 1):
        out += (-1) ** j * np.moveaxis(dmat, 0, j)
    return out


def evaluate(form: np.ndarray, *vectors) -> float:
    """Value of a dense k-form on ``k`` vectors."""
    t = form
    for v in vectors:
        t = np.tensordot(np.asarray(v, dtype=float), t, axes=([0], [0]))
    return float(t)


def hodge_star2(w: np.ndarray, g: np.ndarray, vol_sign: float = 1.0) -> np.ndarray:
    """Hodge star of a 2-form on an oriented 4-dimensional inner product space.

    ``(*w)_{cd} = 1/2 sqrt(det g) w^{ab} eps_{abcd}`` with indices raised by g.
    """
    if w.shape != (4, 4):
        raise ValueError("hodge_star2 is defined for 4-dimensional 2-forms")
    gi = np.linalg.inv(g)
    w_up = gi @ w @ gi.T
    eps = levi_civita(4)
    return 0.5 * vol_sign * np.sqrt(np.linalg.det(g)) * np.einsum("ab,abcd->cd", w_up, eps)


def levi_civita(n: int) -> np.ndarray:
    eps = np.zeros((n,) * n)
    for p in itertools.permutations(range(n)):
        eps[p] = perm_sign(p)
    return eps


@dataclass(frozen=True)
class AltForm:
    """An alternating k-tensor at a point."""

    array: np.ndarray

    @property
    def degree(self) -> int:
        return self.array.ndim

    @property
    def dim(self) -> int:
        return self.array.shape[0] if self.array.ndim else 0

    def __call__(self, *vectors) -> float:
        if len(vectors) != self.degree:
            raise ValueError(f"a {self.degree}-form takes {self.degree} vectors")
        return evaluate(self.array, *vectors)

    def components(self) -> dict[tuple[int, ...], float]:
        """Strictly increasing index tuples -> component value."""
        return {
            idx: float(self.array[idx])
            for idx in itertools.combinations(range(self.dim), self.degree)
        }

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.array))) if self.array.size else 0.0

    def antisymmetry_defect(self) -> float:
        return float(np.max(np.abs(self.array - antisymmetrize(self.array))))

    def __sub__(self, other: "AltForm") -> "AltForm":
        return AltForm(self.array - other.array)

    def __add__(self, other: "AltForm") -> "AltForm":
        return AltForm(self.array + other.array)
