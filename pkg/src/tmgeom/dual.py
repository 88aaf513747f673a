"""First-order forward-mode arrays.

A :class:`Dual` holds an array ``val`` together with its derivatives ``der``
along ``n`` coordinate directions; ``der`` has shape ``val.shape + (n,)``.
Products go through :func:`einsum`, which applies the Leibniz rule term by
term, so every tensor assembled from exact 2-jets keeps an exact first
derivative without finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Dual:
    val: np.ndarray
    der: np.ndarray

    @property
    def shape(self):
        return self.val.shape

    @property
    def nder(self) -> int:
        return self.der.shape[-1]

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.der + other.der)
        return Dual(self.val + other, self.der)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.der - other.der)
        return Dual(self.val - other, self.der)

    def __rsub__(self, other):
        return Dual(other - self.val, -self.der)

    def __neg__(self):
        return Dual(-self.val, -self.der)

    def __mul__(self, c):
        if isinstance(c, Dual):
            raise TypeError("use einsum for Dual-by-Dual products")
        c = np.asarray(c)
        return Dual(self.val * c, self.der * c[..., None] if c.ndim else self.der * c)

    __rmul__ = __mul__

    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Dual(self.val[idx], self.der[idx + (slice(None),)])

    def transpose(self, *axes):
        axes = axes if axes else tuple(reversed(range(self.val.ndim)))
        return Dual(self.val.transpose(axes), self.der.transpose(tuple(axes) + (self.val.ndim,)))

    @property
    def T(self):
        return self.transpose()

    def pad(self, n_before: int, n_after: int) -> "Dual":
        """Embed the derivative axis into a larger coordinate system."""
        widths = [(0, 0)] * self.val.ndim + [(n_before, n_after)]
        return Dual(self.val, np.pad(self.der, widths))

    def directional(self, u) -> np.ndarray:
        """Derivative along the coordinate vector ``u``."""
        return self.der @ np.asarray(u, dtype=float)


def const(a, n: int) -> Dual:
    a = np.asarray(a, dtype=float)
    return Dual(a, np.zeros(a.shape + (n,)))


def variable(a) -> Dual:
    """Independent coordinates: derivative is the identity."""
    a = np.asarray(a, dtype=float).reshape(-1)
    return Dual(a, np.eye(a.size))


def stack(items, axis: int = 0) -> Dual:
    items = list(items)
    return Dual(
        np.stack([d.val for d in items], axis=axis),
        np.stack([d.der for d in items], axis=axis),
    )


_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXY"


def einsum(subscripts: str, *ops) -> Dual:
    """``np.einsum`` over Dual / plain-array operands with the Leibniz rule."""
    ins, out = subscripts.replace(" ", "").split("->")
    in_specs = ins.split(",")
    if len(in_specs) != len(ops):
        raise ValueError("operand count does not match subscripts")
    used = set(subscripts)
    z = next(ch for ch in reversed(_LETTERS) if ch not in used)
    n = None
    vals = []
    for op in ops:
        if isinstance(op, Dual):
            vals.append(op.val)
            n = op.nder if n is None else n
        else:
            vals.append(np.asarray(op, dtype=float))
    val = np.einsum(subscripts, *vals, optimize=True)
    if n is None:
        raise TypeError("einsum needs at least one Dual operand")
    der = np.zeros(val.shape + (n,))
    for k, op in enumerate(ops):
        if not isinstance(op, Dual):
            continue
        specs = list(in_specs)
        specs[k] = specs[k] + z
        terms = list(vals)
        terms[k] = op.der
        der = der + np.einsum(",".join(specs) + "->" + out + z, *terms, optimize=True)
    return Dual(val, der)


def inv(a: Dual) -> Dual:
    ai = np.linalg.inv(a.val)
    der = -np.einsum("ij,jkz,kl->ilz", ai, a.der, ai, optimize=True)
    return Dual(ai, der)


def apply(a: Dual, f, df) -> Dual:
    """Elementwise ``f`` with derivative ``df``."""
    return Dual(f(a.val), df(a.val)[..., None] * a.der)


def concat(items) -> Dual:
    """Concatenate 1-d Duals (or plain vectors, treated as constants)."""
    items = list(items)
    n = next(d.nder for d in items if isinstance(d, Dual))
    items = [d if isinstance(d, Dual) else const(d, n) for d in items]
    return Dual(
        np.concatenate([d.val for d in items]),
        np.concatenate([d.der for d in items]),
    )
