"""A metric connection parallelising a given quaternionic triple.

Starting from a metric connection ``nabla`` and a pointwise triple
``(I, J, K)`` of g-orthogonal structures with ``IJ = K``, the connection

    D = nabla + 1/4 (A_I + A_J + A_K),     A_E(X) = (nabla_X E) E,

satisfies ``DI = DJ = DK = 0`` and stays metric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dual as du
from .base_manifold import (
    ChartManifold,
    ConnectionCoeffs,
    ManifoldError,
    _metric_duals,
    check_complex_structure,
    connection_dual,
    covariant_endo,
    metric_residual,
    torsion_of,
)
from .dual import Dual


@dataclass(frozen=True)
class EndoDerivative:
    """``A_E(X) = (nabla_X E) E`` with the identities it must satisfy."""

    A: np.ndarray
    nabla_E: np.ndarray
    commutator_residual: float  # |[A_E, E] + 2 nabla_X E|
    skew_residual: float  # |g A + (g A)^T|


def _input_gamma(mfd: ChartManifold, x, gamma: Dual | None) -> Dual:
    if gamma is not None:
        return gamma
    return connection_dual(mfd.with_connection("lc"), x) if mfd.connection == "obata" else connection_dual(mfd, x)


def a_of_endo(
    mfd: ChartManifold,
    x,
    E_field,
    direction,
    gamma: Dual | None = None,
    tol: float = 1e-8,
) -> EndoDerivative:
    """``A_E`` along ``direction`` for the endomorphism field ``E_field``.

    ``gamma`` defaults to the input connection of the scenario (the
    Levi-Civita connection for Obata scenarios).
    """
    x = np.asarray(x, dtype=float)
    g = mfd.metric.value(x)
    E, dE = E_field.dual(x)
    check_complex_structure(E.val, g, tol, x, "E")
    gam = _input_gamma(mfd, x, gamma)
    nab = np.einsum("iab,i->ab", covariant_endo(gam, E, dE).val, np.asarray(direction, dtype=float))
    A = nab @ E.val
    comm = A @ E.val - E.val @ A
    return EndoDerivative(
        A,
        nab,
        float(np.max(np.abs(comm + 2 * nab))),
        float(np.max(np.abs(g @ A + (g @ A).T))),
    )


def _triple_duals(mfd: ChartManifold, x, tol: float):
    if mfd.triple is None:
        raise ManifoldError("scenario has no quaternionic triple")
    g = mfd.metric.value(x)
    duals = [f.dual(x) for f in mfd.triple]
    mats = [E.val for E, _ in duals]
    for i, S in enumerate(mats):
        check_complex_structure(S, g, tol, x, f"J{i + 1}")
    if np.max(np.abs(mats[0] @ mats[1] - mats[2])) > tol:
        raise ManifoldError("triple does not satisfy J1 J2 = J3", x)
    return duals


def commutator_identity(mfd: ChartManifold, x, gamma: Dual | None = None, tol: float = 1e-8) -> float:
    """``max_X |[A_J(X), I] - [K, nabla_X J]|`` over coordinate directions."""
    x = np.asarray(x, dtype=float)
    (I, _), (J, dJ), (K, _) = _triple_duals(mfd, x, tol)
    gam = _input_gamma(mfd, x, gamma)
    nJ = covariant_endo(gam, J, dJ).val
    worst = 0.0
    for i in range(mfd.m):
        A = nJ[i] @ J.val
        lhs = A @ I.val - I.val @ A
        rhs = K.val @ nJ[i] - nJ[i] @ K.val
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


@dataclass(frozen=True)
class ObataResult:
    connection: ConnectionCoeffs
    parallel_residuals: tuple[float, float, float]  # |D J_1|, |D J_2|, |D J_3|
    input_residuals: tuple[float, float, float]  # same under the input connection
    metric_residual: float
    skew_residual: float  # D - nabla is g-skew
    torsion: np.ndarray


def obata_connection(mfd: ChartManifold, x, gamma: Dual | None = None, tol: float = 1e-8) -> ObataResult:
    x = np.asarray(x, dtype=float)
    duals = _triple_duals(mfd, x, tol)
    gam = _input_gamma(mfd, x, gamma)
    out = gam
    for E, dE in duals:
        out = out + du.einsum("iac,cb->aib", covariant_endo(gam, E, dE), E) * 0.25
    par = tuple(float(np.max(np.abs(covariant_endo(out, E, dE).val))) for E, dE in duals)
    inp = tuple(float(np.max(np.abs(covariant_endo(gam, E, dE).val))) for E, dE in duals)
    g, dg = _metric_duals(mfd, x)
    diff = np.einsum("kl,lij->ikj", g.val, out.val - gam.val)  # <(D-nabla)_i d_j, d_k>
    skew = float(np.max(np.abs(diff + diff.transpose(0, 2, 1))))
    return ObataResult(
        ConnectionCoeffs(out.val, out.der, True, True),
        par,
        inp,
        metric_residual(out.val, g.val, dg.val),
        skew,
        torsion_of(out.val),
    )
