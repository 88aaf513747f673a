import numpy as np
import pytest

from tmgeom.base_manifold import ChartManifold, ManifoldError
from tmgeom.surface2d import (
    FRAME_NAMES,
    SurfaceGeometry,
    bracket_check,
    einstein_defect,
    surface_frame,
    table_check,
    tm_ricci,
)
from tmgeom.tangent_bundle import TMPoint

from .test_tangent_bundle import tm_points

SURFACES = ["flat_torus_2", "s2_round", "hyperbolic_plane", "surface_torsion_f2"]


def moving_points(mfd, rng, n):
    return [p for p in tm_points(mfd, rng, 3 * n) if np.linalg.norm(p.v) > 0.3][:n]


def test_frame_is_orthonormal(builtin, rng):
    from tmgeom.tangent_bundle import tm_metric

    mfd = builtin("s2_round")
    for p in moving_points(mfd, rng, 5):
        fr = surface_frame(mfd, p)
        G = tm_metric(mfd, p)
        F = np.column_stack([fr.fields[k] for k in FRAME_NAMES])
        np.testing.assert_allclose(F.T @ G @ F, np.diag([fr.c**2, 1, fr.c**2, 1]), atol=1e-12)


@pytest.mark.parametrize("name, gauss", [("s2_round", 1.0), ("hyperbolic_plane", -1.0), ("flat_torus_2", 0.0)])
def test_k_is_minus_gauss_curvature(builtin, rng, name, gauss):
    mfd = builtin(name)
    for p in moving_points(mfd, rng, 5):
        assert surface_frame(mfd, p).k == pytest.approx(-gauss, abs=1e-12)


@pytest.mark.parametrize("name", SURFACES)
def test_table_and_bracket(builtin, rng, name):
    mfd = builtin(name)
    for p in moving_points(mfd, rng, 10):
        assert max(table_check(mfd, p).values()) <= 1e-10
        assert bracket_check(mfd, p) <= 1e-10


def test_table_fails_with_opposite_sign_of_k(builtin, rng, monkeypatch):
    mfd = builtin("s2_round")
    p = moving_points(mfd, rng, 1)[0]
    k = SurfaceGeometry(mfd, p).k
    monkeypatch.setattr(SurfaceGeometry, "k", property(lambda self: -k))
    assert max(table_check(mfd, p).values()) > 1e-2
    assert bracket_check(mfd, p) > 1e-2


def test_table_has_sixteen_entries(builtin, rng):
    mfd = builtin("flat_torus_2")
    assert len(table_check(mfd, moving_points(mfd, rng, 1)[0])) == 16


def test_k_depends_only_on_base_point(builtin, rng):
    mfd = builtin("s2_round")
    for p in moving_points(mfd, rng, 3):
        a = SurfaceGeometry(mfd, p).k
        b = SurfaceGeometry(mfd, TMPoint(p.x, -2.5 * p.v[::-1])).k
        assert a == pytest.approx(b, abs=1e-12)


def test_torsion_functions_depend_on_direction(builtin):
    # T(v, eta) = c W, so f1 = <W, u> and f2 = c <W, eta>
    mfd = builtin("surface_torsion_f2")
    W = np.array([0.3, 0.5])
    x = np.zeros(2)
    for v in ([1.0, 0.0], [0.0, 2.0], [0.6, -0.8]):
        fr = surface_frame(mfd, TMPoint(x, v))
        assert fr.f1 == pytest.approx(W @ fr.u, abs=1e-14)
        assert fr.f2 == pytest.approx(fr.c * W @ fr.eta_base, abs=1e-14)


def test_zero_section_raises(builtin):
    with pytest.raises(ManifoldError):
        SurfaceGeometry(builtin("s2_round"), TMPoint([1.0, 0.0], [0.0, 0.0]))


def test_needs_surface(builtin):
    with pytest.raises(ValueError):
        SurfaceGeometry(builtin("flat_c1_kahler"), TMPoint(np.zeros(4), np.ones(4)))


# --------------------------------------------------------------- Ricci


def test_flat_surfaces_give_ricci_flat_tm(builtin, rng):
    for name in ("flat_torus_2", "surface_torsion_f2"):
        mfd = builtin(name)
        for p in moving_points(mfd, rng, 3):
            assert np.max(np.abs(tm_ricci(mfd, p))) <= 1e-6
            d = einstein_defect(mfd, p)
            assert d.defect <= 1e-6
            assert abs(d.scalar_eq_residual) <= 1e-12


def test_scalar_curvature_over_round_sphere(builtin, rng):
    # Sasaki metric on TS^2: scal = 2 - c^2 / 2
    from tmgeom.tangent_bundle import tm_metric

    mfd = builtin("s2_round")
    for p in moving_points(mfd, rng, 4):
        scal = np.einsum("ab,ab->", np.linalg.inv(tm_metric(mfd, p)), tm_ricci(mfd, p))
        c = surface_frame(mfd, p).c
        assert scal == pytest.approx(2 - c**2 / 2, abs=1e-6)


def test_curved_surfaces_are_not_einstein(builtin, rng):
    for name in ("s2_round", "hyperbolic_plane"):
        mfd = builtin(name)
        for p in moving_points(mfd, rng, 3):
            assert einstein_defect(mfd, p).defect > 1e-3


def test_ricci_is_symmetric_for_levi_civita(builtin, rng):
    mfd = builtin("hyperbolic_plane")
    p = moving_points(mfd, rng, 1)[0]
    ric = tm_ricci(mfd, p)
    np.testing.assert_allclose(ric, ric.T, atol=1e-7)


def test_unit_round_sphere_chart_independent(rng):
    # the same sphere in a conformal chart has the same k
    mfd = ChartManifold.from_sources(
        "stereo", 2, [[-1, 1], [-1, 1]], [["4/(1 + x1^2 + x2^2)^2", "0"], ["0", "4/(1 + x1^2 + x2^2)^2"]]
    )
    for p in moving_points(mfd, rng, 3):
        assert SurfaceGeometry(mfd, p).k == pytest.approx(-1.0, abs=1e-12)
        assert max(table_check(mfd, p).values()) <= 1e-10
