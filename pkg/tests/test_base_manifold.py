import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tmgeom.base_manifold import (
    ChartManifold,
    ExprField,
    ManifoldError,
    bianchi_residual,
    curvature,
    curvature_holo_components,
    hermitian_residual,
    levi_civita,
    lower_curvature,
    metric_connection,
    metric_residual,
    raise_torsion,
    sectional_curvature,
    tensor_inner,
    torsion,
    torsion_decompose,
    torsion_J_type,
    type30_torsion,
    vectorial_torsion,
)

J4 = np.kron(np.eye(2), np.array([[0.0, -1.0], [1.0, 0.0]]))


def src(a):
    return np.vectorize(lambda c: repr(float(c)))(np.asarray(a, dtype=float))


def flat(m, **kw):
    return ChartManifold.from_sources("flat", m, [[-1.0, 1.0]] * m, src(np.eye(m)), **kw)


S2 = ChartManifold.from_sources("s2", 2, [[0.3, 2.8], [-3.0, 3.0]], [["1", "0"], ["0", "sin(x1)^2"]])
H2 = ChartManifold.from_sources("h2", 2, [[-2.0, 2.0], [0.5, 3.0]], [["1/x2^2", "0"], ["0", "1/x2^2"]])
# a metric without symmetries, for oracle comparisons
LUMPY = ChartManifold.from_sources(
    "lumpy",
    3,
    [[-1.0, 1.0]] * 3,
    [
        ["2 + sin(x1*x2)", "0.3*x3", "0.1*cos(x1)"],
        ["0.3*x3", "1.5 + x1^2", "0.2*x2*x3"],
        ["0.1*cos(x1)", "0.2*x2*x3", "1 + exp(0.3*x3)"],
    ],
)


def fd_christoffel(mfd, x, h=1e-5):
    m = mfd.m
    dg = np.zeros((m, m, m))
    for c in range(m):
        e = np.zeros(m)
        e[c] = h
        dg[:, :, c] = (mfd.metric.value(x + e) - mfd.metric.value(x - e)) / (2 * h)
    gi = np.linalg.inv(mfd.metric.value(x))
    low = 0.5 * (np.einsum("lji->lij", dg) + np.einsum("lij->lij", dg) - np.einsum("ijl->lij", dg))
    return np.einsum("kl,lij->kij", gi, low)


POINTS3 = st.lists(st.floats(-0.9, 0.9, allow_nan=False), min_size=3, max_size=3).map(np.array)


# -------------------------------------------------------- Levi-Civita


def test_euclidean_is_flat():
    c = levi_civita(flat(3), np.array([0.1, 0.2, 0.3]))
    assert np.max(np.abs(c.gamma)) == 0.0


def test_sphere_christoffel():
    x = np.array([0.7, 1.1])
    G = levi_civita(S2, x).gamma
    assert G[0, 1, 1] == pytest.approx(-np.sin(0.7) * np.cos(0.7), abs=1e-15)
    assert G[1, 0, 1] == pytest.approx(1 / np.tan(0.7), abs=1e-15)
    np.testing.assert_allclose(G, fd_christoffel(S2, x), atol=1e-8)


def test_hyperbolic_christoffel():
    x = np.array([0.4, 1.3])
    G = levi_civita(H2, x).gamma
    assert G[0, 0, 1] == pytest.approx(-1 / 1.3, abs=1e-15)
    np.testing.assert_allclose(G, fd_christoffel(H2, x), atol=1e-8)


@given(POINTS3)
def test_christoffel_matches_finite_differences(x):
    np.testing.assert_allclose(levi_civita(LUMPY, x).gamma, fd_christoffel(LUMPY, x), atol=1e-8)


def test_indefinite_metric_rejected():
    bad = ChartManifold.from_sources("bad", 2, [[-1, 1], [-1, 1]], [["1", "0"], ["0", "-1"]])
    with pytest.raises(ManifoldError):
        levi_civita(bad, np.zeros(2))


# ---------------------------------------------------- metric connections


def eps_torsion(scale=1.0):
    T = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        T[k, i, j], T[k, j, i] = scale, -scale
    return T


def test_zero_torsion_gives_levi_civita():
    mfd = ChartManifold.from_sources("l", 3, LUMPY.box, LUMPY.metric.sources(), torsion=src(np.zeros((3, 3, 3))))
    x = np.array([0.2, -0.3, 0.5])
    np.testing.assert_allclose(metric_connection(mfd, x).gamma, levi_civita(LUMPY, x).gamma, atol=1e-15)


def test_skew_torsion_round_trip():
    mfd = flat(3, torsion=src(eps_torsion()))
    x = np.array([0.1, 0.4, -0.6])
    np.testing.assert_allclose(torsion(mfd, x), eps_torsion(), atol=1e-10)


def test_vectorial_torsion_is_metric():
    T = vectorial_torsion([1.0, 0.0, 0.0], np.eye(3))
    mfd = flat(3, torsion=src(T))
    x = np.array([0.3, 0.3, 0.3])
    D = metric_connection(mfd, x)
    g, dg = mfd.metric.dual(x)
    assert metric_residual(D.gamma, g.val, dg.val) <= 1e-12
    np.testing.assert_allclose(torsion(mfd, x), T, atol=1e-12)


@given(POINTS3, st.integers(0, 10_000))
def test_random_torsion_round_trip_on_curved_metric(x, seed):
    T = np.random.default_rng(seed).normal(size=(3, 3, 3))
    T = T - T.transpose(0, 2, 1)
    mfd = ChartManifold.from_sources("l", 3, LUMPY.box, LUMPY.metric.sources(), torsion=src(T))
    D = metric_connection(mfd, x)
    np.testing.assert_allclose(torsion(mfd, x), T, atol=1e-10)
    g, dg = mfd.metric.dual(x)
    assert metric_residual(D.gamma, g.val, dg.val) <= 1e-9


def test_non_antisymmetric_torsion_rejected():
    T = np.zeros((2, 2, 2))
    T[0, 0, 1] = 1.0
    mfd = flat(2, torsion=src(T))
    with pytest.raises(ManifoldError):
        metric_connection(mfd, np.zeros(2))
    with pytest.raises(ManifoldError):
        mfd.validate(np.zeros((1, 2)))


# ------------------------------------------------------------- curvature


def test_flat_torus_curvature_zero():
    assert np.max(np.abs(curvature(flat(2), np.array([0.3, 0.1])))) == 0.0


def test_sphere_sectional_curvature(rng):
    for x in S2.sample_points(rng, 10):
        R = curvature(S2, x)
        g = S2.metric.value(x)
        assert sectional_curvature(R, g, [1, 0], [0, 1]) == pytest.approx(1.0, abs=1e-8)


def test_hyperbolic_sectional_curvature(rng):
    for x in H2.sample_points(rng, 10):
        R = curvature(H2, x)
        assert sectional_curvature(R, H2.metric.value(x), [1, 0], [0, 1]) == pytest.approx(-1.0, abs=1e-8)


def test_constant_torsion_on_plane_is_flat():
    T = np.zeros((2, 2, 2))
    T[:, 0, 1] = [0.3, 0.5]
    T[:, 1, 0] = [-0.3, -0.5]
    R = curvature(flat(2, torsion=src(T)), np.array([0.2, 0.7]))
    assert np.max(np.abs(R)) <= 1e-15


@given(POINTS3)
def test_bianchi_and_symmetries_torsion_free(x):
    R = curvature(LUMPY, x)
    assert bianchi_residual(R) <= 1e-9
    np.testing.assert_array_equal(R, -R.transpose(0, 1, 3, 2))
    Rl = lower_curvature(R, LUMPY.metric.value(x))
    assert np.max(np.abs(Rl + Rl.transpose(1, 0, 2, 3))) <= 1e-9


def test_lowered_curvature_skew_with_torsion():
    T = np.zeros((3, 3, 3), dtype=object)
    T[:] = "0"
    T[0, 1, 2], T[0, 2, 1] = "x1*x2", "-x1*x2"
    T[2, 0, 1], T[2, 1, 0] = "sin(x3)", "-sin(x3)"
    mfd = ChartManifold.from_sources("t", 3, LUMPY.box, LUMPY.metric.sources(), torsion=T)
    x = np.array([0.5, -0.4, 0.3])
    R = curvature(mfd, x)
    Rl = lower_curvature(R, mfd.metric.value(x))
    assert np.max(np.abs(Rl + Rl.transpose(1, 0, 2, 3))) <= 1e-9
    assert bianchi_residual(R) > 1e-3  # torsion spoils the first Bianchi identity


# --------------------------------------------------- torsion decomposition


def test_decompose_skew_torsion():
    parts = torsion_decompose(eps_torsion(), np.eye(3))
    assert np.max(np.abs(parts.a_part)) <= 1e-15
    assert np.max(np.abs(parts.vectorial)) <= 1e-15


def test_decompose_vectorial_torsion_recovers_vector():
    g = np.diag([1.0, 2.0, 0.5])
    V = np.array([1.0, 0.0, 0.0])
    parts = torsion_decompose(vectorial_torsion(V, g), g)
    assert np.max(np.abs(parts.skew3)) <= 1e-15
    assert np.max(np.abs(parts.a_part)) <= 1e-15
    np.testing.assert_allclose(parts.vector, V, atol=1e-15)


def random_metric(rng, m):
    L = rng.normal(size=(m, m))
    return L @ L.T + m * np.eye(m)


def random_torsion(rng, m):
    T = rng.normal(size=(m, m, m))
    return T - T.transpose(0, 2, 1)


def test_decompose_random_parts_orthogonal_and_idempotent(rng):
    for _ in range(20):
        g = random_metric(rng, 4)
        T = random_torsion(rng, 4)
        p = torsion_decompose(T, g)
        Tl = np.einsum("kl,lij->ijk", g, T)
        assert np.max(np.abs(p.a_part + p.skew3 + p.vectorial - Tl)) <= 1e-12
        parts = (p.a_part, p.skew3, p.vectorial)
        for i in range(3):
            for j in range(i + 1, 3):
                assert abs(tensor_inner(parts[i], parts[j], g)) <= 1e-10
        for k, P in enumerate(parts):
            again = torsion_decompose(raise_torsion(P, g), g)
            reproj = (again.a_part, again.skew3, again.vectorial)
            for j, Q in enumerate(reproj):
                expected = P if j == k else 0.0
                assert np.max(np.abs(Q - expected)) <= 1e-12


def test_decompose_rejects_non_antisymmetric():
    with pytest.raises(ManifoldError):
        torsion_decompose(np.ones((3, 3, 3)), np.eye(3))


# ------------------------------------------------------- complex types


def test_type_of_zero_torsion():
    t = torsion_J_type(np.zeros((4, 4, 4)), J4, np.eye(4))
    assert t.mixed == 0.0 and t.skew3 == 0.0 and t.admissible()


def test_type30_torsion_is_pure(rng):
    c = rng.normal(size=(4, 4, 4)) + 1j * rng.normal(size=(4, 4, 4))
    T = type30_torsion(c, J4, np.eye(4))
    assert np.max(np.abs(T + T.transpose(0, 2, 1))) <= 1e-14
    t = torsion_J_type(T, J4, np.eye(4))
    assert t.mixed <= 1e-10
    assert t.pure > 1e-2
    # a type (3,0) 3-tensor on C^2 has no totally skew part
    assert t.skew3 <= 1e-10
    assert t.admissible()


def test_skew_torsion_fails_type_predicate():
    T = np.zeros((4, 4, 4))
    T[:3, :3, :3] = eps_torsion()
    t = torsion_J_type(T, J4, np.eye(4))
    assert t.skew3 > 0.1
    assert not t.admissible()


def test_type_rejects_invalid_structure():
    with pytest.raises(ManifoldError):
        torsion_J_type(np.zeros((4, 4, 4)), np.eye(4), np.eye(4))


def test_holo_blocks_flat():
    blocks = curvature_holo_components(np.zeros((4, 4, 4, 4)), J4)
    assert max(blocks.values()) == 0.0


def test_holo_blocks_sphere_degenerate(rng):
    J = [["0", "-sin(x1)"], ["1/sin(x1)", "0"]]
    mfd = S2.with_acs(ExprField.from_sources(J, (2, 2), 2))
    for x in mfd.sample_points(rng, 5):
        R = curvature(mfd, x)
        b = curvature_holo_components(R, mfd.acs.value(x))
        assert b["R(u,v)w"] <= 1e-12 and b["R(u,v)wbar"] <= 1e-12
        assert np.max(np.abs(R)) > 0.1


S2xS2 = ChartManifold.from_sources(
    "s2xs2",
    4,
    [[0.3, 2.8], [-3, 3], [0.3, 2.8], [-3, 3]],
    [["1", "0", "0", "0"], ["0", "sin(x1)^2", "0", "0"], ["0", "0", "1", "0"], ["0", "0", "0", "sin(x3)^2"]],
    acs=[
        ["0", "-sin(x1)", "0", "0"],
        ["1/sin(x1)", "0", "0", "0"],
        ["0", "0", "0", "-sin(x3)"],
        ["0", "0", "1/sin(x3)", "0"],
    ],
)


def curved_hermitian():
    """Flat R^4, D = d + x1 dx3 (x) J: Hermitian with curvature dx1^dx3 (x) J."""
    T = np.empty((4, 4, 4), dtype=object)
    for k in range(4):
        for i in range(4):
            for j in range(4):
                a = J4[k, j] * (i == 2) - J4[k, i] * (j == 2)
                T[k, i, j] = f"{a}*x1" if a else "0"
    return flat(4, torsion=T, acs=src(J4))


def test_holo_blocks_kahler_product_vanish(rng):
    # Kahler curvature is of type (1,1): R(u, v) = 0 on T'M
    for x in S2xS2.sample_points(rng, 5):
        b = curvature_holo_components(curvature(S2xS2, x), S2xS2.acs.value(x))
        assert b["R(u,v)wbar"] <= 1e-12 and b["R(u,v)w"] <= 1e-12
        assert b["R(u,vbar)w"] > 1e-3


def test_holo_blocks_detect_20_curvature():
    mfd = curved_hermitian()
    x = np.array([0.3, 0.2, -0.4, 0.5])
    assert hermitian_residual(mfd, x) <= 1e-14
    b = curvature_holo_components(curvature(mfd, x), J4)
    assert b["R(u,v)wbar"] == pytest.approx(0.125, abs=1e-12)
    assert b["R(u,v)w"] == pytest.approx(0.125, abs=1e-12)


def test_hermitianized_connection_parallelises_J():
    T = np.zeros((4, 4, 4))
    T[:3, :3, :3] = eps_torsion(0.3)
    mfd = ChartManifold.from_sources(
        "h", 4, [[-1, 1]] * 4, src(np.eye(4)), torsion=src(T), acs=src(J4), connection="hermitianized"
    )
    x = np.array([0.1, 0.2, 0.3, 0.4])
    assert hermitian_residual(mfd, x) <= 1e-9
    assert hermitian_residual(mfd.with_connection("torsioned"), x) > 1e-3
    assert metric_connection(mfd, x).is_hermitian


def test_validate_reports_point():
    bad = flat(2, acs=[["0", "-2"], ["1", "0"]])
    with pytest.raises(ManifoldError) as err:
        bad.validate(np.array([[0.25, -0.5]]))
    assert err.value.point is not None
    np.testing.assert_array_equal(err.value.point, [0.25, -0.5])
