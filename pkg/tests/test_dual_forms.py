import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tmgeom import dual as du
from tmgeom.forms import (
    AltForm,
    antisymmetrize,
    evaluate,
    exterior_derivative,
    hodge_star2,
    wedge,
    wedge22,
)

FLOATS = st.floats(-2, 2, allow_nan=False)


def skew(a):
    return a - a.T


@given(arrays(float, (3, 3), elements=FLOATS), arrays(float, (3,), elements=FLOATS))
def test_einsum_leibniz_against_fd(A, x0):
    # f(x) = M(x) M(x) x with M(x) = A + diag(x): derivative of a product
    def f(x):
        M = A + np.diag(x)
        return M @ M @ x

    x = du.variable(x0)
    M = du.const(A, 3) + du.einsum("i,ij->ij", x, np.eye(3))
    y = du.einsum("ij,jk,k->i", M, M, x)
    h = 1e-6
    fd = np.column_stack([(f(x0 + h * e) - f(x0 - h * e)) / (2 * h) for e in np.eye(3)])
    scale = 1 + np.max(np.abs(fd))
    assert np.max(np.abs(y.der - fd)) <= 1e-6 * scale


def test_inverse_derivative():
    x0 = np.array([0.3, -0.2])
    x = du.variable(x0)
    M = du.einsum("i,ij->ij", x, np.eye(2)) + du.const(np.array([[2.0, 0.5], [0.1, 3.0]]), 2)
    Mi = du.inv(M)
    prod = du.einsum("ij,jk->ik", M, Mi)
    np.testing.assert_allclose(prod.val, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(prod.der, 0.0, atol=1e-14)


def test_concat_and_pad():
    a = du.variable([1.0, 2.0])
    c = du.concat([a, np.array([5.0])])
    np.testing.assert_array_equal(c.val, [1.0, 2.0, 5.0])
    np.testing.assert_array_equal(c.der, [[1, 0], [0, 1], [0, 0]])
    assert a.pad(0, 3).der.shape == (2, 5)


def test_wedge_of_one_forms_is_determinant():
    a, b = np.array([1.0, 2.0, 0.0]), np.array([0.0, 1.0, 3.0])
    w = wedge(a, b)
    X, Y = np.array([1.0, 0.0, 1.0]), np.array([0.0, 2.0, 1.0])
    assert evaluate(w, X, Y) == pytest.approx((a @ X) * (b @ Y) - (a @ Y) * (b @ X))


@given(arrays(float, (5, 5), elements=FLOATS), arrays(float, (5, 5), elements=FLOATS))
def test_wedge22_matches_shuffle_wedge(p, q):
    w, u = skew(p), skew(q)
    np.testing.assert_allclose(wedge22(w, u), wedge(w, u), atol=1e-12)


def test_wedge_determinant_convention():
    rng = np.random.default_rng(1)
    w = skew(rng.normal(size=(4, 4)))
    ww = wedge22(w)
    a, b, c, d = range(4)
    expected = 2 * (w[a, b] * w[c, d] - w[a, c] * w[b, d] + w[a, d] * w[b, c])
    assert ww[a, b, c, d] == pytest.approx(expected, abs=1e-14)


def test_wedge_is_alternating():
    rng = np.random.default_rng(2)
    w = wedge(skew(rng.normal(size=(5, 5))), rng.normal(size=5))
    assert AltForm(w).antisymmetry_defect() < 1e-13
    assert AltForm(w).degree == 3


def test_exterior_derivative_squares_to_zero():
    # alpha = x1 x2 dx3 on R^3 carried with exact first and second derivatives
    # d alpha = x2 dx1^dx3 + x1 dx2^dx3
    x0 = np.array([0.4, -0.7, 1.3])
    alpha = du.Dual(np.array([0.0, 0.0, x0[0] * x0[1]]), np.array([[0, 0, 0], [0, 0, 0], [x0[1], x0[0], 0.0]]))
    da = exterior_derivative(alpha)
    assert da[0, 2] == pytest.approx(x0[1])
    assert da[1, 2] == pytest.approx(x0[0])
    assert AltForm(da).antisymmetry_defect() < 1e-15
    # d of a closed constant-coefficient 2-form vanishes
    w = du.const(skew(np.arange(9.0).reshape(3, 3)), 3)
    assert np.max(np.abs(exterior_derivative(w))) == 0.0


def test_antisymmetrize_is_projection():
    rng = np.random.default_rng(3)
    t = rng.normal(size=(3, 3, 3))
    a = antisymmetrize(t)
    np.testing.assert_allclose(antisymmetrize(a), a, atol=1e-15)
    for p in itertools.permutations(range(3)):
        assert np.allclose(np.transpose(a, p), a) or np.allclose(np.transpose(a, p), -a)


def test_hodge_star_is_involution_on_two_forms():
    rng = np.random.default_rng(4)
    L = rng.normal(size=(4, 4))
    g = L @ L.T + 4 * np.eye(4)
    w = skew(rng.normal(size=(4, 4)))
    np.testing.assert_allclose(hodge_star2(hodge_star2(w, g), g), w, atol=1e-12)


def test_altform_components_and_call():
    w = np.zeros((3, 3))
    w[0, 1], w[1, 0] = 2.0, -2.0
    f = AltForm(w)
    assert f.components() == {(0, 1): 2.0, (0, 2): 0.0, (1, 2): 0.0}
    assert f([1, 0, 0], [0, 1, 0]) == 2.0
    with pytest.raises(ValueError):
        f([1, 0, 0])
