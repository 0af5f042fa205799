import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from sigmaflat import jets
from sigmaflat.jets import Jet, Jet3, monomials

coef = st.floats(-2.0, 2.0, allow_nan=False)


def random_jet(rng, shape=(), order=3):
    return Jet(rng.normal(size=shape + (len(monomials(order)),)), order)


def poly_jet(cs, order=3):
    """Jet of the polynomial sum c_k x^i y^j about (0, 0)."""
    return Jet(np.asarray(cs, float), order)


def test_monomials_are_graded():
    assert monomials(2) == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))
    assert len(monomials(3)) == 10


def test_coordinates_and_products():
    X, Y = Jet.coordinates(0.5, -1.0)
    f = X * X * Y  # x^2 y
    # derivatives at (0.5, -1): f_x = 2xy, f_xy = 2x, f_xxy = 2
    assert f.value == pytest.approx(-0.25)
    assert f.partial(1, 0) == pytest.approx(-1.0)
    assert f.partial(1, 1) == pytest.approx(1.0)
    assert f.partial(2, 1) == pytest.approx(2.0)
    assert f.partial(0, 2) == pytest.approx(0.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(coef, min_size=10, max_size=10), st.lists(coef, min_size=10, max_size=10), st.integers(0, 1))
def test_leibniz_rule(a, b, axis):
    f, g = poly_jet(a), poly_jet(b)
    lhs = (f * g).diff(axis)
    rhs = f.diff(axis) * g.truncate(2) + f.truncate(2) * g.diff(axis)
    assert_allclose(lhs.coeffs, rhs.coeffs, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(coef, min_size=10, max_size=10))
def test_exp_log_inverse(a):
    f = poly_jet(a)
    assert_allclose(jets.log(jets.exp(f)).coeffs, f.coeffs, atol=1e-10)


def test_elementary_functions_against_closed_forms():
    x0, y0 = 0.3, 0.7
    X, Y = Jet.coordinates(x0, y0)
    s = jets.sin(X * Y)
    # d/dx sin(xy) = y cos(xy); d2/dxdy = cos(xy) - xy sin(xy)
    assert s.partial(1, 0) == pytest.approx(y0 * np.cos(x0 * y0))
    assert s.partial(1, 1) == pytest.approx(np.cos(x0 * y0) - x0 * y0 * np.sin(x0 * y0))
    t = jets.arctan(Y / X)
    # d/dx arctan(y/x) = -y / (x^2 + y^2)
    assert t.partial(1, 0) == pytest.approx(-y0 / (x0**2 + y0**2))
    r = jets.sqrt(X * X + Y * Y)
    assert r.partial(2, 0) == pytest.approx(y0**2 / (x0**2 + y0**2) ** 1.5)


def test_power_integer_and_fractional():
    X, _ = Jet.coordinates(-2.0, 0.0)
    p = jets.power(X, 3)
    assert p.value == pytest.approx(-8.0)
    assert p.partial(3, 0) == pytest.approx(6.0)
    q = jets.power(X, 0.5)
    assert np.isnan(q.value)
    X2, _ = Jet.coordinates(4.0, 0.0)
    assert jets.power(X2, -0.5).partial(1, 0) == pytest.approx(-0.5 * 4.0**-1.5)


def test_singular_points_become_nan():
    X, Y = Jet.coordinates(np.array([0.0, 1.0]), np.array([0.0, 0.0]))
    r = jets.reciprocal(X)
    assert np.all(np.isnan(r.coeffs[0]))
    assert np.all(np.isfinite(r.coeffs[1]))
    assert not jets.isfinite(jets.log(X))[0]
    c = jets.tan(X + np.pi / 2)
    assert not jets.isfinite(c)[0]


def test_matrix_inverse_is_exact_to_order(rng):
    A = random_jet(rng, (4, 3, 3))
    A.coeffs[..., 0] += 4.0 * np.eye(3)
    Ainv = jets.inv(A)
    eye = jets.matmul(A, Ainv)
    expected = np.zeros(eye.coeffs.shape)
    expected[..., 0] = np.eye(3)
    assert_allclose(eye.coeffs, expected, atol=1e-12)


def test_det2_matches_product_rule(rng):
    A = random_jet(rng, (5, 2, 2))
    d = jets.det2(A)
    direct = A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
    assert_allclose(d.coeffs, direct.coeffs, atol=1e-12)


def test_einsum_matches_numpy_on_values(rng):
    a, b = random_jet(rng, (6, 2, 3)), random_jet(rng, (6, 3, 2))
    c = jets.einsum("ij,jk->ik", a, b)
    assert_allclose(c.value, np.einsum("...ij,...jk->...ik", a.value, b.value), atol=1e-12)
    # derivative of a product obeys the Leibniz rule entrywise
    lhs = c.diff(0)
    rhs = jets.einsum("ij,jk->ik", a.diff(0), b.truncate(2)) + jets.einsum("ij,jk->ik", a.truncate(2), b.diff(0))
    assert_allclose(lhs.coeffs, rhs.coeffs, atol=1e-12)


def test_jet3_round_trip(rng):
    j = random_jet(rng, (7,))
    j3 = Jet3.from_taylor(j)
    assert_allclose(j3.to_taylor().coeffs, j.coeffs, atol=1e-14)
    # derivative tensors are symmetric
    assert_allclose(j3.d2, np.swapaxes(j3.d2, -1, -2))
    assert_allclose(j3.d3, np.transpose(j3.d3, (0, 2, 1, 3)))
    assert_allclose(j3.d3, np.transpose(j3.d3, (0, 1, 3, 2)))


def test_diff_lowers_order_and_truncate_checks():
    X, Y = Jet.coordinates(1.0, 2.0)
    assert (X * Y).diff(0).order == 2
    with pytest.raises(ValueError):
        Jet(np.zeros(5), 2)


def test_extended_precision_is_kept():
    X, Y = Jet.coordinates(np.array([0.3]), np.array([0.2]), 3)
    m = jets.stack([jets.stack([1 + X * X, X * Y], -1), jets.stack([X * Y, 2 + Y], -1)], -2)
    e = jets.extended(m)
    inv = jets.inv(e)
    assert inv.coeffs.dtype == np.longdouble
    assert (inv * 2.0).coeffs.dtype == np.longdouble
    eye = jets.matmul(inv, e)
    assert np.max(np.abs(eye.value - np.eye(2))) < 1e-17
    assert np.max(np.abs(eye.coeffs[..., 1:])) < 1e-17
    assert_allclose(inv.coeffs.astype(float), jets.inv(m).coeffs, rtol=1e-14, atol=1e-15)
