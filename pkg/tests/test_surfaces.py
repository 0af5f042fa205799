import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from sigmaflat.curvature import ricci_of_jet
from sigmaflat.errors import DegeneratePoint, UnknownSurface
from sigmaflat.expr import ScalarExpr, jet_eval, taylor
from sigmaflat.jets import Jet, stack
from sigmaflat.surfaces import (
    CATALOG,
    EUCLIDEAN,
    AmbientMetric,
    Domain,
    SurfaceSolution,
    catalog_surface,
    id1_residual,
    induced_h,
    minimal_residual,
    surface_curvature,
)

SCHERK = "log(cos(y)) - log(cos(x))"
P6 = (math.pi / 6, math.pi / 6)


def test_minimal_residual_examples():
    assert minimal_residual(jet_eval("x + 2*y", 0.3, -0.4), EUCLIDEAN) == 0.0
    assert abs(minimal_residual(jet_eval(SCHERK, *P6), EUCLIDEAN)) < 1e-14
    j = jet_eval("(x + y)**3", np.linspace(-1, 1, 7), np.linspace(2, 0, 7))
    assert_allclose(minimal_residual(j, AmbientMetric(1, 0, -1, 1)), 0.0, atol=1e-12)


def test_catalog_surfaces_are_minimal(minimal_surface):
    x, y = minimal_surface.sample(1000, seed=3)
    assert x.size == 1000
    assert np.all(minimal_surface.domain.contains(x, y))
    res = minimal_residual(minimal_surface.jet(x, y), minimal_surface.ambient)
    assert np.max(np.abs(res)) < 1e-11


def test_helicoid_sample_avoids_axis():
    s = catalog_surface("helicoid")
    x, _ = s.sample(300, seed=1)
    assert np.min(np.abs(x)) > 0.1


def test_sample_is_deterministic():
    s = catalog_surface("scherk")
    assert_allclose(s.sample(50, seed=7), s.sample(50, seed=7))


def test_unknown_surface():
    with pytest.raises(UnknownSurface):
        catalog_surface("catenoid")
    assert set(CATALOG) == {"plane", "scherk", "helicoid", "null_wave"}


def shape_operator_gaussian(j):
    """Classical Gaussian curvature det(II)/det(I) of a Euclidean graph."""
    px, py = j.d1[..., 0], j.d1[..., 1]
    W = np.sqrt(1 + px**2 + py**2)
    first = np.stack([np.stack([1 + px**2, px * py], -1), np.stack([px * py, 1 + py**2], -1)], -2)
    second = j.d2 / np.asarray(W)[..., None, None]  # upward unit normal (-phi_x, -phi_y, 1)/W
    return np.linalg.det(second) / np.linalg.det(first)


def test_scherk_curvature_at_reference_point():
    j = jet_eval(SCHERK, *P6)
    c = surface_curvature(j, EUCLIDEAN)
    # phi_xx = -sec^2 x = -4/3, phi_yy = +4/3 (with the sign of the y-term), rho = 5/3
    assert c.rho == pytest.approx(5 / 3)
    assert abs(c.H) < 1e-14
    gauss = shape_operator_gaussian(j)
    assert gauss == pytest.approx(-16 / 25)
    assert c.K == pytest.approx(2 * gauss) == pytest.approx(-32 / 25)


@pytest.mark.parametrize("src", [SCHERK, "arctan(y/x)", "x**2 - 0.3*x*y + y**3", "sin(x)*cos(2*y)"])
def test_K_is_scalar_curvature_of_induced_metric(src):
    x, y = np.array([0.4, 0.7, -0.5]), np.array([0.3, -0.2, 0.6])
    j = jet_eval(src, x, y)
    c = surface_curvature(j, EUCLIDEAN)
    assert_allclose(c.K, 2 * shape_operator_gaussian(j), rtol=1e-12, atol=1e-12)
    # independent path: Christoffel/Ricci engine applied to h as a jet
    X, Y = Jet.coordinates(x, y)
    phi = ScalarExpr(src)(x=X, y=Y)
    px, py = phi.diff(0), phi.diff(1)
    h = [[1 + px * px, px * py], [px * py, 1 + py * py]]
    H = stack([stack(row, axis=-1) for row in h], axis=-2)
    assert_allclose(ricci_of_jet(H).Rscalar, c.K, rtol=1e-10, atol=1e-10)


def test_plane_and_zero_are_flat():
    for src in ("x + 2*y", "0*x"):
        c = surface_curvature(jet_eval(src, 0.1, 0.2), EUCLIDEAN)
        assert c.K == 0 and c.H == 0 and c.lambda0 == 0
        assert_allclose(c.r, 0)
    assert surface_curvature(jet_eval("0*x", 0.1, 0.2), EUCLIDEAN).rho == 1


def test_degenerate_rho():
    # eps = -1 with |grad phi| = 1 makes rho vanish
    with pytest.raises(DegeneratePoint):
        surface_curvature(jet_eval("x", 0.0, 0.0), AmbientMetric(eps=-1))


def test_ambient_must_be_invertible():
    with pytest.raises(ValueError):
        AmbientMetric(1.0, 1.0, 1.0, 1)
    with pytest.raises(ValueError):
        AmbientMetric(eps=2)


coef = st.floats(-1.5, 1.5, allow_nan=False)


@st.composite
def poly_and_ambient(draw):
    cs = draw(st.lists(coef, min_size=10, max_size=10))
    k1, k0, k2 = draw(coef), draw(coef), draw(coef)
    if abs(k1 * k2 - k0**2) < 0.1:
        k1, k2 = k1 + 1.0, k2 + 1.2
    if abs(k1 * k2 - k0**2) < 0.1:
        k0 = 0.0
    eps = draw(st.sampled_from([1, -1]))
    x, y = draw(coef), draw(coef)
    return cs, AmbientMetric(k1, k0, k2, eps), x, y


def cubic_jet(cs, x, y):
    terms = ["1", "x", "y", "x**2", "x*y", "y**2", "x**3", "x**2*y", "x*y**2", "y**3"]
    src = " + ".join(f"({c!r})*{t}" for c, t in zip(cs, terms))
    return jet_eval(src, x, y)


@settings(max_examples=100, deadline=None)
@given(poly_and_ambient())
def test_id1_vanishes_for_any_phi(data):
    cs, amb, x, y = data
    j = cubic_jet(cs, x, y)
    scale = 1 + np.max(np.abs(j.d2)) ** 2 * (1 + np.max(np.abs(amb.g0)) ** 2)
    assert np.max(np.abs(id1_residual(j, amb))) < 1e-12 * scale


@settings(max_examples=100, deadline=None)
@given(poly_and_ambient())
def test_curvature_identities_for_any_phi(data):
    cs, amb, x, y = data
    j = cubic_jet(cs, x, y)
    rho = 1 + amb.eps * j.d1 @ amb.g0inv @ j.d1
    if abs(rho) < 1e-2:
        return
    c = surface_curvature(j, amb)
    scale = (1 + np.max(np.abs(j.d2)) ** 2) * (1 + abs(rho) ** -3) * (1 + np.max(np.abs(amb.g0inv))) ** 4
    h = induced_h(j, amb)
    assert np.max(np.abs(c.r - 0.5 * c.K * h)) < 1e-10 * scale * (1 + np.max(np.abs(h)))
    assert abs(c.lambda0 + 0.5 * amb.eps * rho**2 * c.K) < 1e-10 * scale * (1 + rho**2)


def test_grid_surface_evaluates_at_nodes_only():
    from sigmaflat.grid import GridField

    g = GridField.sample(lambda X, Y: X * Y, 0.0, 0.0, 0.1, 0.1, 11, 11)
    s = SurfaceSolution(g, EUCLIDEAN, Domain(0, 1, 0, 1))
    j = s.jet(np.array([0.5]), np.array([0.4]))
    assert j.d2[0, 0, 1] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        s.jet(np.array([0.55]), np.array([0.4]))
    x, y, jj = s.grid_points()
    assert x.size == 25


def test_taylor_of_constant_expression_has_right_shape():
    j = taylor(ScalarExpr("2 + 0*x"), np.zeros(3), np.zeros(3))
    assert j.shape == (3,)
