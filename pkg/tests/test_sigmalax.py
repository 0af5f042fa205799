import math

import numpy as np
import pytest
import sympy as sp
from numpy.testing import assert_allclose
from scipy.stats import spearmanr

import oracles
from sigmaflat.conformal import ConformalField, sigma_residual
from sigmaflat.errors import MaskedPath, SingularSigma, SpectralPole
from sigmaflat.expr import ScalarExpr, jet_eval
from sigmaflat.sigmalax import (
    GeneralSigmaConfig,
    conformal_sigma_config,
    expression_matrix,
    general_sigma_residual,
    lambda_conditions,
    lax_matrices,
    square_loop,
    transport,
    transport_wavefunction,
    zero_curvature_residual,
)
from sigmaflat.surfaces import EUCLIDEAN, Domain, SurfaceSolution, catalog_surface, minimal_residual

P6 = (math.pi / 6, math.pi / 6)
SCHERK = "log(cos(y)) - log(cos(x))"
NONMINIMAL = "x**2 + y**2"
KS = (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0)
IDENTITY = expression_matrix([["1", "0"], ["0", "1"]])


def surface_of(src, domain=Domain(-1.2, 1.2, -1.2, 1.2)):
    return SurfaceSolution(ScalarExpr(src), EUCLIDEAN, domain, name="expr")


def field(src, x, y):
    return ConformalField(jet_eval(src, np.atleast_1d(x), np.atleast_1d(y)), EUCLIDEAN)


def test_constant_P_has_zero_residual():
    cfg = GeneralSigmaConfig(expression_matrix([["2", "0.5"], ["0.5", "3"]]),
                             expression_matrix([["x", "y"], ["1", "x*y+2"]]))
    r = general_sigma_residual(cfg, np.array([0.3, -0.4]), np.array([0.1, 0.7]))
    assert np.max(np.abs(r)) == 0.0


def test_general_evaluator_matches_conformal_path(minimal_surface):
    x, y = minimal_surface.sample(100, seed=6)
    gen = general_sigma_residual(conformal_sigma_config(minimal_surface), x, y)
    direct, _ = sigma_residual(ConformalField.from_surface(minimal_surface, x, y))
    assert np.max(np.abs(gen)) < 1e-10
    assert np.max(np.abs(gen - direct)) < 1e-12


def test_identity_lambda_is_a_control(scherk):
    cfg = GeneralSigmaConfig(conformal_sigma_config(scherk).P, IDENTITY)
    r = general_sigma_residual(cfg, np.array([P6[0]]), np.array([P6[1]]))
    assert np.max(np.abs(r)) > 1e-3


def test_lambda_conditions():
    x, y = np.array([0.3, -0.1]), np.array([-0.2, 0.5])
    c1, c2 = lambda_conditions(GeneralSigmaConfig(IDENTITY, expression_matrix([["2", "1"], ["-1", "3"]])), x, y)
    assert np.max(np.abs(c1)) == 0.0 and np.max(np.abs(c2)) == 0.0
    # sigma = e^{2x}: first condition is d_x(e^{-x} d_x e^{2x}) = 2 e^x
    c1, c2 = lambda_conditions(GeneralSigmaConfig(IDENTITY, expression_matrix([["exp(x)", "0"], ["0", "exp(x)"]])), x, y)
    assert_allclose(c1, 2 * np.exp(x), rtol=1e-13)
    assert_allclose(c2, 0.0, atol=0)


def test_lambda_conditions_hold_for_inverse_conformal_metric(minimal_surface):
    x, y = minimal_surface.sample(100, seed=9)
    c1, c2 = lambda_conditions(conformal_sigma_config(minimal_surface), x, y)
    assert np.max(np.abs(c1)) < 1e-10 and np.max(np.abs(c2)) < 1e-10


def test_lambda_conditions_singular():
    with pytest.raises(SingularSigma):
        lambda_conditions(GeneralSigmaConfig(IDENTITY, expression_matrix([["x", "0"], ["0", "1"]])),
                          np.array([0.0]), np.array([0.0]))


def test_lax_matrices_vanish_for_constant_metric():
    lp = lax_matrices(field("0.5*x - y", 0.2, 0.3), 0.7)
    assert np.max(np.abs(lp.U)) == 0.0 and np.max(np.abs(lp.V)) == 0.0
    assert np.max(np.abs(zero_curvature_residual(field("0.5*x - y", 0.2, 0.3), 0.7))) == 0.0


@pytest.mark.parametrize("k", [1.0, -0.5, 2.0])
def test_lax_matrices_match_symbolic_oracle(k):
    X, Y = oracles.x, oracles.y
    U_ref, V_ref = oracles.lax_matrices(sp.log(sp.cos(Y)) - sp.log(sp.cos(X)), k, P6)
    lp = lax_matrices(field(SCHERK, *P6), k)
    assert_allclose(lp.U[0], np.array(U_ref, float), rtol=1e-12, atol=1e-14)
    assert_allclose(lp.V[0], np.array(V_ref, float), rtol=1e-12, atol=1e-14)
    assert lp.sigma[0] == 1.0


def test_lax_fixture_values_at_scherk_point():
    lp = lax_matrices(field(SCHERK, *P6), 1.0)
    assert_allclose(lp.U[0], [[-0.0694, 0.5464], [0.5117, 0.0694]], atol=1e-4)
    assert_allclose(lp.V[0], [[0.5464, -0.2038], [0.0694, -0.5464]], atol=1e-4)


def test_spectral_pole_on_null_wave():
    s = catalog_surface("null_wave")
    f = ConformalField.from_surface(s, *s.sample(5))
    for k in (1.0, -1.0):
        with pytest.raises(SpectralPole):
            lax_matrices(f, k)
    assert np.max(np.abs(zero_curvature_residual(f, 2.0))) < 1e-9


@pytest.mark.parametrize("name", ["plane", "scherk", "helicoid"])
def test_spectral_sweep_on_riemannian_surfaces(name):
    s = catalog_surface(name)
    f = ConformalField.from_surface(s, *s.sample(100, seed=4))
    assert np.all(lax_matrices(f, 1.0).sigma == 1.0)
    for k in KS:
        assert np.max(np.abs(zero_curvature_residual(f, k))) < 1e-9, k


def fd_zero_curvature(src, k, px, py, h=1e-4):
    def uv(x, y):
        lp = lax_matrices(field(src, x, y), k)
        return lp.U[0], lp.V[0]

    dU_dy = (uv(px, py + h)[0] - uv(px, py - h)[0]) / (2 * h)
    dV_dx = (uv(px + h, py)[1] - uv(px - h, py)[1]) / (2 * h)
    U, V = uv(px, py)
    return dU_dy - dV_dx + U @ V - V @ U


@pytest.mark.parametrize("src,p", [(SCHERK, P6), (SCHERK, (0.4, -0.7)), (NONMINIMAL, (0.3, 0.2))])
def test_zero_curvature_matches_finite_differences(src, p):
    jet = zero_curvature_residual(field(src, *p), 1.0)[0]
    assert_allclose(jet, fd_zero_curvature(src, 1.0, *p), atol=1e-6)


def test_zero_curvature_fails_off_shell():
    assert np.max(np.abs(zero_curvature_residual(field(NONMINIMAL, 0.3, 0.2), 1.0))) > 1e-3


def test_holonomy_of_constant_metric():
    s = surface_of("0.3*x + 0.1*y")
    assert transport_wavefunction(s, 1.0, square_loop((0.1, 0.2), 0.5), 10) < 1e-15


def test_holonomy_on_scherk(scherk):
    loop = square_loop(P6, 0.2)
    assert transport_wavefunction(scherk, 1.0, loop, 4000) < 1e-7
    psi = transport(scherk, 1.0, loop, 4000)
    assert abs(np.linalg.det(psi)) > 0.5


def test_holonomy_convergence_is_fourth_order(scherk):
    loop = square_loop(P6, 0.2)
    steps = np.array([8, 16, 32, 64, 128])
    d = np.array([transport_wavefunction(scherk, 1.0, loop, int(n)) for n in steps])
    slope = np.polyfit(np.log(steps), np.log(d), 1)[0]
    assert abs(slope + 4) <= 0.5, (slope, d)


def test_holonomy_off_shell():
    assert transport_wavefunction(surface_of(NONMINIMAL), 1.0, square_loop(P6, 0.2), 4000) > 1e-4


def test_masked_path():
    hel = catalog_surface("helicoid")
    with pytest.raises(MaskedPath):
        transport_wavefunction(hel, 1.0, square_loop((0.0, 0.5), 0.4), 400)
    with pytest.raises(MaskedPath):
        transport_wavefunction(catalog_surface("scherk"), 1.0, square_loop((1.2, 0.0), 0.4), 400)


HOMOTOPY_T = (0.0, 0.25, 0.5, 0.75, 1.0)


def homotopy(plane="x + 2*y"):
    s = catalog_surface("scherk")
    x, y = s.sample(100, seed=12)
    zc, mr = [], []
    for t in HOMOTOPY_T:
        src = f"{t!r}*({SCHERK}) + {1 - t!r}*({plane})"
        j = jet_eval(src, x, y)
        mr.append(np.max(np.abs(minimal_residual(j, EUCLIDEAN))))
        zc.append(np.max(np.abs(zero_curvature_residual(ConformalField(j, EUCLIDEAN), 1.0))))
    return np.array(zc), np.array(mr)


def test_homotopy_vanishes_at_end_points_only():
    zc, mr = homotopy()
    assert zc[0] <= 1e-9 and zc[-1] <= 1e-9
    assert np.all(zc[1:-1] > 1e-3) and np.all(mr[1:-1] > 1e-3)


@pytest.mark.xfail(strict=True, reason="max residuals are not rank-ordered along this homotopy; see README")
def test_homotopy_rank_correlation():
    zc, mr = homotopy()
    assert spearmanr(zc, mr).statistic > 0.9
