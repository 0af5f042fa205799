import numpy as np
import pytest
from numpy.testing import assert_allclose

from sigmaflat.conformal import ConformalField, sigma_residual
from sigmaflat.errors import DegenerateIterate, NonConvergence
from sigmaflat.pipeline import GRID_BOUND_C, GRID_EVAL_MARGIN
from sigmaflat.solver import SolverOptions, diff_matrix, harmonic_interpolation, solve_minimal
from sigmaflat.surfaces import EUCLIDEAN, AmbientMetric, Domain, catalog_surface, minimal_residual

SQUARE = Domain(0.1, 0.5, 0.1, 0.5)


def scherk(X, Y):
    return np.log(np.cos(Y)) - np.log(np.cos(X))


def nodes(sol):
    f = sol.phi
    X, Y = np.meshgrid(f.x0 + f.hx * np.arange(f.nx), f.y0 + f.hy * np.arange(f.ny), indexing="ij")
    return X, Y


def scherk_error(n, **opts):
    sol = solve_minimal(EUCLIDEAN, SQUARE, scherk, n, opts=SolverOptions(**opts))
    return float(np.max(np.abs(sol.phi.values - scherk(*nodes(sol))))), sol


def test_fourth_order_convergence_on_scherk():
    hs = np.array([0.04, 0.02, 0.01])
    errs = np.array([scherk_error(int(round(0.4 / h)) + 1)[0] for h in hs])
    orders = np.log(errs[:-1] / errs[1:]) / np.log(2)
    fit = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert np.all((orders >= 3.5) & (orders <= 4.5)), orders
    assert 3.5 <= fit <= 4.5


def test_fourth_order_closure_option_converges():
    err, sol = scherk_error(21, closure=4)
    assert err < 1e-7
    assert sol.params["info"].residual < 1e-10


def test_solution_metadata():
    _, sol = scherk_error(11)
    info = sol.params["info"]
    assert sol.is_grid and sol.name == "solved"
    assert info.iterations == len(info.history) - 1
    assert info.history[-1] < 1e-10 < info.history[0]


def test_linear_trace_is_exact_immediately():
    sol = solve_minimal(EUCLIDEAN, Domain(-1, 1, -1, 1), lambda X, Y: 0.7 * X - 1.3 * Y + 0.2, 15)
    assert sol.params["info"].iterations <= 1
    X, Y = nodes(sol)
    assert_allclose(sol.phi.values, 0.7 * X - 1.3 * Y + 0.2, atol=1e-13)


def test_lorentzian_ambient_with_small_gradients():
    amb = AmbientMetric(1.0, 0.2, 1.5, -1)
    trace = lambda X, Y: 0.1 * X * Y + 0.05 * X**2  # noqa: E731
    sol = solve_minimal(amb, Domain(0, 1, 0, 1), trace, 21)
    assert sol.params["info"].residual < 1e-10


def test_non_finite_boundary_is_degenerate():
    with pytest.raises(DegenerateIterate):
        solve_minimal(EUCLIDEAN, Domain(0.5, 1.8, 0.1, 0.5), scherk, 21)


def test_mixed_sign_rho_initial_guess_is_degenerate():
    nw = catalog_surface("null_wave")
    f = lambda X, Y: nw.phi.evaluate(x=X, y=Y)  # noqa: E731
    with pytest.raises(DegenerateIterate):
        solve_minimal(nw.ambient, nw.domain, f, 21)


def test_iteration_cap():
    with pytest.raises(NonConvergence):
        solve_minimal(EUCLIDEAN, SQUARE, scherk, 21, opts=SolverOptions(max_iter=1))


def test_initial_guess_option():
    _, ref = scherk_error(21)
    sol = solve_minimal(EUCLIDEAN, SQUARE, scherk, 21, opts=SolverOptions(initial=ref.phi.values))
    assert sol.params["info"].iterations == 0


def test_grid_validation():
    with pytest.raises(ValueError):
        solve_minimal(EUCLIDEAN, SQUARE, scherk, 5)
    with pytest.raises(ValueError):
        diff_matrix(10, 0.1, 1, closure=3)


@pytest.mark.parametrize("closure", [2, 4])
@pytest.mark.parametrize("deriv", [1, 2])
def test_diff_matrix_exact_on_polynomials(closure, deriv):
    n, h = 12, 0.1
    t = 0.3 + h * np.arange(n)
    D = diff_matrix(n, h, deriv, closure)
    # every row is exact for quadratics; interior rows for quartics
    q = 1 + 2 * t - 3 * t**2
    dq = 2 - 6 * t if deriv == 1 else -6 + 0 * t
    assert_allclose(D @ q, dq, atol=1e-9)
    p = t**4 - t**3
    dp = 4 * t**3 - 3 * t**2 if deriv == 1 else 12 * t**2 - 6 * t
    rows = slice(None) if closure == 4 else slice(2, -2)
    assert_allclose((D @ p)[rows], dp[rows], atol=1e-9)


def test_harmonic_interpolation_reproduces_linear_data():
    X, Y = np.meshgrid(np.linspace(0, 1, 9), np.linspace(0, 2, 11), indexing="ij")
    v = 2 * X - Y + 1
    assert_allclose(harmonic_interpolation(v, 1 / 8, 0.2), v, atol=1e-13)


def test_closure_rows_limit_derivatives_near_the_edge():
    # third derivatives next to the low-order closure converge only at O(h)
    errs = []
    for n in (41, 81):
        sol = solve_minimal(EUCLIDEAN, Domain(0.1, 0.9, 0.1, 0.9), scherk, n)
        _, _, jet = sol.grid_points()
        errs.append(np.max(np.abs(sigma_residual(ConformalField(jet, EUCLIDEAN))[0])))
    assert errs[1] > 0.25 * errs[0]
    assert errs[1] > 0.01**2


def test_grid_mode_residuals_track_closed_form():
    dom = Domain(0.1, 0.9, 0.1, 0.9)
    for n in (21, 41, 81):
        sol = solve_minimal(EUCLIDEAN, dom, scherk, n)
        x, y, jet = sol.grid_points(GRID_EVAL_MARGIN)
        h = sol.phi.hx
        # closed-form values are zero on the exact surface
        assert np.max(np.abs(minimal_residual(jet, EUCLIDEAN))) < GRID_BOUND_C * h**2
        res, _ = sigma_residual(ConformalField(jet, EUCLIDEAN))
        assert np.max(np.abs(res)) < GRID_BOUND_C * h**2
