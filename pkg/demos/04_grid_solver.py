"""Recover Scherk's surface from its boundary values with the Newton solver.

Run:  python3 demos/04_grid_solver.py
"""

import numpy as np

from sigmaflat import Domain, solve_minimal
from sigmaflat.conformal import ConformalField, sigma_residual
from sigmaflat.pipeline import GRID_EVAL_MARGIN
from sigmaflat.surfaces import EUCLIDEAN


def scherk(X, Y):
    return np.log(np.cos(Y)) - np.log(np.cos(X))


print("   h      Newton  max error   order   sigma residual on nodes")
prev = None
for n in (11, 21, 41, 81):
    sol = solve_minimal(EUCLIDEAN, Domain(0.1, 0.5, 0.1, 0.5), scherk, n)
    f = sol.phi
    X, Y = np.meshgrid(f.x0 + f.hx * np.arange(f.nx), f.y0 + f.hy * np.arange(f.ny), indexing="ij")
    err = np.max(np.abs(f.values - scherk(X, Y)))
    order = "" if prev is None else f"{np.log2(prev / err):.2f}"
    prev = err
    _, _, jet = sol.grid_points(GRID_EVAL_MARGIN)
    sig = np.max(np.abs(sigma_residual(ConformalField(jet, EUCLIDEAN))[0])) if jet.v.size else float("nan")
    print(f"{f.hx:.3f}  {sol.params['info'].iterations:6d}  {err:.2e}  {order:>6s}   {sig:.1e}")
