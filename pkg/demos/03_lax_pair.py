"""The conformal metric of a minimal surface admits a Lax pair with a spectral parameter.

Run:  python3 demos/03_lax_pair.py
"""

import math

import numpy as np

from sigmaflat import ConformalField, catalog_surface, lax_matrices, square_loop, transport_wavefunction
from sigmaflat import zero_curvature_residual
from sigmaflat.expr import ScalarExpr
from sigmaflat.surfaces import EUCLIDEAN, Domain, SurfaceSolution

scherk = catalog_surface("scherk")
p = (math.pi / 6, math.pi / 6)
lp = lax_matrices(ConformalField.from_surface(scherk, np.array([p[0]]), np.array([p[1]])), 1.0)
print("U at (pi/6, pi/6), k = 1:\n", np.round(lp.U[0], 4))
print("V at (pi/6, pi/6), k = 1:\n", np.round(lp.V[0], 4))

field = ConformalField.from_surface(scherk, *scherk.sample(300, seed=2))
for k in (-2, -1, -0.5, 0.5, 1, 2):
    print(f"k = {k:+.1f}: zero-curvature residual {np.max(np.abs(zero_curvature_residual(field, k))):.1e}")

# Transporting the identity around a closed loop returns the identity: the system is compatible.
loop = square_loop(p, 0.2)
print("\nsteps   holonomy defect")
for steps in (8, 16, 32, 64, 128, 4000):
    print(f"{steps:5d}   {transport_wavefunction(scherk, 1.0, loop, steps):.2e}")

bowl = SurfaceSolution(ScalarExpr("x**2 + y**2"), EUCLIDEAN, Domain(-1.2, 1.2, -1.2, 1.2))
print(f"\nnon-minimal x^2 + y^2: defect {transport_wavefunction(bowl, 1.0, loop, 4000):.2e}")
