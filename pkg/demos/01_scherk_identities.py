"""Scherk's surface, its conformal metric and the identities that hold on it.

Run:  python3 demos/01_scherk_identities.py
"""

import numpy as np

from sigmaflat import ConformalField, Constants, catalog_surface, harmonic_residuals
from sigmaflat.conformal import conformal_curvature, prop1_residual, sigma_residual
from sigmaflat.expr import jet_eval
from sigmaflat.surfaces import EUCLIDEAN, minimal_residual

surface = catalog_surface("scherk")
x, y = surface.sample(500, seed=0)
print(f"{surface.name}: phi = {surface.phi.source}, {x.size} quasi-random points")

# The graph satisfies the minimal-surface equation to round-off.
print(f"minimal-surface residual      {np.max(np.abs(minimal_residual(surface.jet(x, y), EUCLIDEAN))):.2e}")

# g = h / sqrt(rho) has constant determinant; its scalar curvature obeys a trace identity.
field = ConformalField.from_surface(surface, x, y)
print(f"det g range                   [{field.metric().detG.min():.15f}, {field.metric().detG.max():.15f}]")
R = conformal_curvature(field).R
print(f"scalar curvature R            [{R.min():.3f}, {R.max():.3f}]")
print(f"R + trace term                {np.max(np.abs(prop1_residual(field))):.2e}")

# g solves the sigma-model equation, and a family of scalars built from it is harmonic.
print(f"sigma-model residual          {np.max(np.abs(sigma_residual(field)[0])):.2e}")
consts = Constants(a0=1.7, a1=0.6, a2=-1.3, b1=0.8, b2=0.45, e0=0.3, m1=0.7, m2=-0.7)
for entry in harmonic_residuals(field, consts, tolerance=1e-9):
    print(f"  {entry.label:13s} {entry.max:.2e}   {entry.tag}")

# The same checks on a graph that is not minimal.
bad = ConformalField(jet_eval("x**2 + y**2", np.array([0.3]), np.array([-0.2])), EUCLIDEAN)
print(f"non-minimal x^2 + y^2: sigma residual {np.max(np.abs(sigma_residual(bad)[0])):.2f}, "
      f"trace identity {abs(prop1_residual(bad)[0]):.2f}")
