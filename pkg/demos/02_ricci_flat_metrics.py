"""Block metrics diag(e^{2 Phi} g, eps_1 g, ..., eps_n g) built from minimal surfaces are Ricci flat.

Run:  python3 demos/02_ricci_flat_metrics.py
"""

import itertools

import numpy as np

from sigmaflat import BuildSpec, build_metric, catalog_surface, conformal_factor, signature_summary
from sigmaflat.builder import assemble_block_metric, valid_splits
from sigmaflat.curvature import ricci

surface = catalog_surface("scherk")
x, y = surface.sample(200, seed=11)

# Four-dimensional case with every exponent zero: the factor is one.
print("instanton factor range:", np.ptp(conformal_factor(BuildSpec(surface), x, y)))

print(f"\n{'n':>2} {'n1':>5} {'n2':>5} {'e0':>4} {'m1':>4}  max|Ric|")
for n in (1, 2, 3):
    for (n1, n2), e0, m1 in itertools.product(valid_splits(n), (0.0, 0.2), (0.0, 0.3)):
        G = build_metric(BuildSpec(surface, n=n, n1=n1, n2=n2, e0=e0, m1=m1))
        print(f"{n:2d} {n1:5.2f} {n2:5.2f} {e0:4.1f} {m1:4.1f}  {np.max(np.abs(ricci(G, x, y).Ric)):.1e}")

# Breaking either constraint destroys Ricci flatness.
broken_m = assemble_block_metric(surface, (1,), e0=0.2, m1=0.3, m2=0.0)
broken_n = assemble_block_metric(surface, (1, 1), n1=1.0, n2=0.0)
print(f"\nm1 + m2 = 0.3:           max|Ric| {np.max(np.abs(ricci(broken_m, x, y).Ric)):.1f}")
print(f"n1 + n2 = 1 with n = 2:  max|Ric| {np.max(np.abs(ricci(broken_n, x, y).Ric)):.1f}")

# The signature of the total space follows from the signs eps_i.
for eps in [(1,), (-1,), (1, -1), (-1, -1)]:
    n = len(eps)
    s = signature_summary(BuildSpec(surface, n=n, epsilons=eps, n1=(n - 1) / 2), x[:20], y[:20])
    print(f"eps = {eps}: signature {s.signatureOfM:+d} ({s.positive} positive, {s.negative} negative)")
