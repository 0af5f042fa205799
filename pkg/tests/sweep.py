"""Parameter sweep for Ricci-flatness of the built block metrics (test fixture)."""

import itertools

import numpy as np

from sigmaflat.builder import BuildSpec, assemble_block_metric, build_metric, valid_splits
from sigmaflat.curvature import ricci

SURFACES = ("scherk", "helicoid", "null_wave")
NS = (1, 2, 3)
E0S = (0.0, 0.2)
M1S = (0.0, 0.3)
POINTS = 200


def cases():
    for n in NS:
        for (n1, n2), e0, m1 in itertools.product(valid_splits(n), E0S, M1S):
            yield dict(n=n, n1=n1, n2=n2, e0=e0, m1=m1)


def max_ricci(bm, x, y):
    keep = bm.valid(x, y)
    return float(np.max(np.abs(ricci(bm, x[keep], y[keep], with_riemann=False).Ric)))


def run_sweep(surface):
    """Worst max|Ric| over every valid case for one surface, and the case count."""
    x, y = surface.sample(POINTS, seed=11)
    worst, count = 0.0, 0
    for c in cases():
        worst = max(worst, max_ricci(build_metric(BuildSpec(surface, **c)), x, y))
        count += 1
    return worst, count


def controls(surface):
    """max|Ric| for metrics with one constraint broken: m2 != -m1, and n1 + n2 shifted."""
    x, y = surface.sample(POINTS, seed=11)
    out = {}
    for n in NS:
        t = (n - 1) / 2
        out[("m", n)] = max_ricci(assemble_block_metric(surface, (1,) * n, e0=0.2, m1=0.3, m2=0.0, n1=t, n2=0.0), x, y)
        out[("n", n)] = max_ricci(assemble_block_metric(surface, (1,) * n, n1=t + 0.5, n2=0.0), x, y)
    return out
