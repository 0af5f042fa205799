"""Levi-Civita curvature of metrics on M_{2+2n} that depend on (x, y) only.

Coordinates are ordered ``(x1, x2, y_1^1, y_1^2, ..., y_n^1, y_n^2)``.  Only the
first two coordinates carry derivatives; every derivative along a ``y``
direction vanishes identically and is never formed.

The metric is supplied as a :class:`~sigmaflat.jets.Jet` of order >= 2, so
Christoffel symbols come out as exact first-order jets and their derivatives
are read off analytically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import jets
from .errors import SingularMetric
from .jets import Jet
from .reports import ResidualReport

MAX_DIM = 16
SINGULAR_TOL = 1e-12


@dataclass
class BlockMetric:
    """A ``dim x dim`` metric field ``G(x, y)``.

    Parameters
    ----------
    G : callable
        ``G(x, y)`` returns a Jet of order >= 2 and shape ``(*points, dim, dim)``.
    dim : int
    structure : {"general", "conformal-block"}
        ``conformal-block`` marks ``diag(e^{2 Phi} g, eps_1 g, ..., eps_n g)``; the
        pieces are kept in ``blocks`` for inspection.
    """

    G: Callable[..., Jet]
    dim: int
    structure: str = "general"
    blocks: dict = field(default_factory=dict)
    mask: Callable | None = None

    def __post_init__(self):
        if self.dim % 2 or not 2 <= self.dim <= MAX_DIM:
            raise ValueError(f"dimension must be even and between 2 and {MAX_DIM}")

    @property
    def n(self) -> int:
        return self.dim // 2 - 1

    def jet(self, x, y) -> Jet:
        G = self.G(x, y)
        if G.order < 2:
            raise ValueError("curvature needs second-order metric jets")
        return G

    def valid(self, x, y) -> np.ndarray:
        """Points where the construction is defined (no masked power/log domain)."""
        if self.mask is None:
            return np.ones(np.shape(x), bool)
        return ~np.asarray(self.mask(x, y), bool)


@dataclass(frozen=True)
class CurvatureTensors:
    Gamma: np.ndarray
    Ric: np.ndarray
    Rscalar: np.ndarray
    Ric_riemann: np.ndarray | None = None


def constant_metric(M) -> BlockMetric:
    M = np.asarray(M, float)

    def G(x, y):
        shape = np.shape(np.broadcast_arrays(np.asarray(x), np.asarray(y))[0])
        return Jet.constant(np.broadcast_to(M, shape + M.shape), 2)

    return BlockMetric(G, M.shape[0])


def _check_invertible(G0):
    finite = np.all(np.isfinite(G0), axis=(-2, -1))
    sv = np.linalg.svd(np.where(finite[..., None, None], G0, 0.0), compute_uv=False)
    bad = ~finite | ~(sv[..., -1] >= SINGULAR_TOL * sv[..., 0])
    if np.any(bad):
        raise SingularMetric(
            f"metric is singular at {int(np.sum(bad))} point(s)", points=np.argwhere(bad)
        )


def christoffel_jet(G: Jet) -> Jet:
    """Gamma^a_{bc} as a jet one order below ``G``; shape ``(..., D, D, D)``."""
    _check_invertible(G.value)
    D = G.shape[-1]
    Gp = G.truncate(G.order)  # order k
    dG = [Gp.diff(0), Gp.diff(1)]  # order k-1
    order = dG[0].order
    zero = Jet.constant(np.zeros(dG[0].shape), order)
    # partial_c G_{ab} stacked along a leading derivative axis: (..., c, a, b)
    dfull = jets.stack(dG + [zero] * (D - 2), axis=-3)
    # lowered symbols Gamma_{d b c} = 1/2 (d_b G_dc + d_c G_db - d_d G_bc)
    low = 0.5 * (
        dfull.transpose(*_axes(dfull, (1, 0, 2)))
        + dfull.transpose(*_axes(dfull, (1, 2, 0)))
        - dfull
    )
    Ginv = jets.inv(G.truncate(order))
    return jets.einsum("ad,dbc->abc", Ginv, low)


def _axes(j: Jet, perm):
    """Permute the last three tensor axes of ``j`` by ``perm`` (batch axes fixed)."""
    lead = j.ndim - 3
    return tuple(range(lead)) + tuple(lead + p for p in perm)


def christoffel(bm: BlockMetric, x, y) -> np.ndarray:
    """Christoffel symbols ``Gamma[..., a, b, c] = Gamma^a_{bc}`` at the points."""
    return christoffel_jet(bm.jet(x, y)).value


def _curvature_from_jet(G: Jet, with_riemann: bool = True) -> CurvatureTensors:
    Gam = christoffel_jet(G)
    D = G.shape[-1]
    g = Gam.value
    dG = np.zeros(g.shape[:-3] + (D,) + g.shape[-3:])
    dG[..., 0, :, :, :] = Gam.diff(0).value
    dG[..., 1, :, :, :] = Gam.diff(1).value
    # dG[..., c, a, b, d] = partial_c Gamma^a_{bd}
    ric = (
        np.einsum("...ccab->...ab", dG)
        - np.einsum("...accb->...ab", dG)
        + np.einsum("...ccd,...dab->...ab", g, g)
        - np.einsum("...cad,...dcb->...ab", g, g)
    )
    ric_r = None
    if with_riemann:
        # R^a_{bcd} = d_c G^a_{db} - d_d G^a_{cb} + G^a_{ce} G^e_{db} - G^a_{de} G^e_{cb}
        riem = (
            np.einsum("...cadb->...abcd", dG)
            - np.einsum("...dacb->...abcd", dG)
            + np.einsum("...ace,...edb->...abcd", g, g)
            - np.einsum("...ade,...ecb->...abcd", g, g)
        )
        ric_r = np.einsum("...abad->...bd", riem)
    Ginv = np.linalg.inv(G.value)
    R = np.einsum("...ab,...ab->...", Ginv, ric)
    return CurvatureTensors(Gamma=g, Ric=ric, Rscalar=R, Ric_riemann=ric_r)


def ricci(bm: BlockMetric, x, y, *, with_riemann: bool = True) -> CurvatureTensors:
    """Christoffel symbols, Ricci tensor and scalar curvature at the points.

    ``Ric_ab = d_c Gamma^c_ab - d_a Gamma^c_cb + Gamma^c_cd Gamma^d_ab - Gamma^c_ad Gamma^d_cb``;
    with ``with_riemann`` the contraction ``R^a_{bad}`` of the Riemann tensor is
    also returned as an independent path to the same quantity.
    """
    return _curvature_from_jet(bm.jet(x, y), with_riemann)


def ricci_of_jet(G: Jet, *, with_riemann: bool = False) -> CurvatureTensors:
    return _curvature_from_jet(G, with_riemann)


def ricci_flat_report(bm: BlockMetric, x, y, *, tolerance=None, label="ricci-flat") -> ResidualReport:
    """Max and RMS of ``|Ric_ab|`` over all components at the unmasked points."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    keep = bm.valid(x, y)
    x, y = x[keep], y[keep]
    report = ResidualReport()
    ct = ricci(bm, x, y, with_riemann=False)
    report.add(label, ct.Ric, x, y, tag="R_ab = 0", tolerance=tolerance)
    report.masked = int(np.sum(~keep))
    return report
