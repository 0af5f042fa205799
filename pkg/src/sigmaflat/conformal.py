"""Induced metric h, conformal metric g = h / sqrt|rho| and the identities they satisfy.

Everything here is computed from a third-order jet of the graph function, so
values, first and second derivatives of ``g`` are exact (closed-form mode) or
inherit the finite-difference accuracy of the input jet (grid mode).

Where ``rho < 0`` (possible for indefinite ambient metrics) square roots and
logarithms are taken of absolute values and the dropped signs are recorded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .curvature import ricci_of_jet
from .errors import DegeneratePoint, LogDomain, NotMinimal
from .jets import Jet, Jet3
from .reports import ResidualReport
from .surfaces import RHO_TOL, AmbientMetric, scaled_minimal_residual, surface_curvature

LOG_TOL = 1e-12
MINIMAL_TOL = 1e-8

CONVENTIONS = ("as-written", "unscaled-zeta")


@dataclass(frozen=True)
class InducedGeometry:
    h: np.ndarray
    hInv: np.ndarray
    rho: np.ndarray
    detH: np.ndarray


@dataclass(frozen=True)
class ConformalMetric:
    g: np.ndarray
    gInv: np.ndarray
    detG: np.ndarray
    sgnRho: np.ndarray


@dataclass(frozen=True)
class Constants:
    """Free constants of the harmonic-function catalog.

    Defaults exercise every equation with nonzero coefficients while keeping
    ``psi`` trivially harmonic.
    """

    a0: float = 1.0
    a1: float = 1.0
    a2: float = 1.0
    b1: float = 1.0
    b2: float = -1.0
    e0: float = 0.0
    e1: float = 0.0
    m1: float = 0.0
    m2: float = 0.0


@dataclass(frozen=True)
class ScalarCatalog:
    xi1: np.ndarray
    xi2: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    zeta: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray
    mu: np.ndarray
    psi: np.ndarray
    psi0: np.ndarray
    constants: Constants
    signs: dict
    cross_residual: np.ndarray


@dataclass(frozen=True)
class ConformalCurvature:
    Rab: np.ndarray
    R: np.ndarray


def induced_metric(phi_jet: Jet3, ambient: AmbientMetric) -> InducedGeometry:
    """h = g0 + eps dphi dphi, rho, and the displayed closed-form inverse."""
    d1 = phi_jet.d1
    e = ambient.eps
    rho = 1.0 + e * np.einsum("...m,mn,...n->...", d1, ambient.g0inv, d1)
    if np.any(~(np.abs(rho) >= RHO_TOL)):
        raise DegeneratePoint("rho vanishes at an evaluation point")
    h = ambient.g0 + e * np.einsum("...m,...n->...mn", d1, d1)
    up = np.einsum("mn,...n->...m", ambient.g0inv, d1)
    hinv = ambient.g0inv - (e / rho)[..., None, None] * np.einsum("...m,...n->...mn", up, up)
    return InducedGeometry(h=h, hInv=hinv, rho=rho, detH=np.linalg.det(h))


def conformal_metric(ig: InducedGeometry) -> ConformalMetric:
    s = np.sqrt(np.abs(ig.rho))
    g = ig.h / s[..., None, None]
    ginv = ig.hInv * s[..., None, None]
    return ConformalMetric(g=g, gInv=ginv, detG=np.linalg.det(g), sgnRho=np.sign(ig.rho))


class ConformalField:
    """Jets of the whole tower (phi, h, rho, g, g^-1) at a batch of points.

    Parameters
    ----------
    phi_jet : Jet3
        Third-order jet of the graph function at each point.
    ambient : AmbientMetric
    x, y : array_like, optional
        Coordinates of the points, kept for reporting only.
    """

    def __init__(self, phi_jet: Jet3, ambient: AmbientMetric, x=None, y=None):
        self.phi_jet = phi_jet
        self.ambient = ambient
        self.x = x
        self.y = y
        e = ambient.eps
        self.phi = phi_jet.to_taylor()
        self.dphi = jets.gradient(self.phi)  # order 2, (..., 2)
        self.h = e * jets.einsum("m,n->mn", self.dphi, self.dphi) + ambient.g0
        self.rho = 1.0 + e * jets.einsum("m,m->", jets.einsum("mn,n->m", ambient.g0inv, self.dphi), self.dphi)
        rho0 = self.rho.value
        if np.any(~(np.abs(rho0) >= RHO_TOL)):
            raise DegeneratePoint("rho vanishes at an evaluation point")
        self.sgn_rho = np.sign(rho0)
        self.abs_rho = self.rho * self.sgn_rho
        self.sqrt_rho = jets.sqrt(self.abs_rho)
        inv_sqrt = jets.reciprocal(self.sqrt_rho)
        self.g = self.h * inv_sqrt.expand_dims(-1).expand_dims(-1)
        self.ginv = jets.inv(self.g)

    @classmethod
    def from_surface(cls, surface, x, y) -> ConformalField:
        return cls(surface.jet(x, y), surface.ambient, x, y)

    def __len__(self):
        return self.rho.shape[0] if self.rho.ndim else 1

    def induced(self) -> InducedGeometry:
        return induced_metric(self.phi_jet, self.ambient)

    def metric(self) -> ConformalMetric:
        return conformal_metric(self.induced())

    def w(self) -> tuple[Jet, Jet]:
        """w1 = h_11 and w2 = h_22 as jets."""
        return self.h[..., 0, 0], self.h[..., 1, 1]

    def xi(self) -> tuple[Jet, Jet]:
        """xi1 = g^11 and xi2 = g^22 as jets."""
        return self.ginv[..., 0, 0], self.ginv[..., 1, 1]


def _log_checked(j, name):
    v = np.asarray(j.value if isinstance(j, Jet) else j)
    if np.any(~(np.abs(v) >= LOG_TOL)):
        raise LogDomain(f"log argument {name} vanishes")
    return jets.log_abs(j)


def scalar_catalog(cm: ConformalMetric, ig: InducedGeometry, phi_jet: Jet3,
                   constants: Constants = Constants(), ambient: AmbientMetric | None = None) -> ScalarCatalog:
    """Point values of the harmonic-function catalog.

    ``ambient`` is only needed for ``det g0`` in the xi-w cross-relation; it is
    recovered from ``det h / rho`` when omitted.
    """
    c = constants
    rho = ig.rho
    s = np.sqrt(np.abs(rho))
    sg = np.sign(rho)
    xi1, xi2 = cm.gInv[..., 0, 0], cm.gInv[..., 1, 1]
    w1 = s * cm.g[..., 0, 0]
    w2 = s * cm.g[..., 1, 1]
    for name, v in (("xi1", xi1), ("xi2", xi2), ("w1", w1), ("w2", w2), ("rho", rho)):
        if np.any(~(np.abs(v) >= LOG_TOL)):
            raise LogDomain(f"log argument {name} vanishes")
    lr = np.log(np.abs(rho))
    zeta = 0.5 * c.a0 * lr
    psi1 = c.a1 * np.log(np.abs(xi1)) + c.a2 * np.log(np.abs(xi2))
    psi2 = c.b1 * np.log(np.abs(w1)) + c.b2 * np.log(np.abs(w2))
    mu = (c.b1 + c.b2) * zeta - c.a0 * psi2
    psi = c.e0 * phi_jet.v - c.m1 * np.log(np.abs(w1)) - c.m2 * np.log(np.abs(w2))
    det0 = ambient.det if ambient is not None else ig.detH / rho
    cross = np.stack(
        [xi1 - w2 / (det0 * sg * s), xi2 - w1 / (det0 * sg * s)], axis=-1
    )
    signs = {"rho": sg, "xi1": np.sign(xi1), "xi2": np.sign(xi2), "w1": np.sign(w1), "w2": np.sign(w2)}
    return ScalarCatalog(
        xi1=xi1, xi2=xi2, w1=w1, w2=w2, zeta=zeta, psi1=psi1, psi2=psi2, mu=mu, psi=psi,
        psi0=-0.25 * lr, constants=c, signs=signs, cross_residual=cross,
    )


def laplace_beltrami(field: ConformalField, f) -> np.ndarray:
    """(1/sqrt|det g|) d_a (sqrt|det g| g^{ab} d_b f) for a scalar jet ``f`` (order >= 2)."""
    if isinstance(f, Jet3):
        f = f.to_taylor()
    if not isinstance(f, Jet):
        return np.zeros(field.rho.shape)
    ginv = field.ginv.truncate(1)
    detg = jets.det2(field.g.truncate(1))
    vol = jets.sqrt(detg * np.sign(detg.value))
    flux = jets.einsum("ab,b->a", ginv, jets.gradient(f.truncate(2))) * vol.expand_dims(-1)
    div = flux[..., 0].diff(0) + flux[..., 1].diff(1)
    return div.value / vol.value


def conformal_curvature(field: ConformalField) -> ConformalCurvature:
    ct = ricci_of_jet(field.g)
    return ConformalCurvature(Rab=ct.Ric, R=ct.Rscalar)


def trace_term(field: ConformalField) -> np.ndarray:
    """g^{ab} tr[(d_a g^-1)(d_b g)]."""
    g1 = field.g.truncate(1)
    gi1 = field.ginv.truncate(1)
    dg = np.stack([g1.diff(0).value, g1.diff(1).value], axis=-3)
    dgi = np.stack([gi1.diff(0).value, gi1.diff(1).value], axis=-3)
    return np.einsum("...ab,...aij,...bji->...", field.ginv.value, dgi, dg)


def prop1_residual(field: ConformalField, curvature: ConformalCurvature | None = None) -> np.ndarray:
    """R + 1/4 g^{ab} tr[(d_a g^-1)(d_b g)]."""
    if curvature is None:
        curvature = conformal_curvature(field)
    return curvature.R + 0.25 * trace_term(field)


HARMONIC_TAGS = {
    "oz01": "lap zeta = a0 (R - sqrt|rho| K)",
    "oz02": "lap psi1 = (a1 + a2) R",
    "oz03": "lap psi2 = (b1 + b2)(2R - sqrt|rho| K)",
    "mu": "lap mu = -a0 (b1 + b2) R",
    "psi-harmonic": "lap psi = 0",
}


def harmonic_fields(field: ConformalField, constants: Constants = Constants(), *,
                    convention: str = "as-written", check_minimal: bool = True) -> dict:
    """Point-wise residuals of the Laplace-Beltrami identities, keyed by label.

    Labels: ``oz01`` (zeta), ``oz02`` (psi1), ``oz03`` (psi2), ``mu`` and
    ``psi-harmonic``.  ``convention`` selects how ``zeta`` carries ``a0``:
    ``"as-written"`` uses ``zeta = (a0/2) log rho``; ``"unscaled-zeta"`` drops
    the factor and is kept only to document that it fails for ``a0 != 1``.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}")
    if check_minimal:
        res = np.abs(scaled_minimal_residual(field.phi_jet, field.ambient))
        if np.any(~(res < MINIMAL_TOL)):
            raise NotMinimal(f"minimal-surface residual {np.nanmax(res):.3e} exceeds {MINIMAL_TOL}")
    c = constants
    K = surface_curvature(field.phi_jet, field.ambient).K
    R = conformal_curvature(field).R
    sK = np.sqrt(np.abs(field.rho.value)) * K

    log_rho = _log_checked(field.rho, "rho")
    w1, w2 = field.w()
    xi1, xi2 = field.xi()
    lw1, lw2 = _log_checked(w1, "w1"), _log_checked(w2, "w2")
    zeta_scale = c.a0 if convention == "as-written" else 1.0
    zeta = 0.5 * zeta_scale * log_rho
    psi1 = c.a1 * _log_checked(xi1, "xi1") + c.a2 * _log_checked(xi2, "xi2")
    psi2 = c.b1 * lw1 + c.b2 * lw2
    mu = (c.b1 + c.b2) * zeta - c.a0 * psi2
    psi = c.e0 * field.phi.truncate(2) - c.m1 * lw1 - c.m2 * lw2

    lap = lambda f: laplace_beltrami(field, f)  # noqa: E731
    return {
        "oz01": lap(zeta) - c.a0 * R + c.a0 * sK,
        "oz02": lap(psi1) - (c.a1 + c.a2) * R,
        "oz03": lap(psi2) - 2 * (c.b1 + c.b2) * R + (c.b1 + c.b2) * sK,
        "mu": lap(mu) + c.a0 * (c.b1 + c.b2) * R,
        "psi-harmonic": lap(psi),
    }


def harmonic_residuals(field: ConformalField, constants: Constants = Constants(), *,
                       convention: str = "as-written", check_minimal: bool = True,
                       tolerance: float | None = None) -> ResidualReport:
    """:func:`harmonic_fields` reduced to max/RMS entries."""
    fields = harmonic_fields(field, constants, convention=convention, check_minimal=check_minimal)
    rep = ResidualReport()
    for label, values in fields.items():
        rep.add(label, values, field.x, field.y, tag=HARMONIC_TAGS[label], tolerance=tolerance)
    return rep


def _values_and_derivs(mat: Jet):
    """Value, first and second derivatives of a matrix jet as stacked arrays."""
    v = mat.value
    d = np.stack([mat.partial(1, 0), mat.partial(0, 1)], axis=-3)
    dd = np.stack(
        [np.stack([mat.partial(2, 0), mat.partial(1, 1)], axis=-3),
         np.stack([mat.partial(1, 1), mat.partial(0, 2)], axis=-3)],
        axis=-4,
    )
    return v, d, dd


def sigma_residual(field: ConformalField) -> tuple[np.ndarray, np.ndarray]:
    """d_a [g^{ab} g^-1 d_b g] (a 2x2 matrix) and the auxiliary divergence d_m g^{mn}.

    Expanded by the product rule from point values of g and its first and
    second derivatives.  Evaluated in long double: the terms near a singular
    line are large and cancel.
    """
    g, dg, ddg = _values_and_derivs(jets.extended(field.g))
    gi = jets.inv_values(g)
    # d_a g^{-1} = -g^-1 (d_a g) g^-1
    dgi = -np.einsum("...ij,...ajk,...kl->...ail", gi, dg, gi)
    A = np.einsum("...ij,...bjk->...bik", gi, dg)  # A_b = g^-1 d_b g
    dA = np.einsum("...aij,...bjk->...abik", dgi, dg) + np.einsum("...ij,...abjk->...abik", gi, ddg)
    # sum over a, b of (d_a g^{ab}) A_b + g^{ab} d_a A_b ; g^{ab} as scalars = gi[a, b]
    res = np.einsum("...aab,...bik->...ik", dgi, A) + np.einsum("...ab,...abik->...ik", gi, dA)
    aux = np.einsum("...mmn->...n", dgi)
    return res.astype(float), aux.astype(float)


def minimal_divergence_residuals(field: ConformalField) -> tuple[np.ndarray, np.ndarray]:
    """d_a[sqrt|rho| h^{ab} d_b phi] (scalar) and d_a(sqrt|rho| h^{ab}) (vector)."""
    hinv = jets.inv(field.h)
    m = hinv * field.sqrt_rho.expand_dims(-1).expand_dims(-1)
    flux = jets.einsum("ab,b->a", m, field.dphi)
    sig1 = flux[..., 0].diff(0) + flux[..., 1].diff(1)
    sig2 = m[..., 0, :].diff(0) + m[..., 1, :].diff(1)
    return sig1.value, sig2.value
