"""Graph surfaces x3 = phi(x1, x2) in a flat 3-space with metric g0 + eps (dx3)^2."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import qmc

from .errors import DegeneratePoint, UnknownSurface
from .expr import ScalarExpr, jet_eval
from .grid import GridField, jet_from_grid
from .jets import Jet3

RHO_TOL = 1e-12


@dataclass(frozen=True)
class AmbientMetric:
    """Constant 2x2 block ``[[k1, k0], [k0, k2]]`` plus the sign of ``(dx3)^2``."""

    k1: float = 1.0
    k0: float = 0.0
    k2: float = 1.0
    eps: int = 1

    def __post_init__(self):
        if self.eps not in (1, -1):
            raise ValueError("eps must be +1 or -1")
        if self.det == 0:
            raise ValueError("ambient block g0 must be invertible (k1*k2 - k0**2 != 0)")

    @property
    def det(self) -> float:
        return self.k1 * self.k2 - self.k0**2

    @property
    def g0(self) -> np.ndarray:
        return np.array([[self.k1, self.k0], [self.k0, self.k2]], dtype=float)

    @property
    def g0inv(self) -> np.ndarray:
        return np.array([[self.k2, -self.k0], [-self.k0, self.k1]], dtype=float) / self.det


EUCLIDEAN = AmbientMetric()


@dataclass(frozen=True)
class Domain:
    """Axis-aligned rectangle with an optional exclusion predicate ``exclude(x, y) -> bool``."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    exclude: Callable | None = field(default=None, compare=False)
    note: str = ""

    def contains(self, x, y) -> np.ndarray:
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        ok = (x >= self.xmin) & (x <= self.xmax) & (y >= self.ymin) & (y <= self.ymax)
        if self.exclude is not None:
            ok &= ~np.asarray(self.exclude(x, y), bool)
        return ok


def node_index(f: GridField, x, y):
    """Lattice indices of grid nodes given by coordinates; off-node points raise."""
    fi = (np.asarray(x, float) - f.x0) / f.hx
    fj = (np.asarray(y, float) - f.y0) / f.hy
    i = np.rint(fi).astype(int)
    j = np.rint(fj).astype(int)
    if np.any(np.abs(fi - i) > 1e-6) or np.any(np.abs(fj - j) > 1e-6):
        raise ValueError("grid surfaces are only evaluated at lattice nodes")
    return i, j


@dataclass
class SurfaceSolution:
    """A graph function together with its ambient space and evaluation domain.

    ``phi`` is either a :class:`ScalarExpr` (closed-form mode, exact jets at any
    point) or a :class:`GridField` (grid mode, jets only at interior nodes).
    """

    phi: ScalarExpr | GridField
    ambient: AmbientMetric
    domain: Domain
    name: str = "custom"
    residual: float | None = None
    params: dict = field(default_factory=dict)

    @property
    def is_grid(self) -> bool:
        return isinstance(self.phi, GridField)

    def jet(self, x, y=None, *, strict: bool = True) -> Jet3:
        if y is None:
            x, y = x
        if self.is_grid:
            i, j = node_index(self.phi, x, y)
            return jet_from_grid(self.phi, i, j)[0]
        return jet_eval(self.phi, x, y, strict=strict)

    def sample(self, n: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """``n`` quasi-random (scrambled Halton) points of the domain, masked points removed.

        A point is kept only if it lies in the domain, the jet of ``phi`` is
        finite there and ``|rho|`` exceeds the degeneracy threshold.
        """
        if self.is_grid:
            raise TypeError("grid surfaces are evaluated on their nodes")
        d = self.domain
        sampler = qmc.Halton(d=2, scramble=True, seed=seed)
        xs, ys = [], []
        have = 0
        while have < n:
            u = sampler.random(max(2 * (n - have), 16))
            x = d.xmin + (d.xmax - d.xmin) * u[:, 0]
            y = d.ymin + (d.ymax - d.ymin) * u[:, 1]
            ok = d.contains(x, y)
            x, y = x[ok], y[ok]
            if x.size:
                j = self.jet(x, y, strict=False)
                ok = j.finite() & (np.abs(rho_of(j, self.ambient)) > RHO_TOL)
                x, y = x[ok], y[ok]
            xs.append(x)
            ys.append(y)
            have += x.size
        return np.concatenate(xs)[:n], np.concatenate(ys)[:n]

    def grid_points(self, margin: int | None = None):
        """Interior nodes of a grid surface: ``(x, y, jet)``."""
        from .grid import MARGIN

        f = self.phi
        i, j = f.interior(MARGIN if margin is None else margin)
        jet, _ = jet_from_grid(f, i, j)
        x = f.x0 + f.hx * i
        y = f.y0 + f.hy * j
        return x, y, jet


def rho_of(phi_jet: Jet3, ambient: AmbientMetric) -> np.ndarray:
    """rho = 1 + eps g0^{mu nu} phi_mu phi_nu."""
    d1 = phi_jet.d1
    return 1.0 + ambient.eps * np.einsum("...m,mn,...n->...", d1, ambient.g0inv, d1)


def minimal_residual(phi_jet: Jet3, ambient: AmbientMetric) -> np.ndarray:
    """Left-hand side of the generalized minimal-surface equation.

    ``[k2 + eps phi_y^2] phi_xx - 2 [k0 + eps phi_x phi_y] phi_xy + [k1 + eps phi_x^2] phi_yy``
    """
    px, py = phi_jet.d1[..., 0], phi_jet.d1[..., 1]
    pxx, pxy, pyy = phi_jet.d2[..., 0, 0], phi_jet.d2[..., 0, 1], phi_jet.d2[..., 1, 1]
    e = ambient.eps
    return (
        (ambient.k2 + e * py**2) * pxx
        - 2 * (ambient.k0 + e * px * py) * pxy
        + (ambient.k1 + e * px**2) * pyy
    )


def scaled_minimal_residual(phi_jet: Jet3, ambient: AmbientMetric) -> np.ndarray:
    """Minimal residual divided by the size of its coefficients and second derivatives."""
    px, py = phi_jet.d1[..., 0], phi_jet.d1[..., 1]
    e = ambient.eps
    a = np.abs(ambient.k2 + e * py**2)
    b = np.abs(ambient.k0 + e * px * py)
    c = np.abs(ambient.k1 + e * px**2)
    scale = (a + 2 * b + c) * (1.0 + np.max(np.abs(phi_jet.d2), axis=(-2, -1)))
    return minimal_residual(phi_jet, ambient) / scale


@dataclass(frozen=True)
class SurfaceCurvature:
    """Intrinsic and extrinsic curvature of the graph surface.

    ``K`` is the scalar curvature of the induced metric (twice the classical
    Gaussian curvature: for g0 = I, eps = +1 it equals
    ``2 (phi_xx phi_yy - phi_xy^2) / rho^2``).  ``H`` uses ``sqrt|rho|`` and
    ``sgn_rho`` records the sign that was dropped.
    """

    K: np.ndarray
    H: np.ndarray
    lambda0: np.ndarray
    r: np.ndarray
    rho: np.ndarray
    sgn_rho: np.ndarray


def _raised(phi_jet, ambient):
    gi = ambient.g0inv
    up1 = np.einsum("mn,...n->...m", gi, phi_jet.d1)
    up2 = np.einsum("am,...mn,nb->...ab", gi, phi_jet.d2, gi)
    return up1, up2


def _check_rho(rho):
    if np.any(np.abs(rho) < RHO_TOL):
        raise DegeneratePoint("rho vanishes at an evaluation point")


def lambda0_of(phi_jet: Jet3, ambient: AmbientMetric) -> np.ndarray:
    """1/2 [phi^{ab} phi_ab - (phi^a_a)^2]."""
    _, up2 = _raised(phi_jet, ambient)
    lap0 = np.einsum("mn,...mn->...", ambient.g0inv, phi_jet.d2)
    return 0.5 * (np.einsum("...ab,...ab->...", up2, phi_jet.d2) - lap0**2)


def surface_curvature(phi_jet: Jet3, ambient: AmbientMetric) -> SurfaceCurvature:
    e = ambient.eps
    g0, gi = ambient.g0, ambient.g0inv
    d1, d2 = phi_jet.d1, phi_jet.d2
    rho = rho_of(phi_jet, ambient)
    _check_rho(rho)
    up1, up2 = _raised(phi_jet, ambient)
    lap0 = np.einsum("mn,...mn->...", gi, d2)
    full = np.einsum("...ab,...ab->...", up2, d2)
    K = e / rho**2 * (lap0**2 - full)
    lam = 0.5 * (full - lap0**2)

    h_inv = gi - (e / rho)[..., None, None] * np.einsum("...m,...n->...mn", up1, up1)
    lap_h = np.einsum("...mn,...mn->...", h_inv, d2)
    H = lap_h / np.sqrt(np.abs(rho))

    # Ricci tensor of h as displayed: with rho_mu = 2 eps phi^a phi_{a mu}.
    rho_d = 2 * e * np.einsum("...a,...am->...m", up1, d2)
    mixed = np.einsum("...ma,ab,...nb->...mn", d2, gi, d2)
    r = (
        (e / rho * lap_h)[..., None, None] * d2
        - (e / rho)[..., None, None] * mixed
        + (1 / (4 * rho**2))[..., None, None] * np.einsum("...m,...n->...mn", rho_d, rho_d)
    )
    return SurfaceCurvature(K=K, H=H, lambda0=lam, r=r, rho=rho, sgn_rho=np.sign(rho))


def induced_h(phi_jet: Jet3, ambient: AmbientMetric) -> np.ndarray:
    d1 = phi_jet.d1
    return ambient.g0 + ambient.eps * np.einsum("...m,...n->...mn", d1, d1)


def id1_residual(phi_jet: Jet3, ambient: AmbientMetric) -> np.ndarray:
    """Components ``T[a, m, b, c]`` of the two-dimensional second-derivative identity.

    ``phi_am phi_bc - phi_ab phi_mc + lambda0 (g0_am g0_bc - g0_ab g0_cm)``
    """
    d2 = phi_jet.d2
    g0 = ambient.g0
    lam = lambda0_of(phi_jet, ambient)
    quad = np.einsum("...am,...bc->...ambc", d2, d2) - np.einsum("...ab,...mc->...ambc", d2, d2)
    metric = np.einsum("am,bc->ambc", g0, g0) - np.einsum("ab,cm->ambc", g0, g0)
    return quad + lam[..., None, None, None, None] * metric


# -- catalog ---------------------------------------------------------------

SCHERK_MARGIN = 0.3
HELICOID_HOLE = 0.1


def _plane(a=1.0, b=2.0, ambient=None):
    return SurfaceSolution(
        ScalarExpr(f"({a!r})*x + ({b!r})*y"),
        ambient or EUCLIDEAN,
        Domain(-1.0, 1.0, -1.0, 1.0),
        name="plane",
        params={"a": a, "b": b},
    )


def _scherk():
    m = math.pi / 2 - SCHERK_MARGIN
    return SurfaceSolution(
        ScalarExpr("log(cos(y)) - log(cos(x))"),
        EUCLIDEAN,
        Domain(-m, m, -m, m, note=f"(-pi/2, pi/2)^2 shrunk by {SCHERK_MARGIN}"),
        name="scherk",
    )


def _exclude_axis(x, y):
    return np.abs(x) <= HELICOID_HOLE


def _helicoid():
    return SurfaceSolution(
        ScalarExpr("arctan(y/x)"),
        EUCLIDEAN,
        Domain(-1.0, 1.0, -1.0, 1.0, exclude=_exclude_axis, note=f"|x| > {HELICOID_HOLE}"),
        name="helicoid",
    )


def _null_wave(f="2*u + u**3", lo=-0.25, hi=0.25):
    # Default profile keeps f' >= 2 on the domain, so w2 = f'^2 - 1 >= 3.  Steep
    # profiles are still exact solutions but g^-1 dg cancels entries of size f'^2,
    # which costs digits in every sigma-model residual.
    phi = ScalarExpr(f, variables=("u",)).substitute(u="(x + y)")
    return SurfaceSolution(
        phi,
        AmbientMetric(1.0, 0.0, -1.0, 1),
        Domain(lo, hi, lo, hi),
        name="null_wave",
        params={"f": f},
    )


CATALOG = {
    "plane": (_plane, "phi = a x + b y (any ambient; default g0 = I)"),
    "scherk": (_scherk, "phi = log cos y - log cos x, g0 = I, eps = +1"),
    "helicoid": (_helicoid, "phi = arctan(y/x), g0 = I, eps = +1, |x| > 0.1"),
    "null_wave": (_null_wave, "phi = f(x + y), g0 = diag(1, -1), eps = +1"),
}


def catalog_surface(name: str, **params) -> SurfaceSolution:
    """Preconfigured exact solution of the minimal-surface equation."""
    try:
        factory, _ = CATALOG[name]
    except KeyError:
        raise UnknownSurface(f"unknown surface {name!r}; choose from {sorted(CATALOG)}") from None
    return factory(**params)
