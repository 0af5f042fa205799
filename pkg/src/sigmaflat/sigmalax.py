"""Sigma-model residuals, Lax pair and zero-curvature checks.

The real-symmetric sector is realized: ``P`` is a real 2x2 matrix field and the
wavefunction ``Psi`` a real 2x2 matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import jets
from .conformal import ConformalField
from .errors import MaskedPath, SingularP, SingularPoint, SingularSigma, SpectralPole
from .expr import ScalarExpr, taylor
from .jets import Jet

POLE_TOL = 1e-12
SINGULAR_TOL = 1e-12

#: Levi-Civita symbol with eps^{12} = 1.
LEVI_CIVITA = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass
class GeneralSigmaConfig:
    """Independent matrix field ``P`` and tensor field ``Lambda^{ab}``.

    Both are callables ``(x, y) -> Jet`` of shape ``(*points, 2, 2)``; ``P``
    needs order >= 2 jets, ``Lambda`` order >= 1 for the field equation and
    order >= 2 for :func:`lambda_conditions`.
    """

    P: Callable[..., Jet]
    Lambda: Callable[..., Jet]

    def sigma_det(self, x, y) -> np.ndarray:
        return jets.det2(self.Lambda(x, y)).value

    def phi_antisym(self, x, y) -> np.ndarray:
        L = self.Lambda(x, y)
        return 0.5 * (L[..., 0, 1] - L[..., 1, 0]).value


def expression_matrix(entries) -> Callable[..., Jet]:
    """2x2 nested list of expression strings -> callable returning matrix jets."""
    exprs = [[ScalarExpr(e) if isinstance(e, str) else e for e in row] for row in entries]

    def field(x, y):
        rows = [jets.stack([taylor(e, x, y) for e in row], axis=-1) for row in exprs]
        return jets.stack(rows, axis=-2)

    return field


def conformal_sigma_config(surface) -> GeneralSigmaConfig:
    """(P, Lambda) = (g, g^{ab}) for the conformal metric of ``surface``.

    ``g^{ab}`` is inverted in long double so that it matches the evaluation
    precision of :func:`general_sigma_residual`.
    """
    return GeneralSigmaConfig(
        P=lambda x, y: ConformalField.from_surface(surface, x, y).g,
        Lambda=lambda x, y: jets.inv(jets.extended(ConformalField.from_surface(surface, x, y).g)),
    )


def field_sigma_config(field: ConformalField) -> GeneralSigmaConfig:
    """As :func:`conformal_sigma_config` for an already evaluated field (points ignored)."""
    ginv = jets.inv(jets.extended(field.g))
    return GeneralSigmaConfig(P=lambda *_: field.g, Lambda=lambda *_: ginv)


def _inv_checked(P: Jet, err):
    det = jets.det2(P).value
    scale = np.max(np.abs(P.value), axis=(-2, -1)) ** 2
    if np.any(~(np.abs(det) >= SINGULAR_TOL * scale)):
        raise err("matrix field is singular at an evaluation point")
    return jets.inv(P)


def _current(P: Jet) -> Jet:
    """A_b = P^-1 d_b P stacked along a leading index b; order drops by one."""
    Pinv = _inv_checked(P, SingularP)
    dP = jets.stack([P.diff(0), P.diff(1)], axis=-3)
    return jets.einsum("ij,bjk->bik", Pinv.truncate(dP.order), dP)


def general_sigma_residual(cfg: GeneralSigmaConfig, x, y) -> np.ndarray:
    """d_a (Lambda^{ab} P^-1 d_b P), assembled in long-double jet arithmetic."""
    A = _current(jets.extended(cfg.P(x, y)))
    L = jets.extended(cfg.Lambda(x, y)).truncate(A.order)
    flux = jets.einsum("ab,bik->aik", L, A)
    return (flux[..., 0, :, :].diff(0) + flux[..., 1, :, :].diff(1)).value.astype(float)


def lambda_conditions(cfg: GeneralSigmaConfig, x, y) -> tuple[np.ndarray, np.ndarray]:
    """d_a((1/s) Lambda^{ab} d_b s) and d_a((1/s) Lambda^{ba} d_b f).

    ``s = det Lambda`` and ``f`` is the antisymmetric part of Lambda.
    """
    L = cfg.Lambda(x, y)
    if L.order < 2:
        raise ValueError("Lambda needs second-order jets")
    s = jets.det2(L)
    if np.any(~(np.abs(s.value) >= SINGULAR_TOL)):
        raise SingularSigma("det Lambda vanishes at an evaluation point")
    f = 0.5 * (L[..., 0, 1] - L[..., 1, 0])
    inv_s = jets.reciprocal(s.truncate(1))
    L1 = L.truncate(1)
    v1 = jets.einsum("ab,b->a", L1, jets.gradient(s)) * inv_s.expand_dims(-1)
    v2 = jets.einsum("ba,b->a", L1, jets.gradient(f)) * inv_s.expand_dims(-1)
    c1 = v1[..., 0].diff(0) + v1[..., 1].diff(1)
    c2 = v2[..., 0].diff(0) + v2[..., 1].diff(1)
    return c1.value.astype(float), c2.value.astype(float)


@dataclass(frozen=True)
class LaxPair:
    k: float
    U: np.ndarray
    V: np.ndarray
    sigma: np.ndarray


def _sigma(field: ConformalField):
    return field.sgn_rho * field.ambient.det


def _lax_jets(field: ConformalField, k: float) -> tuple[Jet, Jet]:
    sigma = _sigma(field)
    denom = k * k + sigma
    if np.any(np.abs(denom) < POLE_TOL):
        raise SpectralPole(f"k^2 + sigma vanishes for k={k}")
    A = _current(field.g)
    coef = k * field.ginv.truncate(A.order) - sigma[..., None, None] * LEVI_CIVITA
    M = jets.einsum("ab,bik->aik", coef, A) * (1.0 / denom)[..., None, None, None]
    # alpha = 1 row: d_y Psi = M^1 Psi;  alpha = 2 row: -d_x Psi = M^2 Psi
    V = M[..., 0, :, :]
    U = -M[..., 1, :, :]
    return U, V


def lax_matrices(field: ConformalField, k: float) -> LaxPair:
    """U, V with d_x Psi = U Psi and d_y Psi = V Psi at the field's points."""
    U, V = _lax_jets(field, k)
    return LaxPair(k=k, U=U.value, V=V.value, sigma=_sigma(field))


def zero_curvature_residual(field: ConformalField, k: float) -> np.ndarray:
    """d_y U - d_x V + [U, V]."""
    U, V = _lax_jets(field, k)
    u, v = U.value, V.value
    return U.diff(1).value - V.diff(0).value + u @ v - v @ u


def _loop_vertices(loop):
    pts = np.asarray(loop, float)
    if not np.allclose(pts[0], pts[-1]):
        pts = np.vstack([pts, pts[:1]])
    return pts


def square_loop(center, side) -> np.ndarray:
    cx, cy = center
    s = side / 2
    return np.array([[cx - s, cy - s], [cx + s, cy - s], [cx + s, cy + s], [cx - s, cy + s]])


def transport(surface, k: float, loop, steps: int = 4000) -> np.ndarray:
    """Transport Psi = I around the closed polyline ``loop`` with fixed-step RK4.

    Steps are split evenly over the segments so no step straddles a corner.
    """
    pts = _loop_vertices(loop)
    nseg = len(pts) - 1
    m = max(1, int(round(steps / nseg)))
    t = np.linspace(0.0, 1.0, 2 * m + 1)
    xs = (pts[:-1, None, 0] + t[None, :] * (pts[1:, None, 0] - pts[:-1, None, 0])).ravel()
    ys = (pts[:-1, None, 1] + t[None, :] * (pts[1:, None, 1] - pts[:-1, None, 1])).ravel()
    if not np.all(surface.domain.contains(xs, ys)):
        raise MaskedPath("transport loop leaves the surface domain")
    try:
        field = ConformalField.from_surface(surface, xs, ys)
    except SingularPoint as exc:
        raise MaskedPath(f"transport loop meets a singular point: {exc}") from exc
    lp = lax_matrices(field, k)
    dx = np.repeat(pts[1:, 0] - pts[:-1, 0], 2 * m + 1)
    dy = np.repeat(pts[1:, 1] - pts[:-1, 1], 2 * m + 1)
    F = (lp.U * dx[:, None, None] + lp.V * dy[:, None, None]).reshape(nseg, 2 * m + 1, 2, 2)
    h = 1.0 / m
    psi = np.eye(2)
    for s in range(nseg):
        Fs = F[s]
        for i in range(m):
            f0, fh, f1 = Fs[2 * i], Fs[2 * i + 1], Fs[2 * i + 2]
            k1 = f0 @ psi
            k2 = fh @ (psi + 0.5 * h * k1)
            k3 = fh @ (psi + 0.5 * h * k2)
            k4 = f1 @ (psi + h * k3)
            psi = psi + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return psi


def transport_wavefunction(surface, k: float, loop, steps: int = 4000) -> float:
    """Holonomy defect ``max|Psi_final - I|`` after transport around ``loop``."""
    psi = transport(surface, k, loop, steps)
    return float(np.max(np.abs(psi - np.eye(2))))
