"""Ricci-flat block metrics built from a minimal graph surface.

The metric on ``M_{2+2n}`` is ``diag(e^{2 Phi} g, eps_1 g, ..., eps_n g)`` with
``g`` the conformal metric of the surface and

    e^{2 Phi} = exp(2 e0 phi) |w1|^{-2 m1} |w2|^{-2 m2} w1^{-2 n1} w2^{-2 n2} rho^{n1 + n2},

``w1 = h_11``, ``w2 = h_22``.  It is Ricci flat when ``m1 + m2 = 0`` and
``n1 + n2 = (n - 1) / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import jets
from .conformal import ConformalField
from .curvature import BlockMetric
from .errors import ConstraintViolation, PowerDomain, SignatureJump
from .jets import Jet
from .surfaces import SurfaceSolution

CONSTRAINT_TOL = 1e-14


@dataclass(frozen=True)
class BuildSpec:
    """Constants of a Ricci-flat block metric; ``m2 = -m1`` by construction.

    Raises :class:`ConstraintViolation` unless ``n1 + n2 = (n - 1) / 2``.
    """

    surface: SurfaceSolution
    n: int = 1
    epsilons: tuple = field(default=None)
    e0: float = 0.0
    m1: float = 0.0
    n1: float = 0.0
    n2: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ConstraintViolation(f"n must be a positive integer, got {self.n}")
        eps = (1,) * self.n if self.epsilons is None else tuple(int(e) for e in self.epsilons)
        if len(eps) != self.n or any(e not in (1, -1) for e in eps):
            raise ConstraintViolation(f"need {self.n} signs in {{+1, -1}}, got {self.epsilons}")
        object.__setattr__(self, "epsilons", eps)
        target = (self.n - 1) / 2
        if abs(self.n1 + self.n2 - target) > CONSTRAINT_TOL:
            raise ConstraintViolation(
                f"n1 + n2 = {self.n1 + self.n2!r} but the constraint n1 + n2 = (n - 1)/2 "
                f"requires {target!r} for n = {self.n}"
            )
        if abs(4 * (1 + self.n1 + self.n2) - self.dim) > 4 * CONSTRAINT_TOL:
            raise ConstraintViolation("dimension 2 + 2n disagrees with 4 (1 + n1 + n2)")

    @property
    def m2(self) -> float:
        return -self.m1

    @property
    def dim(self) -> int:
        return 2 + 2 * self.n


def _signed_power(b: Jet, p: float) -> tuple[Jet, np.ndarray]:
    """``b**p`` with the sign kept for integer ``p``; negative bases under
    non-integer ``p`` are reported in the returned mask (their entries are NaN)."""
    if p == 0:
        return Jet.constant(np.ones(b.shape), b.order), np.zeros(b.shape, bool)
    if float(p).is_integer():
        return jets.power(b, p), np.zeros(b.shape, bool)
    masked = b.value < 0
    return jets.power(b, p), masked


def _factor_jet(cf: ConformalField, e0, m1, m2, n1, n2) -> tuple[Jet, np.ndarray]:
    w1, w2 = cf.w()
    order = w1.order
    f = jets.exp(2 * e0 * cf.phi.truncate(order))
    masked = np.zeros(w1.shape, bool)
    for base, p in ((w1 * np.sign(w1.value), -2 * m1), (w2 * np.sign(w2.value), -2 * m2)):
        if p != 0:
            f = f * jets.power(base, p)
    for base, p in ((w1, -2 * n1), (w2, -2 * n2), (cf.rho, n1 + n2)):
        term, bad = _signed_power(base, p)
        f = f * term
        masked |= bad
    return f, masked


def _field(surface, x, y) -> ConformalField:
    return ConformalField.from_surface(surface, np.asarray(x, float), np.asarray(y, float))


def conformal_factor(spec: BuildSpec, x, y=None) -> np.ndarray:
    """``e^{2 Phi}`` at the point(s); raises :class:`PowerDomain` on masked points."""
    if y is None:
        x, y = x
    f, masked = _factor_jet(_field(spec.surface, x, y), spec.e0, spec.m1, spec.m2, spec.n1, spec.n2)
    if np.any(masked):
        raise PowerDomain("negative base under a non-integer power", points=np.argwhere(masked))
    return f.value


def _assemble(g: Jet, factor: Jet, epsilons) -> Jet:
    n = len(epsilons)
    D = 2 + 2 * n
    c = np.zeros(g.shape[:-2] + (D, D, g.coeffs.shape[-1]))
    c[..., 0:2, 0:2, :] = (g * factor.expand_dims(-1).expand_dims(-1)).coeffs
    for i, e in enumerate(epsilons):
        s = 2 + 2 * i
        c[..., s:s + 2, s:s + 2, :] = e * g.coeffs
    return Jet(c, g.order)


def assemble_block_metric(surface: SurfaceSolution, epsilons, *, e0=0.0, m1=0.0, m2=0.0,
                          n1=0.0, n2=0.0) -> BlockMetric:
    """Block metric for arbitrary constants; no constraint is checked.

    Used for negative controls where ``m1 + m2 != 0`` or ``n1 + n2 != (n-1)/2``.
    """
    epsilons = tuple(epsilons)

    def G(x, y):
        cf = _field(surface, x, y)
        f, masked = _factor_jet(cf, e0, m1, m2, n1, n2)
        if np.any(masked):
            raise PowerDomain("negative base under a non-integer power", points=np.argwhere(masked))
        return _assemble(cf.g, f, epsilons)

    def mask(x, y):
        return _factor_jet(_field(surface, x, y), e0, m1, m2, n1, n2)[1]

    blocks = {"epsilons": epsilons, "e0": e0, "m1": m1, "m2": m2, "n1": n1, "n2": n2}
    return BlockMetric(G, 2 + 2 * len(epsilons), structure="conformal-block", blocks=blocks, mask=mask)


def build_metric(spec: BuildSpec) -> BlockMetric:
    return assemble_block_metric(
        spec.surface, spec.epsilons, e0=spec.e0, m1=spec.m1, m2=spec.m2, n1=spec.n1, n2=spec.n2
    )


@dataclass(frozen=True)
class SignatureSummary:
    """Signatures (positive minus negative eigenvalue counts) of ``g`` and ``G``."""

    signatureOfS: int
    signatureOfM: int
    positive: int
    negative: int


def _signature(mats) -> np.ndarray:
    ev = np.linalg.eigvalsh(mats)
    return np.sum(ev > 0, axis=-1) - np.sum(ev < 0, axis=-1), np.sum(ev > 0, axis=-1), np.sum(ev < 0, axis=-1)


def signature_summary(spec: BuildSpec, x, y) -> SignatureSummary:
    """Eigenvalue-sign counts of ``g`` and ``G`` at the sample points.

    Raises :class:`SignatureJump` if either count varies across the samples.
    """
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    cf = _field(spec.surface, x, y)
    G = build_metric(spec).jet(x, y).value
    sS, _, _ = _signature(cf.g.value)
    sM, pos, neg = _signature(G)
    for name, s in (("surface", sS), ("block", sM), ("block", pos)):
        if np.unique(s).size > 1:
            raise SignatureJump(f"{name} metric changes signature across the sample points")
    return SignatureSummary(int(sS[0]), int(sM[0]), int(pos[0]), int(neg[0]))


def write_metric_csv(bm: BlockMetric, x, y, path, format_version: int = 1) -> None:
    """Per-point CSV of the metric components: ``x, y, G_11, G_12, ..., G_DD`` (row-major)."""
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    G = bm.jet(x, y).value.reshape(x.size, -1)
    D = bm.dim
    cols = ["x", "y"] + [f"G_{a + 1}_{b + 1}" for a in range(D) for b in range(D)]
    with open(path, "w") as fh:
        fh.write(f"# format_version={format_version}\n")
        fh.write(",".join(cols) + "\n")
        for xi, yi, row in zip(x, y, G):
            fh.write(",".join(f"{v:.17g}" for v in (xi, yi, *row)) + "\n")


def valid_splits(n: int) -> list[tuple[float, float]]:
    """The three (n1, n2) splits used in sweeps, deduplicated."""
    t = (n - 1) / 2
    out = []
    for s in ((t, 0.0), (0.0, t), (t / 2, t / 2)):
        if s not in out:
            out.append(s)
    return out
