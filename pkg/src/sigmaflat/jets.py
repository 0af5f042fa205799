"""Truncated bivariate Taylor arithmetic.

A :class:`Jet` stores the Taylor coefficients of a field about a base point
``(x0, y0)`` up to total degree ``order``.  Coefficients are held in an array of
shape ``(*shape, K)`` where ``K`` counts the monomials ``dx**i * dy**j`` with
``i + j <= order``; the leading ``shape`` axes are free, so one Jet can carry a
whole point cloud and/or a tensor of components at once.

Arithmetic propagates exact derivatives (to rounding).  Differentiating a jet
drops one order, so a third-order jet of the graph function yields second-order
jets of its gradient, first-order Christoffel symbols and exact Ricci values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_ORDER = 3


@lru_cache(maxsize=None)
def monomials(order: int) -> tuple[tuple[int, int], ...]:
    """Graded list of exponent pairs ``(i, j)`` with ``i + j <= order``."""
    return tuple((d - j, j) for d in range(order + 1) for j in range(d + 1))


@lru_cache(maxsize=None)
def _index(order):
    return {m: k for k, m in enumerate(monomials(order))}


@lru_cache(maxsize=None)
def _mul_table(order):
    basis = monomials(order)
    idx = _index(order)
    K = len(basis)
    table = np.zeros((K * K, K))
    for p, (i1, j1) in enumerate(basis):
        for q, (i2, j2) in enumerate(basis):
            r = idx.get((i1 + i2, j1 + j2))
            if r is not None:
                table[p * K + q, r] = 1.0
    return table


@lru_cache(maxsize=None)
def _diff_matrix(order, axis):
    src = monomials(order)
    dst = _index(order - 1)
    D = np.zeros((len(src), len(dst)))
    for p, (i, j) in enumerate(src):
        if axis == 0 and i > 0:
            D[p, dst[(i - 1, j)]] = i
        elif axis == 1 and j > 0:
            D[p, dst[(i, j - 1)]] = j
    return D


@lru_cache(maxsize=None)
def _truncate_matrix(src_order, dst_order):
    dst = _index(dst_order)
    T = np.zeros((len(monomials(src_order)), len(dst)))
    for p, m in enumerate(monomials(src_order)):
        if m in dst:
            T[p, dst[m]] = 1.0
    return T


class Jet:
    """Truncated Taylor polynomial in ``(dx, dy)`` with array-valued coefficients.

    Parameters
    ----------
    coeffs : array_like, shape (..., K)
        Taylor coefficients in the order given by :func:`monomials`.
    order : int
        Truncation degree; ``K == (order + 1) * (order + 2) // 2``.
    """

    __array_priority__ = 1000

    def __init__(self, coeffs, order: int):
        coeffs = _real(coeffs)
        if coeffs.shape[-1] != len(monomials(order)):
            raise ValueError(
                f"order {order} needs {len(monomials(order))} coefficients, "
                f"got trailing axis {coeffs.shape[-1]}"
            )
        self.coeffs = coeffs
        self.order = order

    # -- construction -----------------------------------------------------
    @classmethod
    def constant(cls, value, order: int) -> Jet:
        value = _real(value)
        c = np.zeros(value.shape + (len(monomials(order)),))
        c[..., 0] = value
        return cls(c, order)

    @classmethod
    def variable(cls, base, axis: int, order: int = MAX_ORDER) -> Jet:
        """Coordinate function ``x`` (axis 0) or ``y`` (axis 1) about ``base``."""
        jet = cls.constant(base, order)
        if order >= 1:
            jet.coeffs[..., 1 + axis] = 1.0
        return jet

    @classmethod
    def coordinates(cls, x, y, order: int = MAX_ORDER) -> tuple[Jet, Jet]:
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return cls.variable(x, 0, order), cls.variable(y, 1, order)

    # -- basic properties -------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def ndim(self) -> int:
        return self.coeffs.ndim - 1

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[..., 0]

    def __repr__(self):
        return f"Jet(order={self.order}, shape={self.shape})"

    def __getitem__(self, key):
        if not isinstance(key, tuple):
            key = (key,)
        if any(k is Ellipsis for k in key):
            key = key + (slice(None),)
        return Jet(self.coeffs[key], self.order)

    def __len__(self):
        return self.shape[0]

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    def truncate(self, order: int) -> Jet:
        if order == self.order:
            return self
        if order > self.order:
            raise ValueError("cannot raise the order of a jet")
        return Jet(self.coeffs @ _truncate_matrix(self.order, order), order)

    def diff(self, axis: int) -> Jet:
        """Partial derivative along ``x`` (0) or ``y`` (1); lowers the order by one."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        return Jet(self.coeffs @ _diff_matrix(self.order, axis), self.order - 1)

    def partial(self, i: int, j: int) -> np.ndarray:
        """Value of d^(i+j) f / dx^i dy^j at the base point."""
        c = self.coeffs[..., _index(self.order)[(i, j)]]
        return c * (math.factorial(i) * math.factorial(j))

    def transpose(self, *axes) -> Jet:
        axes = axes or tuple(reversed(range(self.ndim)))
        return Jet(self.coeffs.transpose(*axes, self.ndim), self.order)

    @property
    def T(self) -> Jet:
        """Swap the last two leading axes (matrix transpose)."""
        axes = list(range(self.ndim))
        axes[-2], axes[-1] = axes[-1], axes[-2]
        return self.transpose(*axes)

    def sum(self, axis) -> Jet:
        if isinstance(axis, int):
            axis = (axis,)
        axis = tuple(a - 1 if a < 0 else a for a in axis)
        return Jet(self.coeffs.sum(axis=axis), self.order)

    def expand_dims(self, axis: int) -> Jet:
        if axis < 0:
            axis -= 1
        return Jet(np.expand_dims(self.coeffs, axis), self.order)

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            order = min(self.order, other.order)
            return self.truncate(order), other.truncate(order)
        return self, Jet.constant(other, self.order)

    def __add__(self, other):
        a, b = self._coerce(other)
        return Jet(a.coeffs + b.coeffs, a.order)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._coerce(other)
        return Jet(a.coeffs - b.coeffs, a.order)

    def __rsub__(self, other):
        a, b = self._coerce(other)
        return Jet(b.coeffs - a.coeffs, a.order)

    def __neg__(self):
        return Jet(-self.coeffs, self.order)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            other = _real(other)
            return Jet(self.coeffs * other[..., None], self.order)
        a, b = self._coerce(other)
        return Jet(_convolve(a.coeffs, b.coeffs, a.order), a.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            other = _real(other)
            with np.errstate(divide="ignore", invalid="ignore"):
                return Jet(self.coeffs / other[..., None], self.order)
        return self * reciprocal(other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            return exp(p * log(self))
        p = float(p)
        if p == 0.0:
            return Jet.constant(np.ones(self.shape), self.order)
        if p.is_integer() and 0 < p <= 8:
            out = self
            for _ in range(int(p) - 1):
                out = out * self
            return out
        return power(self, p)

    def __rpow__(self, base):
        return exp(self * np.log(base))


def _real(a) -> np.ndarray:
    """Float array; extended precision input stays extended."""
    a = np.asarray(a)
    return a.astype(np.result_type(a.dtype, float), copy=False)


def extended(a: Jet) -> Jet:
    """Copy of ``a`` with long-double coefficients (same values)."""
    return Jet(a.coeffs.astype(np.longdouble), a.order)


def inv_values(a0):
    """Inverse of stacked square matrices (values only)."""
    if a0.shape[-1] == 2 and a0.dtype == np.longdouble:
        # LAPACK has no long-double routines; 2x2 goes through the adjugate
        det = a0[..., 0, 0] * a0[..., 1, 1] - a0[..., 0, 1] * a0[..., 1, 0]
        adj = np.stack([np.stack([a0[..., 1, 1], -a0[..., 0, 1]], -1),
                        np.stack([-a0[..., 1, 0], a0[..., 0, 0]], -1)], -2)
        return adj / det[..., None, None]
    return np.linalg.inv(a0)


def _convolve(a, b, order):
    K = a.shape[-1]
    outer = a[..., :, None] * b[..., None, :]
    return outer.reshape(outer.shape[:-2] + (K * K,)) @ _mul_table(order)


def compose(a: Jet, derivs) -> Jet:
    """Evaluate ``f(a)`` given ``derivs[k] = f^(k)(a.value)`` for k = 0..order."""
    delta = Jet(a.coeffs.copy(), a.order)
    delta.coeffs[..., 0] = 0.0
    out = Jet.constant(derivs[0], a.order)
    term = None
    for k in range(1, a.order + 1):
        term = delta if term is None else term * delta
        out = out + term * (np.asarray(derivs[k]) / math.factorial(k))
    return out


def _singular(mask, *arrays):
    return [np.where(mask, np.nan, x) for x in arrays]


# Elementary functions accept Jets or plain numbers/arrays.

def exp(a):
    if not isinstance(a, Jet):
        return np.exp(a)
    e = np.exp(a.value)
    return compose(a, [e] * (a.order + 1))


def log(a):
    if not isinstance(a, Jet):
        a = np.asarray(a, float)
        return np.where(a > 0, np.log(np.where(a > 0, a, 1.0)), np.nan)
    v = a.value
    bad = ~(v > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = [np.log(np.where(bad, 1.0, v)), 1 / v, -1 / v**2, 2 / v**3]
    return compose(a, _singular(bad, *d))


def log_abs(a):
    """log|a|; derivatives are those of log a, singular only where a vanishes."""
    if not isinstance(a, Jet):
        return log(np.abs(a))
    v = a.value
    bad = v == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        d = [np.log(np.abs(np.where(bad, 1.0, v))), 1 / v, -1 / v**2, 2 / v**3]
    return compose(a, _singular(bad, *d))


def reciprocal(a):
    if not isinstance(a, Jet):
        with np.errstate(divide="ignore"):
            return np.where(np.asarray(a) == 0, np.nan, 1 / np.asarray(a, float))
    v = a.value
    bad = v == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        d = [1 / v, -1 / v**2, 2 / v**3, -6 / v**4]
    return compose(a, _singular(bad, *d))


def sqrt(a):
    if not isinstance(a, Jet):
        return np.where(np.asarray(a) >= 0, np.sqrt(np.abs(a)), np.nan)
    v = a.value
    bad = ~(v > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.sqrt(np.where(bad, 1.0, v))
        d = [s, 0.5 / s, -0.25 / s**3, 0.375 / s**5]
    return compose(a, _singular(bad, *d))


def power(a, p: float):
    """``a ** p`` for a real exponent; negative bases need an integer ``p``."""
    p = float(p)
    if not isinstance(a, Jet):
        a = np.asarray(a, float)
        if p.is_integer():
            with np.errstate(divide="ignore"):
                return np.power(a, p)
        return np.where(a > 0, np.power(np.abs(a), p), np.nan)
    v = a.value
    integer = p.is_integer()
    if integer:
        bad = (v == 0) & (p < 0)
    else:
        bad = ~(v > 0)
    safe = np.where(bad, 1.0, v)
    d = []
    coef = 1.0
    for k in range(a.order + 1):
        if integer and p >= 0 and k > p:
            d.append(np.zeros_like(v))
        else:
            d.append(coef * np.power(safe, p - k))
        coef *= p - k
    return compose(a, _singular(bad, *d))


def sin(a):
    if not isinstance(a, Jet):
        return np.sin(a)
    s, c = np.sin(a.value), np.cos(a.value)
    return compose(a, [s, c, -s, -c])


def cos(a):
    if not isinstance(a, Jet):
        return np.cos(a)
    s, c = np.sin(a.value), np.cos(a.value)
    return compose(a, [c, -s, -c, s])


POLE_TOL = 1e-12


def tan(a):
    if not isinstance(a, Jet):
        a = np.asarray(a, float)
        return np.where(np.abs(np.cos(a)) < POLE_TOL, np.nan, np.tan(a))
    bad = np.abs(np.cos(a.value)) < POLE_TOL
    t = np.tan(a.value)
    d = [t, 1 + t**2, 2 * t * (1 + t**2), 2 * (1 + t**2) * (1 + 3 * t**2)]
    return compose(a, _singular(bad, *d))


def arctan(a):
    if not isinstance(a, Jet):
        return np.arctan(a)
    v = a.value
    q = 1 + v**2
    return compose(a, [np.arctan(v), 1 / q, -2 * v / q**2, (6 * v**2 - 2) / q**3])


# -- tensor helpers -------------------------------------------------------

def asjet(x, order: int) -> Jet:
    return x if isinstance(x, Jet) else Jet.constant(x, order)


def stack(jets, axis: int = 0) -> Jet:
    """Stack jets (or constants) along a new leading axis."""
    order = min(j.order for j in jets if isinstance(j, Jet))
    shapes = [j.shape if isinstance(j, Jet) else np.shape(j) for j in jets]
    shape = np.broadcast_shapes(*shapes)
    parts = []
    for j in jets:
        j = asjet(j, order).truncate(order)
        parts.append(np.broadcast_to(j.coeffs, shape + (j.coeffs.shape[-1],)))
    if axis < 0:
        axis -= 1
    return Jet(np.stack(parts, axis=axis), order)


def einsum(subscripts: str, a, b) -> Jet:
    """Two-operand ``np.einsum`` over the leading tensor axes of jets.

    Subscripts describe only the trailing tensor axes; any extra leading
    (batch) axes are broadcast.  Either operand may be a plain array.
    """
    lhs, out = subscripts.replace(" ", "").split("->")
    sa, sb = lhs.split(",")
    if not isinstance(a, Jet) or not isinstance(b, Jet):
        if isinstance(a, Jet):
            c = np.einsum(f"...{sa}z,...{sb}->...{out}z", a.coeffs, _real(b))
            return Jet(c, a.order)
        c = np.einsum(f"...{sa},...{sb}z->...{out}z", _real(a), b.coeffs)
        return Jet(c, b.order)
    order = min(a.order, b.order)
    a, b = a.truncate(order), b.truncate(order)
    K = a.coeffs.shape[-1]
    outer = np.einsum(f"...{sa}p,...{sb}q->...{out}pq", a.coeffs, b.coeffs)
    return Jet(outer.reshape(outer.shape[:-2] + (K * K,)) @ _mul_table(order), order)


def matmul(a, b) -> Jet:
    return einsum("ij,jk->ik", a, b)


def trace(a: Jet) -> Jet:
    return Jet(np.trace(a.coeffs, axis1=-3, axis2=-2), a.order)


def det2(a: Jet) -> Jet:
    return a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]


def inv(a: Jet) -> Jet:
    """Matrix inverse of a jet-valued square matrix by a terminating Neumann series."""
    a0 = a.value
    with np.errstate(all="ignore"):
        a0inv = inv_values(a0)
    nil = Jet(a.coeffs.copy(), a.order)
    nil.coeffs[..., 0] = 0.0
    y = -einsum("ij,jk->ik", a0inv, nil)
    total = Jet.constant(np.broadcast_to(np.eye(a0.shape[-1]), a0.shape), a.order)
    term = None
    for _ in range(a.order):
        term = y if term is None else matmul(term, y)
        total = total + term
    return einsum("ij,jk->ik", total, a0inv)


def gradient(f: Jet) -> Jet:
    """Stack of (d/dx f, d/dy f) along a new trailing tensor axis."""
    return stack([f.diff(0), f.diff(1)], axis=-1)


def isfinite(j: Jet) -> np.ndarray:
    """True where every coefficient of every component is finite (per batch point)."""
    return np.all(np.isfinite(j.coeffs), axis=-1)


# -- Jet3: the exchange type ------------------------------------------------

@dataclass(frozen=True)
class Jet3:
    """Value and partial derivatives through order 3 of a scalar field.

    Attributes may carry leading batch axes: ``v`` has shape ``(...)``,
    ``d1`` ``(..., 2)``, ``d2`` ``(..., 2, 2)`` and ``d3`` ``(..., 2, 2, 2)``.
    """

    v: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray

    @classmethod
    def from_taylor(cls, jet: Jet) -> Jet3:
        if jet.order < 3:
            raise ValueError("Jet3 needs a third-order jet")
        jet = jet.truncate(3)
        shape = jet.shape
        d1 = np.empty(shape + (2,))
        d2 = np.empty(shape + (2, 2))
        d3 = np.empty(shape + (2, 2, 2))
        for a in range(2):
            d1[..., a] = jet.partial(*_counts((a,)))
            for b in range(2):
                d2[..., a, b] = jet.partial(*_counts((a, b)))
                for c in range(2):
                    d3[..., a, b, c] = jet.partial(*_counts((a, b, c)))
        return cls(jet.value.copy(), d1, d2, d3)

    def to_taylor(self) -> Jet:
        shape = np.shape(self.v)
        coeffs = np.empty(shape + (len(monomials(3)),))
        for k, (i, j) in enumerate(monomials(3)):
            idx = (0,) * i + (1,) * j
            if not idx:
                val = self.v
            elif len(idx) == 1:
                val = self.d1[..., idx[0]]
            elif len(idx) == 2:
                val = self.d2[..., idx[0], idx[1]]
            else:
                val = self.d3[..., idx[0], idx[1], idx[2]]
            coeffs[..., k] = val / (math.factorial(i) * math.factorial(j))
        return Jet(coeffs, 3)

    @property
    def shape(self):
        return np.shape(self.v)

    def __getitem__(self, key):
        return Jet3(self.v[key], self.d1[key], self.d2[key], self.d3[key])

    def finite(self) -> np.ndarray:
        return (
            np.isfinite(self.v)
            & np.all(np.isfinite(self.d1), axis=-1)
            & np.all(np.isfinite(self.d2), axis=(-2, -1))
            & np.all(np.isfinite(self.d3), axis=(-3, -2, -1))
        )


def _counts(idx):
    return idx.count(0), idx.count(1)
