"""Uniform rectangular grids and finite-difference jets.

Values are stored as an ``(nx, ny)`` array: ``values[i, j]`` samples the field
at ``(x0 + i*hx, y0 + j*hy)``.  Flattening is row-major, so ``i`` is the slow
index.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import BoundaryMargin
from .jets import Jet3

FORMAT_VERSION = 1
MIN_NODES = 7

#: Accuracy order of every derivative returned by :func:`jet_from_grid`.
STENCIL_ORDER = 4
#: Cells a node must keep from the boundary (half-width of the d3 stencil).
MARGIN = 3


@lru_cache(maxsize=None)
def fd_weights(offsets: tuple[int, ...], deriv: int) -> np.ndarray:
    """Weights ``w`` with ``sum(w[k] * f(x + offsets[k] h)) ~ h**deriv * f^(deriv)(x)``.

    Solves the moment (Vandermonde) system; the result is exact on
    polynomials of degree ``len(offsets) - 1``.
    """
    s = np.asarray(offsets, dtype=float)
    n = len(s)
    A = np.vander(s, n, increasing=True).T
    b = np.zeros(n)
    b[deriv] = float(np.prod(np.arange(1, deriv + 1)))
    w = np.linalg.solve(A, b)
    w[np.abs(w) < 1e-13] = 0.0
    return w


# Centered order-4 stencils: first, second and third derivative.
CENTERED = {
    1: ((-2, -1, 0, 1, 2), 1),
    2: ((-2, -1, 0, 1, 2), 2),
    3: ((-3, -2, -1, 0, 1, 2, 3), 3),
}


@dataclass(frozen=True)
class GridField:
    nx: int
    ny: int
    x0: float
    y0: float
    hx: float
    hy: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(self.nx, self.ny)
        object.__setattr__(self, "values", values)
        if self.nx < MIN_NODES or self.ny < MIN_NODES:
            raise ValueError(f"grid needs at least {MIN_NODES} nodes per axis")
        if not (self.hx > 0 and self.hy > 0):
            raise ValueError("grid spacings must be positive")

    @classmethod
    def sample(cls, f, x0, y0, hx, hy, nx, ny) -> GridField:
        """Sample ``f(X, Y)`` (vectorized) on the lattice."""
        X, Y = np.meshgrid(x0 + hx * np.arange(nx), y0 + hy * np.arange(ny), indexing="ij")
        return cls(nx, ny, x0, y0, hx, hy, np.asarray(f(X, Y), float))

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.hx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.y0 + self.hy * np.arange(self.ny)

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    def interior(self, margin: int = MARGIN):
        """Index arrays (i, j) of all nodes at least ``margin`` cells from the edge."""
        i, j = np.meshgrid(
            np.arange(margin, self.nx - margin), np.arange(margin, self.ny - margin), indexing="ij"
        )
        return i.ravel(), j.ravel()


def _apply(values, i, j, wx, offx, wy, offy):
    out = np.zeros(np.shape(i))
    for a, cx in zip(offx, wx):
        if cx == 0.0:
            continue
        for b, cy in zip(offy, wy):
            if cy == 0.0:
                continue
            out += cx * cy * values[i + a, j + b]
    return out


def _stencil(order):
    if order == 0:
        return (0,), np.ones(1)
    offs, d = CENTERED[order]
    return offs, fd_weights(offs, d)


def jet_from_grid(f: GridField, i, j) -> tuple[Jet3, int]:
    """Finite-difference third-order jet at node(s) ``(i, j)``.

    All derivatives, mixed ones included, are built from tensor products of the
    centered order-4 stencils, so every entry has truncation error O(h**4).

    Returns
    -------
    jet : Jet3
    order : int
        Truncation order of the stencils (:data:`STENCIL_ORDER`).
    """
    i = np.asarray(i)
    j = np.asarray(j)
    if (
        np.any(i < MARGIN)
        or np.any(j < MARGIN)
        or np.any(i > f.nx - 1 - MARGIN)
        or np.any(j > f.ny - 1 - MARGIN)
    ):
        raise BoundaryMargin(f"nodes must be at least {MARGIN} cells from the grid edge")

    def D(px, py):
        ox, wx = _stencil(px)
        oy, wy = _stencil(py)
        return _apply(f.values, i, j, wx, ox, wy, oy) / (f.hx**px * f.hy**py)

    shape = np.shape(i)
    d1 = np.empty(shape + (2,))
    d2 = np.empty(shape + (2, 2))
    d3 = np.empty(shape + (2, 2, 2))
    cache = {}
    for a in range(2):
        for b in range(2):
            for c in range(2):
                idx = (a, b, c)
                key = (idx.count(0), idx.count(1))
                if key not in cache:
                    cache[key] = D(*key)
                d3[..., a, b, c] = cache[key]
            key = ((a, b).count(0), (a, b).count(1))
            if key not in cache:
                cache[key] = D(*key)
            d2[..., a, b] = cache[key]
        d1[..., a] = D(1 - a, a)
    return Jet3(f.values[i, j].copy(), d1, d2, d3), STENCIL_ORDER


def write_grid_csv(f: GridField, path) -> None:
    """Write ``f`` as CSV; floats use 17 significant digits (bit-faithful)."""
    buf = io.StringIO()
    buf.write(f"# sigmaflat grid format_version={FORMAT_VERSION}\n")
    buf.write("nx,ny,x0,y0,hx,hy\n")
    buf.write(f"{f.nx},{f.ny},{f.x0:.17g},{f.y0:.17g},{f.hx:.17g},{f.hy:.17g}\n")
    for row in f.values:
        buf.write(",".join(f"{v:.17g}" for v in row))
        buf.write("\n")
    with open(os.fspath(path), "w") as fh:
        fh.write(buf.getvalue())


def read_grid_csv(path) -> GridField:
    with open(os.fspath(path)) as fh:
        raw = [ln.strip() for ln in fh if ln.strip()]
    for ln in raw:
        if ln.startswith("#") and "format_version=" in ln:
            version = int(ln.split("format_version=")[1].split()[0])
            if version != FORMAT_VERSION:
                raise ValueError(f"{path}: unsupported grid format_version {version}")
    lines = [ln for ln in raw if not ln.startswith("#")]
    if lines[0].replace(" ", "") != "nx,ny,x0,y0,hx,hy":
        raise ValueError(f"{path}: missing grid header line")
    head = lines[1].split(",")
    nx, ny = int(head[0]), int(head[1])
    x0, y0, hx, hy = (float(v) for v in head[2:6])
    values = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:]])
    if values.shape != (nx, ny):
        raise ValueError(f"{path}: expected {nx}x{ny} values, found {values.shape}")
    return GridField(nx, ny, x0, y0, hx, hy, values)
