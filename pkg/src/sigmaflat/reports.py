"""Max/RMS reduction of point-wise residual fields."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass
class ResidualEntry:
    label: str
    tag: str
    max: float
    rms: float
    n_points: int
    worst_point: tuple[float, float] | None = None
    worst_component: tuple[int, ...] | None = None
    tolerance: float | None = None

    @property
    def passed(self) -> bool | None:
        if self.tolerance is None:
            return None
        return bool(np.isfinite(self.max) and self.max <= self.tolerance)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


@dataclass
class ResidualReport:
    """Named residuals (identity label -> max/RMS over the evaluation points)."""

    entries: dict[str, ResidualEntry] = field(default_factory=dict)

    def add(self, label, values, x=None, y=None, *, tag="", tolerance=None) -> ResidualEntry:
        """Reduce ``values`` of shape ``(npoints, *components)`` and store the entry."""
        entry = reduce_residual(label, values, x, y, tag=tag, tolerance=tolerance)
        self.entries[label] = entry
        return entry

    def __getitem__(self, label) -> ResidualEntry:
        return self.entries[label]

    def __contains__(self, label):
        return label in self.entries

    def __iter__(self):
        return iter(self.entries.values())

    def max(self) -> float:
        return max((e.max for e in self), default=0.0)


def reduce_residual(label, values, x=None, y=None, *, tag="", tolerance=None) -> ResidualEntry:
    a = np.abs(np.asarray(values, dtype=float))
    if a.ndim == 0:
        a = a[None]
    n = a.shape[0]
    flat = a.reshape(n, int(np.prod(a.shape[1:], dtype=int)))
    if flat.size == 0:
        return ResidualEntry(label, tag, 0.0, 0.0, n, tolerance=tolerance)
    # NaN counts as the worst possible residual.
    score = np.where(np.isfinite(flat), flat, np.inf)
    k = int(np.argmax(score))
    p, comp = divmod(k, flat.shape[1])
    worst_point = None
    if x is not None:
        worst_point = (float(np.ravel(x)[p]), float(np.ravel(y)[p]))
    comp_idx = tuple(int(c) for c in np.unravel_index(comp, a.shape[1:])) if a.ndim > 1 else None
    mx = float(score.ravel()[k])
    rms = float(np.sqrt(np.mean(np.where(np.isfinite(flat), flat, np.inf) ** 2)))
    return ResidualEntry(label, tag, mx, rms, n, worst_point, comp_idx, tolerance)
