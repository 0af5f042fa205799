"""Config-driven runs: surface selection, identity checks, metric build and reports.

A run config is a TOML file::

    [surface]
    name = "scherk"            # catalog name, or
    # expr = "x**2 - y**2"     # closed-form graph function, or
    # grid = "phi.csv"         # grid file, or a [surface.solve] table

    [ambient]                  # k1, k0, k2, eps (catalog surfaces bring their own)
    [constants]                # a0 a1 a2 b1 b2 e0 m1 n1 n2
    [build]                    # n, epsilons
    [points]                   # count, seed  |  nx, ny (lattice)  |  margin (grid mode)
    [tolerances]               # label = value
    [spectral]                 # k = [...], loop_center, loop_side, steps
    checks = ["minimal", ...]  # top level; omitted = every check the mode supports
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import builder, conformal, sigmalax, surfaces
from .errors import ConfigInvalid, DependencyFailed, IoFailure, SigmaflatError, SpectralPole
from .expr import ScalarExpr
from .grid import MARGIN, read_grid_csv
from .reports import reduce_residual
from .solver import SolverOptions, solve_minimal

FORMAT_VERSION = 1
THREADS_ENV = "SIGMAFLAT_THREADS"
GRID_BOUND_C = 1.0
#: Grid-mode checks use nodes whose third-derivative stencils avoid the edge
#: row and the solver's low-order closure row next to it.
GRID_EVAL_MARGIN = MARGIN + 2

ALGEBRAIC_TOL = 1e-10
RICCI_TOL = 1e-8

CONSTANT_NAMES = ("a0", "a1", "a2", "b1", "b2", "e0", "m1", "n1", "n2")


@dataclass(frozen=True)
class Check:
    label: str
    stage: int
    tag: str
    tolerance: float
    closed_form_only: bool = False


# Stages run in dependency order: surface, conformal tower, identities, build, Lax.
CHECKS = {
    c.label: c
    for c in [
        Check("minimal", 0, "minimal-surface equation", 1e-11),
        Check("id1", 0, "two-dimensional quadratic identity in phi_ab", 1e-12),
        Check("surface-ricci", 0, "r_ab - (K/2) h_ab", ALGEBRAIC_TOL),
        Check("lambda0", 0, "lambda0 + (eps/2) rho^2 K", ALGEBRAIC_TOL),
        Check("xi-w", 1, "xi1 - w2/(det g0 sqrt rho), xi2 - w1/(det g0 sqrt rho)", 1e-12),
        Check("curvature-trace", 1, "R + 1/4 g^ab tr(d_a g^-1 d_b g)", ALGEBRAIC_TOL),
        Check("oz01", 2, conformal.HARMONIC_TAGS["oz01"], 1e-9),
        Check("oz02", 2, conformal.HARMONIC_TAGS["oz02"], 1e-9),
        Check("oz03", 2, conformal.HARMONIC_TAGS["oz03"], 1e-9),
        Check("mu", 2, conformal.HARMONIC_TAGS["mu"], 1e-9),
        Check("psi-harmonic", 2, conformal.HARMONIC_TAGS["psi-harmonic"], 1e-9),
        Check("sigma", 2, "d_a (g^ab g^-1 d_b g)", ALGEBRAIC_TOL),
        Check("sigma-crosspath", 2, "general (P, Lambda) evaluator minus product-rule evaluator", 1e-12),
        Check("minimal-divergence", 2, "d_a (sqrt rho h^ab phi_b), d_a (sqrt rho h^ab)", ALGEBRAIC_TOL),
        Check("lambda-conditions", 2, "integrability conditions on Lambda = g^ab", ALGEBRAIC_TOL),
        Check("ricci-flat", 3, "R_AB of the block metric", RICCI_TOL),
        Check("zero-curvature", 4, "d_y U - d_x V + [U, V]", 1e-9),
        Check("holonomy", 4, "max |Psi(loop) - I|", 1e-7, closed_form_only=True),
    ]
}

DEFAULT_SPECTRAL = (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0)

TABLE_KEYS = {
    "surface": {"name", "params", "expr", "domain", "grid", "solve"},
    "ambient": {"k1", "k0", "k2", "eps"},
    "build": {"n", "epsilons"},
    "points": {"count", "seed", "nx", "ny", "margin"},
    "spectral": {"k", "loop_center", "loop_side", "steps"},
    "output": {"report", "csv_dir", "grid"},
}


@dataclass
class RunConfig:
    surface: dict = field(default_factory=lambda: {"name": "scherk"})
    ambient: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    build: dict = field(default_factory=dict)
    points: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    spectral: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    checks: list | None = None
    base_dir: str = "."

    @classmethod
    def from_dict(cls, data: dict, base_dir=".") -> RunConfig:
        known = {"surface", "ambient", "constants", "build", "points", "tolerances", "spectral", "output", "checks"}
        extra = set(data) - known
        if extra:
            raise ConfigInvalid(f"unknown config keys: {sorted(extra)}")
        cfg = cls(base_dir=str(base_dir), **{k: v for k, v in data.items()})
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> RunConfig:
        path = Path(path)
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigInvalid(f"config file {path} does not exist") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigInvalid(f"config file {path} is not valid TOML: {exc}") from None
        return cls.from_dict(data, path.parent)

    def as_dict(self) -> dict:
        return {
            k: getattr(self, k)
            for k in ("surface", "ambient", "constants", "build", "points", "tolerances", "spectral", "checks")
        }

    def hash(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()

    def validate(self):
        for table, allowed in TABLE_KEYS.items():
            extra = set(getattr(self, table)) - allowed
            if extra:
                raise ConfigInvalid(f"unknown keys in [{table}]: {sorted(extra)}")
        unknown = [c for c in (self.checks or []) if c not in CHECKS]
        if unknown:
            raise ConfigInvalid(f"unknown checks {unknown}; choose from {list(CHECKS)}")
        bad = set(self.constants) - set(CONSTANT_NAMES) - {"m2"}
        if bad:
            raise ConfigInvalid(f"unknown constants {sorted(bad)}")
        if "m2" in self.constants and self.constants["m2"] != -self.constants.get("m1", 0.0):
            raise ConfigInvalid("m2 is fixed to -m1; omit it or set m2 = -m1")
        n = self.build.get("n", 1)
        if not isinstance(n, int) or n < 1:
            raise ConfigInvalid(f"build.n must be a positive integer, got {n!r}")
        n1, n2 = self.constants.get("n1", 0.0), self.constants.get("n2", 0.0)
        if abs(n1 + n2 - (n - 1) / 2) > builder.CONSTRAINT_TOL:
            raise ConfigInvalid(
                f"constraint n1 + n2 = (n - 1)/2 violated: n = {n}, n1 + n2 = {n1 + n2!r}, "
                f"expected {(n - 1) / 2!r}"
            )
        eps = self.build.get("epsilons", [1] * n)
        if len(eps) != n or any(e not in (1, -1) for e in eps):
            raise ConfigInvalid(f"build.epsilons must list {n} entries from {{1, -1}}")
        src = [k for k in ("name", "expr", "grid", "solve") if k in self.surface]
        if len(src) != 1:
            raise ConfigInvalid("surface needs exactly one of name, expr, grid or a [surface.solve] table")
        if "name" in self.surface and self.surface["name"] not in surfaces.CATALOG:
            raise ConfigInvalid(f"unknown surface {self.surface['name']!r}; choose from {sorted(surfaces.CATALOG)}")
        if "grid" in self.surface and not self.path(self.surface["grid"]).exists():
            raise ConfigInvalid(f"grid file {self.surface['grid']} does not exist")
        if "expr" in self.surface:
            try:
                ScalarExpr(self.surface["expr"])
            except (SyntaxError, ValueError) as exc:
                raise ConfigInvalid(f"cannot parse surface expression: {exc}") from None
        for k in self.tolerances:
            if k not in CHECKS:
                raise ConfigInvalid(f"tolerance given for unknown check {k!r}")

    def path(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def ambient_metric(self, default=surfaces.EUCLIDEAN) -> surfaces.AmbientMetric:
        if not self.ambient:
            return default
        a = dict(k1=1.0, k0=0.0, k2=1.0, eps=1)
        a.update(self.ambient)
        try:
            return surfaces.AmbientMetric(float(a["k1"]), float(a["k0"]), float(a["k2"]), int(a["eps"]))
        except ValueError as exc:
            raise ConfigInvalid(str(exc)) from None

    def constants_obj(self) -> conformal.Constants:
        c = {k: float(v) for k, v in self.constants.items() if k not in ("n1", "n2", "m2")}
        c["m2"] = -c.get("m1", 0.0)
        return conformal.Constants(**c)


@dataclass
class CheckResult:
    label: str
    tag: str
    status: str  # "pass", "fail", "error", "skipped"
    tolerance: float | None
    entry: object = None
    message: str = ""
    values: np.ndarray | None = None
    x: np.ndarray | None = None
    y: np.ndarray | None = None

    def as_dict(self) -> dict:
        d = {"label": self.label, "tag": self.tag, "status": self.status, "tolerance": self.tolerance,
             "passed": self.status == "pass", "message": self.message}
        if self.entry is not None:
            e = self.entry
            d.update(max=e.max, rms=e.rms, n_points=e.n_points,
                     worst_point=list(e.worst_point) if e.worst_point else None,
                     worst_component=list(e.worst_component) if e.worst_component else None)
        return d


@dataclass
class Report:
    config_hash: str
    mode: str
    surface: str
    results: list
    timings: dict
    masked_points: int = 0
    spacing: float | None = None

    @property
    def passed(self) -> bool:
        return all(r.status == "pass" for r in self.results)

    def ordered(self) -> list:
        """Failing checks first, otherwise in run order."""
        return [r for r in self.results if r.status != "pass"] + [r for r in self.results if r.status == "pass"]

    def body(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "config_hash": self.config_hash,
            "mode": self.mode,
            "surface": self.surface,
            "grid_spacing": self.spacing,
            "masked_points": self.masked_points,
            "passed": self.passed,
            "checks": [r.as_dict() for r in self.ordered()],
        }

    def to_json(self) -> str:
        d = self.body()
        d["timings"] = self.timings
        return json.dumps(d, indent=2, sort_keys=True, default=_json_default)

    def __getitem__(self, label) -> CheckResult:
        for r in self.results:
            if r.label == label:
                return r
        raise KeyError(label)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o))


def threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _map_points(fn, x, y, nthreads):
    """Apply a point-wise function in chunks; results are concatenated in order."""
    if nthreads <= 1 or x.size < 2 * nthreads:
        return fn(x, y)
    chunks = np.array_split(np.arange(x.size), nthreads)
    with ThreadPoolExecutor(nthreads) as pool:
        parts = list(pool.map(lambda idx: fn(x[idx], y[idx]), chunks))
    return np.concatenate(parts, axis=0)


def resolve_surface(cfg: RunConfig) -> surfaces.SurfaceSolution:
    s = cfg.surface
    if "name" in s:
        params = dict(s.get("params", {}))
        if s["name"] == "plane" and cfg.ambient:
            params["ambient"] = cfg.ambient_metric()
        return surfaces.catalog_surface(s["name"], **params)
    ambient = cfg.ambient_metric()
    if "expr" in s:
        d = s.get("domain", [-1.0, 1.0, -1.0, 1.0])
        return surfaces.SurfaceSolution(ScalarExpr(s["expr"]), ambient, surfaces.Domain(*map(float, d)),
                                        name="expr", params={"expr": s["expr"]})
    if "grid" in s:
        g = read_grid_csv(cfg.path(s["grid"]))
        dom = surfaces.Domain(g.x0, g.x0 + g.hx * (g.nx - 1), g.y0, g.y0 + g.hy * (g.ny - 1))
        return surfaces.SurfaceSolution(g, ambient, dom, name="grid", params={"grid": s["grid"]})
    return solve_from_config(cfg)


def solve_from_config(cfg: RunConfig) -> surfaces.SurfaceSolution:
    sv = cfg.surface["solve"]
    try:
        dom = surfaces.Domain(*map(float, sv["domain"]))
        boundary = ScalarExpr(sv["boundary"])
        nx = int(sv["nx"])
        ny = int(sv.get("ny", nx))
    except (KeyError, TypeError, ValueError, SyntaxError) as exc:
        raise ConfigInvalid(f"surface.solve needs domain, boundary and nx: {exc}") from None
    opts = SolverOptions(tol=float(sv.get("tol", 1e-10)), max_iter=int(sv.get("max_iter", 50)),
                         closure=int(sv.get("closure", 2)))
    return solve_minimal(cfg.ambient_metric(), dom, lambda X, Y: boundary(x=X, y=Y), nx, ny, opts)


def _points(cfg: RunConfig, surface):
    """Evaluation points and the number of masked points dropped."""
    p = cfg.points
    if surface.is_grid:
        x, y, _ = surface.grid_points(int(p.get("margin", GRID_EVAL_MARGIN)))
        if x.size == 0:
            raise ConfigInvalid("grid is too small to leave nodes inside the evaluation margin")
        return x, y, 0
    d = surface.domain
    if "nx" in p:
        nx, ny = int(p["nx"]), int(p.get("ny", p["nx"]))
        X, Y = np.meshgrid(np.linspace(d.xmin, d.xmax, nx), np.linspace(d.ymin, d.ymax, ny), indexing="ij")
        x, y = X.ravel(), Y.ravel()
        ok = d.contains(x, y)
        j = surface.jet(x[ok], y[ok], strict=False)
        ok2 = j.finite() & (np.abs(surfaces.rho_of(j, surface.ambient)) > surfaces.RHO_TOL)
        keep = np.flatnonzero(ok)[ok2]
        return x[keep], y[keep], x.size - keep.size
    x, y = surface.sample(int(p.get("count", 200)), seed=int(p.get("seed", 0)))
    return x, y, 0


def _check_fns(cfg: RunConfig, surface, build_spec):
    amb = surface.ambient
    consts = cfg.constants_obj()
    sp = cfg.spectral
    ks = [float(k) for k in sp.get("k", DEFAULT_SPECTRAL)]

    def jet(x, y):
        return surface.jet(x, y)

    def field_(x, y):
        return conformal.ConformalField.from_surface(surface, x, y)

    def curv(x, y):
        j = jet(x, y)
        c = surfaces.surface_curvature(j, amb)
        return j, c

    def surface_ricci(x, y):
        j, c = curv(x, y)
        return c.r - 0.5 * c.K[..., None, None] * surfaces.induced_h(j, amb)

    def lambda0(x, y):
        j, c = curv(x, y)
        return c.lambda0 + 0.5 * amb.eps * c.rho**2 * c.K

    def xi_w(x, y):
        f = field_(x, y)
        return conformal.scalar_catalog(f.metric(), f.induced(), f.phi_jet, consts, amb).cross_residual

    def harmonic(label):
        return lambda x, y: conformal.harmonic_fields(field_(x, y), consts)[label]

    def sigma_cross(x, y):
        f = field_(x, y)
        gen = sigmalax.general_sigma_residual(sigmalax.field_sigma_config(f), x, y)
        return gen - conformal.sigma_residual(f)[0]

    def min_div(x, y):
        s1, s2 = conformal.minimal_divergence_residuals(field_(x, y))
        return np.concatenate([s1[..., None], s2], axis=-1)

    def lam(x, y):
        f = field_(x, y)
        return np.stack(sigmalax.lambda_conditions(sigmalax.field_sigma_config(f), x, y), -1)

    def ricci_flat(x, y):
        from .curvature import ricci

        return ricci(builder.build_metric(build_spec), x, y, with_riemann=False).Ric

    def zero_curv(x, y):
        f = field_(x, y)
        out = []
        for k in ks:
            try:
                out.append(sigmalax.zero_curvature_residual(f, k))
            except SpectralPole:
                continue
        if not out:
            raise SpectralPole("every requested k sits on the pole k^2 + sigma = 0")
        return np.stack(out, axis=-3)

    return {
        "minimal": lambda x, y: surfaces.minimal_residual(jet(x, y), amb),
        "id1": lambda x, y: surfaces.id1_residual(jet(x, y), amb),
        "surface-ricci": surface_ricci,
        "lambda0": lambda0,
        "xi-w": xi_w,
        "curvature-trace": lambda x, y: conformal.prop1_residual(field_(x, y)),
        **{lab: harmonic(lab) for lab in ("oz01", "oz02", "oz03", "mu", "psi-harmonic")},
        "sigma": lambda x, y: conformal.sigma_residual(field_(x, y))[0],
        "sigma-crosspath": sigma_cross,
        "minimal-divergence": min_div,
        "lambda-conditions": lam,
        "ricci-flat": ricci_flat,
        "zero-curvature": zero_curv,
    }


def _default_loop_center(surface, side):
    """Domain center, or the first quarter point whose loop stays inside the domain."""
    d = surface.domain
    cx, cy = (d.xmin + d.xmax) / 2, (d.ymin + d.ymax) / 2
    qx, qy = (d.xmax - d.xmin) / 4, (d.ymax - d.ymin) / 4
    t = np.linspace(0.0, 1.0, 65)
    for c in [(cx, cy), (cx + qx, cy), (cx - qx, cy), (cx, cy + qy), (cx, cy - qy),
              (cx + qx, cy + qy), (cx - qx, cy - qy), (cx + qx, cy - qy), (cx - qx, cy + qy)]:
        v = sigmalax.square_loop(c, side)
        w = np.vstack([v, v[:1]])
        px = (w[:-1, None, 0] + t * (w[1:, None, 0] - w[:-1, None, 0])).ravel()
        py = (w[:-1, None, 1] + t * (w[1:, None, 1] - w[:-1, None, 1])).ravel()
        if np.all(d.contains(px, py)):
            return list(c)
    return [cx, cy]


def _holonomy(cfg: RunConfig, surface):
    sp = cfg.spectral
    d = surface.domain
    side = float(sp.get("loop_side", 0.2))
    steps = int(sp.get("steps", 4000))
    center = sp.get("loop_center") or _default_loop_center(surface, side)
    loop = sigmalax.square_loop(center, side)
    vals = []
    for k in [float(k) for k in sp.get("k", DEFAULT_SPECTRAL)]:
        try:
            vals.append(sigmalax.transport_wavefunction(surface, k, loop, steps))
        except SpectralPole:
            continue
    return np.array([vals]), np.array([center[0]]), np.array([center[1]])


def run_pipeline(cfg: RunConfig) -> Report:
    """Run the configured checks in dependency order and collect a :class:`Report`.

    A failing dependency (e.g. a solver that does not converge) marks the
    remaining checks as skipped instead of aborting the run.
    """
    cfg.validate()
    t0 = time.perf_counter()
    timings = {}
    requested = cfg.checks
    if requested is None:
        # every check that applies in the run's mode
        requested = [c for c in CHECKS if not (CHECKS[c].closed_form_only and _mode(cfg) == "grid")]
    order = sorted(requested, key=lambda c: (CHECKS[c].stage, list(CHECKS).index(c)))
    results = []
    try:
        surface = resolve_surface(cfg)
    except ConfigInvalid:
        raise
    except SigmaflatError as exc:
        err = DependencyFailed(f"surface could not be prepared: {exc}")
        for c in order:
            results.append(CheckResult(c, CHECKS[c].tag, "skipped", None, message=str(err)))
        return Report(cfg.hash(), _mode(cfg), _surface_name(cfg), results, {"total": time.perf_counter() - t0})
    timings["surface"] = time.perf_counter() - t0
    mode = "grid" if surface.is_grid else "closed-form"
    spacing = surface.phi.hx if surface.is_grid else None
    x, y, masked = _points(cfg, surface)

    consts = cfg.constants
    n = cfg.build.get("n", 1)
    build_spec = None
    if any(CHECKS[c].stage == 3 for c in order):
        build_spec = builder.BuildSpec(
            surface, n=n, epsilons=tuple(cfg.build.get("epsilons", [1] * n)),
            e0=float(consts.get("e0", 0.0)), m1=float(consts.get("m1", 0.0)),
            n1=float(consts.get("n1", 0.0)), n2=float(consts.get("n2", 0.0)),
        )
    fns = _check_fns(cfg, surface, build_spec)
    nthreads = threads()
    for label in order:
        chk = CHECKS[label]
        tol = cfg.tolerances.get(label)
        if tol is None:
            tol = GRID_BOUND_C * spacing**2 if spacing is not None else chk.tolerance
        tol = float(tol)
        t1 = time.perf_counter()
        if chk.closed_form_only and surface.is_grid:
            results.append(CheckResult(label, chk.tag, "skipped", tol, message="needs a closed-form surface"))
            continue
        try:
            if label == "holonomy":
                vals, px, py = _holonomy(cfg, surface)
            else:
                px, py = x, y
                vals = _map_points(fns[label], x, y, nthreads)
        except (SigmaflatError, ArithmeticError) as exc:
            results.append(CheckResult(label, chk.tag, "error", tol, message=f"{type(exc).__name__}: {exc}"))
            timings[label] = time.perf_counter() - t1
            continue
        entry = reduce_residual(label, vals, px, py, tag=chk.tag, tolerance=tol)
        status = "pass" if entry.passed else "fail"
        results.append(CheckResult(label, chk.tag, status, tol, entry, values=vals, x=px, y=py))
        timings[label] = time.perf_counter() - t1
    timings["total"] = time.perf_counter() - t0
    return Report(cfg.hash(), mode, surface.name, results, timings, masked, spacing)


def _mode(cfg):
    return "grid" if ("grid" in cfg.surface or "solve" in cfg.surface) else "closed-form"


def _surface_name(cfg):
    return cfg.surface.get("name") or cfg.surface.get("expr") or ("grid" if "grid" in cfg.surface else "solved")


def emit_outputs(report: Report, report_path, csv_dir=None) -> int:
    """Write the JSON report and per-check ``x,y,value`` CSVs; return the exit status.

    Raises :class:`IoFailure` if a file cannot be written.
    """
    try:
        report_path = Path(report_path)
        report_path.parent.mkdir(parents=True, exist_ok=True)
        report_path.write_text(report.to_json() + "\n")
        if csv_dir is not None:
            csv_dir = Path(csv_dir)
            csv_dir.mkdir(parents=True, exist_ok=True)
            for r in report.results:
                if r.values is None:
                    continue
                write_residual_csv(csv_dir / f"{r.label}.csv", r.x, r.y, r.values)
    except OSError as exc:
        raise IoFailure(f"cannot write outputs: {exc}") from exc
    return 0 if report.passed else 1


def write_residual_csv(path, x, y, values) -> None:
    """One row per point; ``value`` is the largest component magnitude there."""
    a = np.abs(np.asarray(values, float)).reshape(len(np.ravel(x)), -1)
    v = np.where(np.all(np.isfinite(a), axis=1), np.max(a, axis=1), math.inf)
    with open(path, "w") as fh:
        fh.write(f"# format_version={FORMAT_VERSION}\n")
        fh.write("x,y,value\n")
        for xi, yi, vi in zip(np.ravel(x), np.ravel(y), v):
            fh.write(f"{xi:.17g},{yi:.17g},{vi:.17g}\n")
