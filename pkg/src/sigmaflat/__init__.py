"""Minimal graph surfaces, their conformal sigma models and Ricci-flat block metrics."""

from .builder import (
    BuildSpec,
    SignatureSummary,
    assemble_block_metric,
    build_metric,
    conformal_factor,
    signature_summary,
    write_metric_csv,
)
from .conformal import (
    ConformalField,
    Constants,
    conformal_curvature,
    harmonic_fields,
    harmonic_residuals,
    laplace_beltrami,
    minimal_divergence_residuals,
    prop1_residual,
    scalar_catalog,
    sigma_residual,
)
from .curvature import BlockMetric, christoffel, constant_metric, ricci, ricci_flat_report
from .errors import *  # noqa: F401,F403
from .expr import ScalarExpr, jet_eval, point
from .grid import GridField, jet_from_grid, read_grid_csv, write_grid_csv
from .jets import Jet, Jet3
from .reports import ResidualReport
from .sigmalax import (
    GeneralSigmaConfig,
    LaxPair,
    general_sigma_residual,
    lambda_conditions,
    lax_matrices,
    square_loop,
    transport_wavefunction,
    zero_curvature_residual,
)
from .solver import SolverOptions, solve_minimal
from .surfaces import (
    EUCLIDEAN,
    AmbientMetric,
    Domain,
    SurfaceSolution,
    catalog_surface,
    id1_residual,
    minimal_residual,
    surface_curvature,
)

__version__ = "0.1.0"
