"""bregfix: Bregman geometries, projections, and anchored fixed-point
solvers with per-iteration inequality audits."""

from .geometry import (
    LegendreGeometry,
    dual_average,
    make_geometry,
    negative_entropy,
    p_power,
    squared_norm,
)
from .metrics import (
    bregman_distance,
    fenchel_gap,
    fenchel_gap_perturbation,
    total_convexity_modulus,
)
from .sets import (
    Box,
    ConvexSet,
    Halfspace,
    Hyperplane,
    Intersection,
    ProjectionResult,
    ScaledSimplex,
    WholeSpace,
    bregman_project,
    certify_projection,
    feasible_probes,
    pythagoras_gap,
    variational_residual,
)
from .mappings import (
    FixedPointMapping,
    identity_mapping,
    projection_mapping,
    quasi_nonexpansive_violation,
    resolvent_mapping,
)
from .halpern import (
    AuditContext,
    AuditReport,
    RunResult,
    Schedules,
    SolverConfig,
    STATUS_CONVERGED,
    STATUS_ITER_BUDGET,
    TraceRecord,
    audit_step,
    default_schedules,
    make_schedules,
    reference_limit,
    run_family,
    run_pair,
    step_family,
    step_pair,
)
from . import errors

__version__ = "0.1.0"

__all__ = [
    "LegendreGeometry", "squared_norm", "p_power", "negative_entropy",
    "make_geometry", "dual_average",
    "bregman_distance", "fenchel_gap", "fenchel_gap_perturbation",
    "total_convexity_modulus",
    "ConvexSet", "WholeSpace", "Halfspace", "Hyperplane", "Box",
    "ScaledSimplex", "Intersection", "ProjectionResult", "bregman_project",
    "certify_projection", "variational_residual", "pythagoras_gap",
    "feasible_probes",
    "FixedPointMapping", "identity_mapping", "projection_mapping",
    "resolvent_mapping", "quasi_nonexpansive_violation",
    "Schedules", "default_schedules", "make_schedules", "SolverConfig",
    "TraceRecord", "RunResult", "AuditContext", "AuditReport", "audit_step",
    "step_pair", "step_family", "run_pair", "run_family", "reference_limit",
    "STATUS_CONVERGED", "STATUS_ITER_BUDGET",
    "errors",
]
