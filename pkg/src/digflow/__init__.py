"""Dually flat geometry, canonical divergences and divergence-gradient flows."""

from __future__ import annotations

from .divergence import (
    DivergenceReport,
    bregman_divergence,
    canonical_divergence,
    canonical_divergence_vector_form,
    curve_divergence,
    dual_canonical_divergence,
)
from .dynamics import (
    FlowTrajectory,
    PhaseState,
    divergence_gradient,
    euler_lagrange_residual,
    gradient_flow,
    hamiltonian,
    lagrangian,
    momentum,
    truncated_action,
    velocity_from_momentum,
)
from .errors import (
    ChartBoundaryError,
    ChartMismatchError,
    ConvergenceError,
    DegenerateMetricError,
    DigflowError,
    FlatDirectionError,
    SingularTimeError,
    StationaryCurveError,
)
from .geodesic import Curve, GeodesicPath, exp_map, geodesic_bvp, geodesic_ivp, inverse_exp, project_structure
from .manifold import (
    DUAL,
    LEVI_CIVITA,
    PRIMAL,
    ChartPoint,
    DuallyFlatModel,
    ManifoldModel,
    TangentVector,
    duality_residual,
    euclidean_model,
    invert_dual_coordinates,
    legendre_dual,
    metric_at,
    recover_structure_from_divergence,
)
from .registry import build_model

__version__ = "0.1.0"

__all__ = [
    "ChartBoundaryError",
    "ChartMismatchError",
    "ChartPoint",
    "ConvergenceError",
    "Curve",
    "DUAL",
    "DegenerateMetricError",
    "DigflowError",
    "DivergenceReport",
    "DuallyFlatModel",
    "FlatDirectionError",
    "FlowTrajectory",
    "GeodesicPath",
    "LEVI_CIVITA",
    "ManifoldModel",
    "PRIMAL",
    "PhaseState",
    "SingularTimeError",
    "StationaryCurveError",
    "TangentVector",
    "bregman_divergence",
    "build_model",
    "canonical_divergence",
    "canonical_divergence_vector_form",
    "curve_divergence",
    "divergence_gradient",
    "dual_canonical_divergence",
    "duality_residual",
    "euclidean_model",
    "euler_lagrange_residual",
    "exp_map",
    "geodesic_bvp",
    "geodesic_ivp",
    "gradient_flow",
    "hamiltonian",
    "invert_dual_coordinates",
    "inverse_exp",
    "lagrangian",
    "legendre_dual",
    "metric_at",
    "momentum",
    "project_structure",
    "recover_structure_from_divergence",
    "truncated_action",
    "velocity_from_momentum",
]
