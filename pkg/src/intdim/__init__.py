"""Dimension interpolation toolkit for finite point sets.

Estimates the one-parameter family of dimensions that interpolates between
Hausdorff-like and box-counting behaviour by two independent routes
(restricted covering sums and kernel capacities), runs random-subspace
projection experiments against capacity profiles, and machine-verifies the
inequalities the estimators rely on.
"""

__version__ = "0.1.0"

from .covers import CoverSumResult, box_count, restricted_cover_sum
from .equilibrium import EquilibriumResult, capacity, minimize_energy
from .errors import BudgetError, CertificateError, ConfigError
from .estimators import (
    DimensionProfileEstimator,
    IntermediateDimensionEstimator,
    ProjectionExperimentEstimator,
    as_cloud,
    check_points,
)
from .geometry import (
    IfsSystem,
    PointCloud,
    SimilarityMap,
    fill_distance,
    generate_carpet,
    generate_ifs_attractor,
    generate_sequence_set,
    interval_grid,
    load_points,
    product,
    separation,
    square_grid,
)
from .kernels import KernelSpec, gram_matrix, kernel_eval
from .profiles import (
    DimensionProfile,
    ScaleSchedule,
    capacity_fixed_point,
    cover_fixed_point,
    intermediate_dimension,
    profile_curve,
)
from .projections import (
    ProjectionReport,
    SubspaceFrame,
    project,
    projection_experiment,
    sample_subspace,
)
from .verify import (
    CheckReport,
    canonical_suite,
    check_capacity_lipschitz,
    check_kernel_comparison,
    check_monotonicity,
    check_sandwich,
    check_slab_integral,
    check_sum_lipschitz,
    check_truncated_lower_bound,
    run_canonical_checks,
)

__all__ = [
    "__version__",
    "BudgetError",
    "CertificateError",
    "CheckReport",
    "ConfigError",
    "CoverSumResult",
    "DimensionProfile",
    "DimensionProfileEstimator",
    "EquilibriumResult",
    "IfsSystem",
    "IntermediateDimensionEstimator",
    "KernelSpec",
    "PointCloud",
    "ProjectionExperimentEstimator",
    "ProjectionReport",
    "ScaleSchedule",
    "SimilarityMap",
    "SubspaceFrame",
    "as_cloud",
    "box_count",
    "canonical_suite",
    "capacity",
    "capacity_fixed_point",
    "check_capacity_lipschitz",
    "check_kernel_comparison",
    "check_monotonicity",
    "check_points",
    "check_sandwich",
    "check_slab_integral",
    "check_sum_lipschitz",
    "check_truncated_lower_bound",
    "cover_fixed_point",
    "fill_distance",
    "generate_carpet",
    "generate_ifs_attractor",
    "generate_sequence_set",
    "gram_matrix",
    "intermediate_dimension",
    "interval_grid",
    "kernel_eval",
    "load_points",
    "minimize_energy",
    "product",
    "profile_curve",
    "project",
    "projection_experiment",
    "restricted_cover_sum",
    "run_canonical_checks",
    "sample_subspace",
    "separation",
    "square_grid",
]
