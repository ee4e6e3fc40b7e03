"""Placement and routing of sphere-decomposed rigid bodies.

Rigid bodies are modeled as disjoint sphere sets, connected by piecewise
linear routes and packed inside optional non-convex boundaries by a
multi-start augmented-Lagrangian solver with target-cascading and
active-set variants.
"""

from .boundary import BoundaryModel, cube_boundary, frustum_boundary, hard_inclusion_check
from .constraints import ConstraintMode, ConstraintSet, assemble, pair_count, sphere_clearance
from .frameworks import (
    AtcOptions,
    GaParams,
    InitMethod,
    atc_solve,
    init_equally_spaced,
    init_genetic,
    init_random,
    nested_solve,
    soi_solve,
)
from .geometry import Body, Layout, Pose, Route, Sphere, rotation_matrix, transform_point
from .objectives import ObjectiveWeights, preset_weights
from .problem import DomainBounds, ProblemSpec, build_nlp
from .solver import NlpProblem, SolveReport, SolverOptions, check_gradient, minimize
from .benchmarks import (
    BenchmarkResult,
    decompose_primitive,
    enumerate_discrete_optima,
    gen_aircraft_benchmark,
    gen_cuboid_benchmark,
    gen_lshape_benchmark,
    gen_priorwork_benchmark,
    gen_unique_benchmark,
    generate_benchmark,
    warm_start_run,
)

__version__ = "0.1.0"

__all__ = [
    "AtcOptions", "BenchmarkResult", "Body", "BoundaryModel", "ConstraintMode",
    "ConstraintSet", "DomainBounds", "GaParams", "InitMethod", "Layout",
    "NlpProblem", "ObjectiveWeights", "Pose", "ProblemSpec", "Route",
    "SolveReport", "SolverOptions", "Sphere", "assemble", "atc_solve",
    "build_nlp", "check_gradient", "cube_boundary", "decompose_primitive",
    "enumerate_discrete_optima", "frustum_boundary", "gen_aircraft_benchmark",
    "gen_cuboid_benchmark", "gen_lshape_benchmark", "gen_priorwork_benchmark",
    "gen_unique_benchmark", "generate_benchmark", "hard_inclusion_check",
    "init_equally_spaced", "init_genetic", "init_random", "minimize",
    "nested_solve", "pair_count", "preset_weights", "rotation_matrix",
    "soi_solve", "sphere_clearance", "transform_point", "warm_start_run",
]
