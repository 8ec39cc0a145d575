"""Marginal inference in polytree-shaped credal networks.

Exact bounds by exhaustive enumeration or branch-and-bound; outer bounds by
interval belief propagation (plain and credal-refined); inner bounds by
vertex-wise local search.
"""

__version__ = "0.1.0"

from .model import (
    ConditionalCredalTable,
    CredalNetwork,
    InvalidNetworkError,
    IntervalPotential,
    LocalSetId,
    ProbabilityInterval,
    Variable,
    ZeroEvidenceError,
    count_potential_vertices,
    expectation_bounds,
    interval_projection,
    restrict,
    validate,
)
from .geometry import (
    constrained_extreme_mass,
    interval_credal_vertices,
    prune_redundant,
    sample_simplex,
)
from .exact import (
    EnumerationCapError,
    EvaluationPlan,
    evidence_probability,
    exhaustive_bounds,
    exhaustive_scan,
    marginal,
)
from .ar import ar_normalize, lambda_combine, pi_from_parents, propagate
from .ar_plus import (
    CredalMessage,
    VertexBudget,
    VertexBudgetExceeded,
    lift_to_credal,
    local_eliminate,
    propagate_plus,
)
from .local_search import SearchState, best_vertex_for_set, multistart, optimize
from .bnb import SolveResult, SolveStats, solve, solve_interval
from .harness import (
    BenchmarkReport,
    GeneratorConfig,
    QuerySpec,
    random_polytree,
    relative_error,
    run_ensemble,
)
from .netio import NetworkFormatError, parse_network, serialize_network, write_network

__all__ = [
    "BenchmarkReport",
    "ConditionalCredalTable",
    "CredalMessage",
    "CredalNetwork",
    "EnumerationCapError",
    "EvaluationPlan",
    "GeneratorConfig",
    "IntervalPotential",
    "InvalidNetworkError",
    "LocalSetId",
    "NetworkFormatError",
    "ProbabilityInterval",
    "QuerySpec",
    "SearchState",
    "SolveResult",
    "SolveStats",
    "Variable",
    "VertexBudget",
    "VertexBudgetExceeded",
    "ZeroEvidenceError",
    "ar_normalize",
    "best_vertex_for_set",
    "constrained_extreme_mass",
    "count_potential_vertices",
    "evidence_probability",
    "exhaustive_bounds",
    "exhaustive_scan",
    "expectation_bounds",
    "interval_credal_vertices",
    "interval_projection",
    "lambda_combine",
    "lift_to_credal",
    "local_eliminate",
    "marginal",
    "multistart",
    "optimize",
    "parse_network",
    "pi_from_parents",
    "propagate",
    "propagate_plus",
    "prune_redundant",
    "random_polytree",
    "relative_error",
    "restrict",
    "run_ensemble",
    "sample_simplex",
    "serialize_network",
    "solve",
    "solve_interval",
    "validate",
    "write_network",
]
