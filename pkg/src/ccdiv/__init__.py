"""Evolving diverse, discriminating benchmark instances for chance-constrained maximum coverage."""

from .diversity import (
    MutationParams,
    Population,
    contribution,
    evolve_conventional,
    evolve_diverse,
    indicator,
    mutate_dependent,
    mutate_independent,
    select_parent,
    set_diversity,
)
from .graph import CoverageGraph, coverage_count, generate_random_graph, load_matrix_market
from .instance import (
    ChanceInstance,
    FeatureKind,
    deserialize_instance,
    feature,
    is_feasible,
    sample_initial_instance,
    serialize_instance,
    surrogate_value,
)
from .ratio import RatioReport, discounted_ratio, k_theta, threshold_from
from .solvers import Algorithm, Fitness, SolverConfig, best_objective, evaluate_fitness, run_solver

__version__ = "0.1.0"
