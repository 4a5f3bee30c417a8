"""Multi-objective assessment: weighted sum, epsilon-constrained method,
cascaded weighted sum, Pareto dominance, and a small elitist optimizer."""

from .evolver import Individual, Mode, RunConfig, RunResult, evolve, grid_search, mutate, recombine, roi_fraction
from .objectives import (
    Direction,
    ObjectiveSpec,
    SpecError,
    TunedNormalization,
    normalize,
    threshold_to_raw,
    tuned_normalize,
    validate_spec,
)
from .pareto import (
    ConstrainedPoint,
    ObjectiveVector,
    ParetoRankAssessor,
    constrained_dominates,
    dominates,
    front_budget,
    ideal_vector,
    non_dominated_filter,
    pareto_rank,
    verify_pareto_via_epsilon,
    weakly_non_dominated_filter,
)
from .problems import (
    GridDecision,
    GridInstance,
    ProblemDefinition,
    analytic_front,
    arc_evaluate,
    arc_problem,
    dent_evaluate,
    dent_problem,
    grid_bounds,
    grid_evaluate,
    grid_problem,
    load_grid_instance,
    make_problem,
)
from .scalarizers import (
    Assessment,
    CwsAssessor,
    CwsConfig,
    EpsilonConstrainedAssessor,
    PenaltySpec,
    WeightedSumAssessor,
    active_group_count,
    apply_penalties,
    cws,
    epsilon_constrained,
    penalty,
    weighted_sum,
)

__version__ = "0.1.0"
