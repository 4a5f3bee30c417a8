"""Small elitist evolutionary optimizer with pluggable assessment.

Scalarized mode runs a generational EA: binary tournament parent
selection, recombination, mutation, and survival of the single best
individual alongside the offspring. Pareto-rank mode merges parents and
offspring and keeps the lowest ranks, breaking ties at random.
"""

from __future__ import annotations

import copy
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from .pareto import ParetoRankAssessor
from .problems import BoxSpace, GridDecision, GridSpace, ProblemDefinition
from .scalarizers import Assessment, ScalarAssessor

IMPROVEMENT_TOL = 1e-12


class Mode(str, Enum):
    SCALARIZED = "scalarized"
    PARETO_RANK = "pareto_rank"


class StopReason(str, Enum):
    STAGNATION = "stagnation"
    BUDGET = "budget"


@dataclass(frozen=True)
class RunConfig:
    population_size: int = 40
    max_evaluations: int = 10_000
    stagnation_window: int = 100
    mutation_rate: float = 0.5
    mutation_scale: float = 0.05
    crossover_rate: float = 0.7
    seed: int = 0
    mode: Mode = Mode.SCALARIZED

    def validate(self) -> list[str]:
        problems = []
        if self.population_size < 4:
            problems.append("population_size: must be at least 4")
        if self.max_evaluations < self.population_size:
            problems.append("max_evaluations: must cover at least the initial population")
        if self.stagnation_window < 1:
            problems.append("stagnation_window: must be positive")
        if not 0.0 <= self.mutation_rate <= 1.0:
            problems.append("mutation_rate: must lie in [0, 1]")
        if not self.mutation_scale >= 0.0:
            problems.append("mutation_scale: must be non-negative")
        if not 0.0 <= self.crossover_rate <= 1.0:
            problems.append("crossover_rate: must lie in [0, 1]")
        if not 0 <= self.seed < 2**64:
            problems.append("seed: must be an unsigned 64-bit integer")
        if not isinstance(self.mode, Mode):
            problems.append(f"mode: unknown mode {self.mode!r}")
        return problems

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["mode"] = self.mode.value
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RunConfig:
        fields = dict(data)
        if "mode" in fields:
            fields["mode"] = Mode(fields["mode"])
        for key in ("population_size", "max_evaluations", "stagnation_window", "seed"):
            if key in fields:
                fields[key] = int(fields[key])
        return cls(**fields)


@dataclass
class Individual:
    decision: Any
    objectives: np.ndarray
    violations: np.ndarray
    assessment: Assessment | int | None = None

    @property
    def quality(self) -> float:
        if isinstance(self.assessment, Assessment):
            return self.assessment.quality
        raise TypeError("individual has no scalar assessment")

    @property
    def rank(self) -> int:
        if isinstance(self.assessment, (int, np.integer)):
            return int(self.assessment)
        raise TypeError("individual has no Pareto rank")


@dataclass
class RunResult:
    final_population: list[Individual]
    best_history: list[float]
    evaluation_count: int
    stop_reason: StopReason
    mode: Mode = Mode.SCALARIZED
    generations: int = field(default=0)

    @property
    def best(self) -> Individual:
        """Highest-quality individual (scalarized) or first rank-0 one."""
        if self.mode is Mode.SCALARIZED:
            return max(self.final_population, key=lambda ind: ind.quality)
        return min(self.final_population, key=lambda ind: ind.rank)

    def objectives(self) -> np.ndarray:
        return np.array([ind.objectives for ind in self.final_population])

    def to_summary(self) -> dict[str, Any]:
        best = self.best
        summary = {
            "mode": self.mode.value,
            "evaluation_count": self.evaluation_count,
            "generations": self.generations,
            "stop_reason": self.stop_reason.value,
            "best_objectives": [float(x) for x in best.objectives],
            "best_quality": best.quality if self.mode is Mode.SCALARIZED else None,
        }
        if self.mode is Mode.PARETO_RANK:
            summary["front_size"] = int(sum(ind.rank == 0 for ind in self.final_population))
        return summary


# -- variation ---------------------------------------------------------------


def mutate(decision, space, config: RunConfig, rng: np.random.Generator):
    """Return a mutated copy; the input is left untouched.

    Box decisions: each coordinate moves with probability ``mutation_rate``
    by a Gaussian step of ``mutation_scale`` times the box width, then is
    clamped. GRID decisions: each operation is reassigned and each order
    position swapped with probability ``mutation_rate``.
    """
    if isinstance(space, BoxSpace):
        x = np.asarray(decision, dtype=float)
        hit = rng.random(space.dim) < config.mutation_rate
        step = rng.normal(0.0, 1.0, space.dim) * (config.mutation_scale * space.width)
        return np.clip(np.where(hit, x + step, x), space.lower, space.upper)
    if isinstance(space, GridSpace):
        inst = space.instance
        assignment = list(decision.assignment)
        order = list(decision.order)
        n = len(order)
        for i in range(n):
            if rng.random() < config.mutation_rate:
                options = [m for m in inst.admissible(i) if m != assignment[i]]
                if options:
                    assignment[i] = options[int(rng.integers(len(options)))]
        for pos in range(n):
            if rng.random() < config.mutation_rate:
                other = int(rng.integers(n))
                order[pos], order[other] = order[other], order[pos]
        return GridDecision(tuple(assignment), tuple(order))
    raise TypeError(f"unsupported decision space {type(space).__name__}")


def order_crossover(a: Sequence[int], b: Sequence[int], rng: np.random.Generator) -> tuple[int, ...]:
    """OX1: keep a random slice of ``a``, fill the rest in ``b``'s order."""
    n = len(a)
    i, j = sorted(int(x) for x in rng.integers(0, n + 1, size=2))
    kept = set(a[i:j])
    fill = iter(x for x in b if x not in kept)
    return tuple(a[p] if i <= p < j else next(fill) for p in range(n))


def recombine(a, b, space, rng: np.random.Generator):
    """Child inheriting from both parents.

    Box decisions use a per-coordinate arithmetic blend, so each child
    coordinate stays between the parents' values. GRID decisions take each
    machine from a random parent and combine orders by order crossover.
    """
    if isinstance(space, BoxSpace):
        x, y = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        if x.shape != y.shape:
            raise ValueError("parents differ in encoding")
        alpha = rng.random(x.shape)
        child = x + alpha * (y - x)
        return np.clip(child, np.minimum(x, y), np.maximum(x, y))
    if isinstance(space, GridSpace):
        if not (isinstance(a, GridDecision) and isinstance(b, GridDecision)) or len(a.order) != len(b.order):
            raise ValueError("parents differ in encoding")
        pick = rng.random(len(a.assignment)) < 0.5
        assignment = tuple(x if p else y for x, y, p in zip(a.assignment, b.assignment, pick))
        return GridDecision(assignment, order_crossover(a.order, b.order, rng))
    raise TypeError(f"unsupported decision space {type(space).__name__}")


# -- analysis ----------------------------------------------------------------


def _objective_rows(population) -> np.ndarray:
    if isinstance(population, np.ndarray):
        return np.atleast_2d(population)
    return np.array([ind.objectives if isinstance(ind, Individual) else ind for ind in population], dtype=float)


def roi_fraction(population, region: Sequence[tuple[float | None, float | None] | None]) -> float:
    """Share of individuals whose raw objectives lie in the closed box.

    ``region`` has one ``(low, high)`` pair per objective; ``None`` for a
    whole entry or one side leaves it unbounded.
    """
    rows = _objective_rows(population)
    if rows.size == 0:
        return 0.0
    if len(region) != rows.shape[1]:
        raise ValueError(f"region has {len(region)} intervals for {rows.shape[1]} objectives")
    inside = np.ones(rows.shape[0], dtype=bool)
    for col, interval in enumerate(region):
        if interval is None:
            continue
        lo, hi = interval
        if lo is not None:
            inside &= rows[:, col] >= lo
        if hi is not None:
            inside &= rows[:, col] <= hi
    return float(np.mean(inside))


@dataclass(frozen=True)
class GridSearchResult:
    decision: np.ndarray
    objectives: np.ndarray
    quality: float


def grid_search(problem: ProblemDefinition, assessor: ScalarAssessor, resolution) -> GridSearchResult:
    """Exhaustive search over a regular grid of a box decision space.

    Ties go to the first grid point in row-major order.
    """
    if problem.evaluate_batch is None or not isinstance(problem.space, BoxSpace):
        raise TypeError(f"grid search needs a box problem with batch evaluation, got {problem.name!r}")
    decisions = problem.space.grid(resolution)
    objectives, violations = problem.evaluate_batch(decisions)
    q = assessor.quality_batch(objectives, violations)
    best = int(np.argmax(q))
    return GridSearchResult(decisions[best], objectives[best], float(q[best]))


# -- main loop ---------------------------------------------------------------


class _Counter:
    def __init__(self, problem: ProblemDefinition):
        self.problem = problem
        self.count = 0

    def __call__(self, decision) -> tuple[np.ndarray, np.ndarray]:
        self.count += 1
        objectives, violations = self.problem.evaluate(decision)
        return np.asarray(objectives, dtype=float), np.asarray(violations, dtype=float)


def _check_inputs(problem: ProblemDefinition, assessor, config: RunConfig) -> None:
    problems = config.validate()
    if problems:
        raise ValueError("invalid run configuration: " + "; ".join(problems))
    if assessor.k != problem.k:
        raise ValueError(f"assessor expects {assessor.k} objectives, problem {problem.name!r} has {problem.k}")
    if config.mode is Mode.SCALARIZED and not isinstance(assessor, ScalarAssessor):
        raise TypeError("scalarized mode needs a scalar assessor")
    if config.mode is Mode.PARETO_RANK and not isinstance(assessor, ParetoRankAssessor):
        raise TypeError("Pareto-rank mode needs a ParetoRankAssessor")


def evolve(problem: ProblemDefinition, assessor, config: RunConfig) -> RunResult:
    """Run one seeded optimization; identical inputs give identical results.

    Stops once the best quality (scalarized) or the non-dominated set
    (Pareto rank) has not improved for ``stagnation_window`` generations,
    or when the evaluation budget is spent.
    """
    _check_inputs(problem, assessor, config)
    rng = np.random.default_rng(config.seed)
    evaluate = _Counter(problem)
    space = problem.space

    def spawn(decision) -> Individual:
        objectives, violations = evaluate(decision)
        return Individual(decision, objectives, violations)

    population = [spawn(space.sample(rng)) for _ in range(config.population_size)]
    if config.mode is Mode.SCALARIZED:
        return _evolve_scalarized(population, assessor, config, rng, spawn, evaluate, space)
    return _evolve_pareto(population, assessor, config, rng, spawn, evaluate, space)


def _breed(parent_a, pick_parent, config, rng, space):
    if rng.random() < config.crossover_rate:
        child = recombine(parent_a.decision, pick_parent().decision, space, rng)
    else:
        child = copy.copy(parent_a.decision)
    return mutate(child, space, config, rng)


def _evolve_scalarized(population, assessor, config, rng, spawn, evaluate, space) -> RunResult:
    n = config.population_size
    for ind in population:
        ind.assessment = assessor.assess(ind.objectives, ind.violations)
    qualities = np.array([ind.quality for ind in population])
    best = float(qualities.max())
    history = [best]
    stagnant = 0
    generations = 0

    def tournament() -> Individual:
        i, j = rng.integers(n, size=2)
        return population[i] if qualities[i] >= qualities[j] else population[j]

    while True:
        remaining = config.max_evaluations - evaluate.count
        if remaining <= 0:
            reason = StopReason.BUDGET
            break
        elite = int(np.argmax(qualities))
        offspring = []
        for _ in range(min(n - 1, remaining)):
            child = spawn(_breed(tournament(), tournament, config, rng, space))
            child.assessment = assessor.assess(child.objectives, child.violations)
            offspring.append(child)
        survivors = [population[elite], *offspring]
        if len(survivors) < n:
            # budget ran out mid-generation: refill with the best old individuals
            rest = [i for i in np.argsort(-qualities, kind="stable") if i != elite]
            survivors += [population[i] for i in rest[: n - len(survivors)]]
        population = survivors
        qualities = np.array([ind.quality for ind in population])
        generations += 1
        current = float(qualities.max())
        if current > best + IMPROVEMENT_TOL:
            stagnant = 0
        else:
            stagnant += 1
        best = max(best, current)
        history.append(current)
        if stagnant >= config.stagnation_window:
            reason = StopReason.STAGNATION
            break
    return RunResult(population, history, evaluate.count, reason, Mode.SCALARIZED, generations)


def _evolve_pareto(population, assessor, config, rng, spawn, evaluate, space) -> RunResult:
    n = config.population_size

    def assign_ranks(pop) -> np.ndarray:
        ranks = assessor.rank([ind.objectives for ind in pop], [ind.violations for ind in pop])
        for ind, r in zip(pop, ranks):
            ind.assessment = int(r)
        return ranks

    ranks = assign_ranks(population)
    history = [float(np.sum(ranks == 0))]
    stagnant = 0
    generations = 0

    def tournament() -> Individual:
        i, j = rng.integers(n, size=2)
        if ranks[i] == ranks[j]:
            return population[i] if rng.random() < 0.5 else population[j]
        return population[i] if ranks[i] < ranks[j] else population[j]

    while True:
        remaining = config.max_evaluations - evaluate.count
        if remaining <= 0:
            reason = StopReason.BUDGET
            break
        offspring = [spawn(_breed(tournament(), tournament, config, rng, space)) for _ in range(min(n, remaining))]
        union = population + offspring
        union_ranks = assign_ranks(union)
        shuffled = rng.permutation(len(union))
        chosen = shuffled[np.argsort(union_ranks[shuffled], kind="stable")][:n]
        improved = bool(np.any((chosen >= n) & (union_ranks[chosen] == 0)))
        population = [union[i] for i in sorted(chosen)]
        ranks = assign_ranks(population)
        generations += 1
        stagnant = 0 if improved else stagnant + 1
        history.append(float(np.sum(ranks == 0)))
        if stagnant >= config.stagnation_window:
            reason = StopReason.STAGNATION
            break
    return RunResult(population, history, evaluate.count, reason, Mode.PARETO_RANK, generations)
