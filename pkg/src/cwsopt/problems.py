"""Test problems with known or enumerable fronts.

ARC
    Convex quarter disc; every front point is reachable by some weighting.
DENT
    Front ``f2 = h(f1)`` whose left part bulges inward, so a weighted sum
    can only reach its end point there.
GRID
    Small workflow scheduling instance with alternative machines, evaluated
    by list scheduling into job time, job cost, makespan and utilization,
    plus due-date violations.
"""

from __future__ import annotations

import itertools
import json
import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .objectives import Direction, ObjectiveSpec
from .scalarizers import PenaltySpec

DENT_AMPLITUDE = 0.15


class InstanceError(ValueError):
    """Raised for malformed GRID instances or decisions."""


@dataclass(frozen=True)
class BoxSpace:
    """Real-valued decision vectors inside ``[lower, upper]``."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def width(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return x.shape == (self.dim,) and bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper)

    def grid(self, resolution: int | Sequence[int]) -> np.ndarray:
        """All points of a regular grid, one row per point."""
        if isinstance(resolution, int):
            resolution = [resolution] * self.dim
        axes = [np.linspace(lo, hi, n) for lo, hi, n in zip(self.lower, self.upper, resolution)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass(frozen=True)
class ProblemDefinition:
    """A multi-objective problem as seen by the optimizer.

    ``evaluate`` maps a decision to ``(raw objectives, violations)``.
    ``evaluate_batch`` (box problems only) does the same for a matrix of
    decisions and is used by grid search.
    """

    name: str
    space: Any
    objectives: tuple[ObjectiveSpec, ...]
    evaluate: Callable[[Any], tuple[np.ndarray, np.ndarray]]
    evaluate_batch: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]] | None = None
    violation_names: tuple[str, ...] = ()
    default_penalties: tuple[PenaltySpec, ...] = ()

    @property
    def k(self) -> int:
        return len(self.objectives)


# -- ARC ---------------------------------------------------------------------

ARC_SPACE = BoxSpace((0.0, 0.0), (math.pi / 2, 1.0))


def _check_box(decision, space: BoxSpace) -> np.ndarray:
    x = np.asarray(decision, dtype=float)
    if not space.contains(x):
        raise ValueError(f"decision {decision!r} outside {space}")
    return x


def arc_evaluate(decision) -> np.ndarray:
    """``(r cos x, r sin x)`` for angle x in [0, pi/2] and radius r in [0, 1]."""
    x, r = _check_box(decision, ARC_SPACE)
    return np.array([r * math.cos(x), r * math.sin(x)])


def arc_evaluate_batch(decisions: np.ndarray) -> np.ndarray:
    d = np.atleast_2d(decisions)
    return np.stack([d[:, 1] * np.cos(d[:, 0]), d[:, 1] * np.sin(d[:, 0])], axis=1)


# -- DENT --------------------------------------------------------------------

DENT_SPACE = BoxSpace((0.0, 0.0), (1.0, 1.0))


def dent_h(x):
    """Front shape ``1 - x - 0.15 sin(2 pi x)``; strictly decreasing, h(0)=1, h(1)=0."""
    return 1.0 - x - DENT_AMPLITUDE * np.sin(2.0 * np.pi * x)


def dent_evaluate(decision) -> np.ndarray:
    x, r = _check_box(decision, DENT_SPACE)
    return np.array([x, r * float(dent_h(x))])


def dent_evaluate_batch(decisions: np.ndarray) -> np.ndarray:
    d = np.atleast_2d(decisions)
    return np.stack([d[:, 0], d[:, 1] * dent_h(d[:, 0])], axis=1)


def analytic_front(problem: str, t: float) -> np.ndarray:
    """Point of the true front of ARC or DENT at parameter t in [0, 1]."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    name = problem.lower()
    if name == "arc":
        return np.array([math.cos(t * math.pi / 2), math.sin(t * math.pi / 2)])
    if name == "dent":
        return np.array([t, float(dent_h(t))])
    raise ValueError(f"no analytic front for problem {problem!r}")


def _unit_specs() -> tuple[ObjectiveSpec, ...]:
    return (
        ObjectiveSpec("f1", Direction.MAXIMIZE, 0.0, 1.0, weight=0.5, priority=1),
        ObjectiveSpec("f2", Direction.MAXIMIZE, 0.0, 1.0, weight=0.5, priority=1),
    )


def _no_violations(fn):
    empty = np.zeros(0)

    def evaluate(decision):
        return fn(decision), empty

    return evaluate


def _no_violations_batch(fn):
    def evaluate(decisions):
        f = fn(decisions)
        return f, np.zeros((f.shape[0], 0))

    return evaluate


def arc_problem() -> ProblemDefinition:
    return ProblemDefinition(
        "arc",
        ARC_SPACE,
        _unit_specs(),
        _no_violations(arc_evaluate),
        _no_violations_batch(arc_evaluate_batch),
    )


def dent_problem() -> ProblemDefinition:
    return ProblemDefinition(
        "dent",
        DENT_SPACE,
        _unit_specs(),
        _no_violations(dent_evaluate),
        _no_violations_batch(dent_evaluate_batch),
    )


# -- GRID --------------------------------------------------------------------


@dataclass(frozen=True)
class Operation:
    id: str
    machines: tuple[str, ...]


@dataclass(frozen=True)
class Job:
    name: str
    operations: tuple[Operation, ...]
    due_date: float
    budget: float


@dataclass(frozen=True)
class Machine:
    name: str
    durations: Mapping[str, float]
    costs: Mapping[str, float]


@dataclass(frozen=True)
class GridInstance:
    """Jobs made of operation chains, and machines with per-operation tables.

    Operations are addressed by their position in the flattened list
    ``instance.operations`` (job by job, chain order).
    """

    jobs: tuple[Job, ...]
    machines: tuple[Machine, ...]
    _ops: tuple[tuple[int, Operation], ...] = field(init=False, repr=False, compare=False)
    _admissible: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "jobs", tuple(self.jobs))
        object.__setattr__(self, "machines", tuple(self.machines))
        problems = self.validate()
        if problems:
            raise InstanceError("invalid GRID instance: " + "; ".join(problems))
        ops = tuple((j, op) for j, job in enumerate(self.jobs) for op in job.operations)
        index = {m.name: i for i, m in enumerate(self.machines)}
        admissible = tuple(tuple(index[name] for name in op.machines) for _, op in ops)
        object.__setattr__(self, "_ops", ops)
        object.__setattr__(self, "_admissible", admissible)

    def validate(self) -> list[str]:
        problems = []
        if not self.jobs:
            problems.append("jobs: at least one job required")
        if not self.machines:
            problems.append("machines: at least one machine required")
        names = [m.name for m in self.machines]
        if len(set(names)) != len(names):
            problems.append("machines: duplicate machine names")
        by_name = {m.name: m for m in self.machines}
        seen_ops = set()
        for job in self.jobs:
            if not job.operations:
                problems.append(f"jobs[{job.name}]: empty operation chain")
            for op in job.operations:
                if op.id in seen_ops:
                    problems.append(f"operation {op.id!r}: duplicate id")
                seen_ops.add(op.id)
                if not op.machines:
                    problems.append(f"operation {op.id!r}: no admissible machine")
                for mname in op.machines:
                    m = by_name.get(mname)
                    if m is None:
                        problems.append(f"operation {op.id!r}: unknown machine {mname!r}")
                        continue
                    d, c = m.durations.get(op.id), m.costs.get(op.id)
                    if d is None or c is None:
                        problems.append(f"machine {mname!r}: no duration/cost for {op.id!r}")
                    elif not (d > 0 and c > 0):
                        problems.append(f"machine {mname!r}: duration and cost for {op.id!r} must be positive")
        return problems

    @property
    def operations(self) -> tuple[tuple[int, Operation], ...]:
        """(job index, operation) pairs in flattened order."""
        return self._ops

    @property
    def n_operations(self) -> int:
        return len(self._ops)

    def admissible(self, op_index: int) -> tuple[int, ...]:
        return self._admissible[op_index]

    def duration(self, op_index: int, machine: int) -> float:
        return self.machines[machine].durations[self._ops[op_index][1].id]

    def cost(self, op_index: int, machine: int) -> float:
        return self.machines[machine].costs[self._ops[op_index][1].id]

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> GridInstance:
        try:
            machines = tuple(
                Machine(
                    str(m["name"]),
                    {str(k): float(v) for k, v in m["durations"].items()},
                    {str(k): float(v) for k, v in m["costs"].items()},
                )
                for m in data["machines"]
            )
            jobs = tuple(
                Job(
                    str(j["name"]),
                    tuple(Operation(str(o["id"]), tuple(str(x) for x in o["machines"])) for o in j["operations"]),
                    float(j["due_date"]),
                    float(j.get("budget", math.inf)),
                )
                for j in data["jobs"]
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise InstanceError(f"malformed GRID instance: {exc!r}") from exc
        return cls(jobs, machines)

    def to_dict(self) -> dict[str, Any]:
        return {
            "machines": [
                {"name": m.name, "durations": dict(m.durations), "costs": dict(m.costs)} for m in self.machines
            ],
            "jobs": [
                {
                    "name": j.name,
                    "due_date": j.due_date,
                    "budget": j.budget,
                    "operations": [{"id": o.id, "machines": list(o.machines)} for o in j.operations],
                }
                for j in self.jobs
            ],
        }


def load_grid_instance(path: str | Path) -> GridInstance:
    with open(path) as fh:
        return GridInstance.from_dict(json.load(fh))


@dataclass(frozen=True)
class GridDecision:
    """Machine per operation plus a dispatch priority over operations."""

    assignment: tuple[int, ...]
    order: tuple[int, ...]


@dataclass(frozen=True)
class GridSpace:
    instance: GridInstance

    def contains(self, decision: GridDecision) -> bool:
        n = self.instance.n_operations
        return (
            len(decision.assignment) == n
            and all(m in self.instance.admissible(i) for i, m in enumerate(decision.assignment))
            and sorted(decision.order) == list(range(n))
        )

    def sample(self, rng: np.random.Generator) -> GridDecision:
        n = self.instance.n_operations
        assignment = tuple(
            int(adm[rng.integers(len(adm))]) for adm in (self.instance.admissible(i) for i in range(n))
        )
        order = tuple(int(i) for i in rng.permutation(n))
        return GridDecision(assignment, order)

    def enumerate(self):
        """Every (assignment, order) pair; only sensible for tiny instances."""
        n = self.instance.n_operations
        choices = [self.instance.admissible(i) for i in range(n)]
        for assignment in itertools.product(*choices):
            for order in itertools.permutations(range(n)):
                yield GridDecision(tuple(assignment), tuple(order))


@dataclass(frozen=True)
class JobBounds:
    time_min: float
    time_max: float
    cost_min: float
    cost_max: float


@dataclass(frozen=True)
class GridBounds:
    jobs: tuple[JobBounds, ...]
    makespan_lower: float
    makespan_upper: float


def grid_bounds(instance: GridInstance) -> GridBounds:
    """Per-job time/cost ranges along the chain and estimated makespan range.

    The makespan upper bound is the summed slowest job time divided by the
    smallest number of admissible machines of any operation, where that
    divisor is capped by the job count (a single job cannot run in parallel).
    """
    job_bounds = []
    for j, job in enumerate(instance.jobs):
        t_lo = t_hi = c_lo = c_hi = 0.0
        for i, (jj, _) in enumerate(instance.operations):
            if jj != j:
                continue
            ds = [instance.duration(i, m) for m in instance.admissible(i)]
            cs = [instance.cost(i, m) for m in instance.admissible(i)]
            t_lo += min(ds)
            t_hi += max(ds)
            c_lo += min(cs)
            c_hi += max(cs)
        job_bounds.append(JobBounds(t_lo, t_hi, c_lo, c_hi))
    min_alternatives = min(len(instance.admissible(i)) for i in range(instance.n_operations))
    divisor = min(min_alternatives, len(instance.jobs))
    lower = max(b.time_min for b in job_bounds)
    upper = sum(b.time_max for b in job_bounds) / divisor
    return GridBounds(tuple(job_bounds), lower, upper)


@dataclass(frozen=True)
class Schedule:
    start: tuple[float, ...]
    end: tuple[float, ...]
    job_completion: tuple[float, ...]
    job_processing: tuple[float, ...]
    job_cost: tuple[float, ...]
    makespan: float
    busy_time: float


def grid_schedule(instance: GridInstance, decision: GridDecision) -> Schedule:
    """Decode a decision by list scheduling.

    Operations are dispatched in priority order, skipping any whose chain
    predecessor is not yet placed. Each starts as soon as its predecessor
    has finished and its machine is free (no insertion into earlier gaps).
    """
    n = instance.n_operations
    if len(decision.assignment) != n:
        raise InstanceError(f"assignment covers {len(decision.assignment)} of {n} operations")
    for i, m in enumerate(decision.assignment):
        if m not in instance.admissible(i):
            raise InstanceError(f"machine {m} not admissible for operation {i}")
    if sorted(decision.order) != list(range(n)):
        raise InstanceError("order must be a permutation of all operations")

    ops = instance.operations
    predecessor = [i - 1 if i > 0 and ops[i - 1][0] == ops[i][0] else -1 for i in range(n)]
    machine_free = [0.0] * len(instance.machines)
    start = [0.0] * n
    end = [0.0] * n
    placed = [False] * n
    pending = list(decision.order)
    while pending:
        for pos, i in enumerate(pending):
            p = predecessor[i]
            if p < 0 or placed[p]:
                break
        pending.pop(pos)
        m = decision.assignment[i]
        ready = end[predecessor[i]] if predecessor[i] >= 0 else 0.0
        start[i] = max(ready, machine_free[m])
        end[i] = start[i] + instance.duration(i, m)
        machine_free[m] = end[i]
        placed[i] = True

    n_jobs = len(instance.jobs)
    completion = [0.0] * n_jobs
    processing = [0.0] * n_jobs
    cost = [0.0] * n_jobs
    busy = 0.0
    for i, (j, _) in enumerate(ops):
        m = decision.assignment[i]
        d = instance.duration(i, m)
        completion[j] = max(completion[j], end[i])
        processing[j] += d
        cost[j] += instance.cost(i, m)
        busy += d
    return Schedule(tuple(start), tuple(end), tuple(completion), tuple(processing), tuple(cost), max(end), busy)


def _relative(value: float, lo: float, hi: float) -> float:
    if hi > lo:
        return (value - lo) / (hi - lo)
    # single choice along the whole chain: only queueing can push past it
    return 0.0 if value <= lo else 1.0


def grid_evaluate(
    instance: GridInstance, decision: GridDecision, bounds: GridBounds | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Objectives and violations of one schedule.

    Objectives (raw): mean relative job time and mean relative job cost
    (position within each job's [min, max] range; 0 is best, queueing can
    push job time past 1), makespan, utilization rate. Violations: number
    of late jobs and summed lateness.
    """
    if bounds is None:
        bounds = grid_bounds(instance)
    s = grid_schedule(instance, decision)
    rel_time = [_relative(t, b.time_min, b.time_max) for t, b in zip(s.job_completion, bounds.jobs)]
    rel_cost = [_relative(c, b.cost_min, b.cost_max) for c, b in zip(s.job_cost, bounds.jobs)]
    utilization = s.busy_time / (len(instance.machines) * s.makespan)
    delays = [max(0.0, c - job.due_date) for c, job in zip(s.job_completion, instance.jobs)]
    objectives = np.array([float(np.mean(rel_time)), float(np.mean(rel_cost)), s.makespan, utilization])
    violations = np.array([float(sum(d > 0 for d in delays)), float(sum(delays))])
    return objectives, violations


def grid_objective_specs(instance: GridInstance, bounds: GridBounds | None = None) -> tuple[ObjectiveSpec, ...]:
    """Default specs with the example CWS configuration for scheduling.

    Job time and job cost form the first priority group (thresholds 0.4
    and 0.25), makespan and utilization the second.
    """
    if bounds is None:
        bounds = grid_bounds(instance)
    lo, hi = bounds.makespan_lower, bounds.makespan_upper
    if hi <= lo:
        hi = lo + 1.0
    return (
        ObjectiveSpec("job_time", Direction.MINIMIZE, 0.0, 1.0, weight=0.3, priority=1, threshold=0.4),
        ObjectiveSpec("job_cost", Direction.MINIMIZE, 0.0, 1.0, weight=0.4, priority=1, threshold=0.25),
        ObjectiveSpec("makespan", Direction.MINIMIZE, lo, hi, weight=0.2, priority=2),
        ObjectiveSpec("utilization", Direction.MAXIMIZE, 0.0, 1.0, weight=0.1, priority=2),
    )


def grid_problem(instance: GridInstance) -> ProblemDefinition:
    bounds = grid_bounds(instance)

    def evaluate(decision):
        return grid_evaluate(instance, decision, bounds)

    n_jobs = len(instance.jobs)
    penalties = (
        # one more than the job count keeps all-late schedules comparable
        PenaltySpec.linear(n_jobs + 1),
        PenaltySpec.exponential(max(job.due_date for job in instance.jobs)),
    )
    return ProblemDefinition(
        "grid",
        GridSpace(instance),
        grid_objective_specs(instance, bounds),
        evaluate,
        None,
        ("late_jobs", "total_delay"),
        penalties,
    )


def make_problem(name: str, instance: GridInstance | None = None) -> ProblemDefinition:
    key = name.lower()
    if key == "arc":
        return arc_problem()
    if key == "dent":
        return dent_problem()
    if key == "grid":
        if instance is None:
            raise ValueError("the grid problem needs an instance")
        return grid_problem(instance)
    raise ValueError(f"unknown problem {name!r}")
