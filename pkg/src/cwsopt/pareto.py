"""Dominance relations, non-dominated filtering and Pareto ranking.

All comparisons work in maximize orientation. Minimized objectives are
sign-flipped once, when an :class:`ObjectiveVector` is built from raw values.
Functions taking a "set of points" accept a 2-D array (rows are points) or
a sequence of :class:`ObjectiveVector` / array-likes.
"""

from __future__ import annotations

import csv
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .objectives import Direction, ObjectiveSpec
from .scalarizers import PenaltySpec, penalty

INT64_MAX = 2**63 - 1


@dataclass(frozen=True)
class ObjectiveVector:
    """Objective values in maximize orientation plus the flip flags."""

    values: tuple[float, ...]
    flipped: tuple[bool, ...]

    def __post_init__(self):
        if len(self.values) != len(self.flipped):
            raise ValueError("one orientation flag per value expected")
        if not all(np.isfinite(self.values)):
            raise ValueError("objective values must be finite")

    @classmethod
    def from_raw(cls, raw: Sequence[float], directions: Sequence[Direction] | None = None) -> ObjectiveVector:
        if directions is None:
            directions = [Direction.MAXIMIZE] * len(raw)
        if len(directions) != len(raw):
            raise ValueError("one direction per objective expected")
        flipped = tuple(d is Direction.MINIMIZE for d in directions)
        values = tuple(-float(v) if f else float(v) for v, f in zip(raw, flipped))
        return cls(values, flipped)

    @property
    def raw(self) -> tuple[float, ...]:
        return tuple(-v if f else v for v, f in zip(self.values, self.flipped))

    def __len__(self) -> int:
        return len(self.values)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


@dataclass(frozen=True)
class ConstrainedPoint:
    """Objective vector with per-constraint violations normalized to [0, 1]."""

    objectives: ObjectiveVector
    violations: tuple[float, ...] = ()

    def __post_init__(self):
        if any(not 0.0 <= v <= 1.0 for v in self.violations):
            raise ValueError("violations must be normalized to [0, 1]")

    @property
    def feasible(self) -> bool:
        return all(v == 0 for v in self.violations)

    @property
    def total_violation(self) -> float:
        return float(sum(self.violations))


def _vec(p) -> np.ndarray:
    if isinstance(p, ObjectiveVector):
        return np.asarray(p.values, dtype=float)
    return np.asarray(p, dtype=float)


def _matrix(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        m = points.astype(float, copy=False)
    else:
        points = list(points)
        if not points:
            raise ValueError("empty point set")
        m = np.array([_vec(p) for p in points], dtype=float)
    if m.ndim != 2 or m.shape[0] == 0:
        raise ValueError("expected a non-empty set of equal-length points")
    return m


def _subset(points, mask: np.ndarray):
    if isinstance(points, np.ndarray):
        return points[mask]
    return [p for p, keep in zip(points, mask) if keep]


def dominates(a, b) -> bool:
    """True iff ``a`` is at least as good everywhere and strictly better once."""
    x, y = _vec(a), _vec(b)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    return bool(np.all(x >= y) and np.any(x > y))


def constrained_dominates(a: ConstrainedPoint, b: ConstrainedPoint) -> bool:
    if len(a.objectives) != len(b.objectives) or len(a.violations) != len(b.violations):
        raise ValueError("dimension mismatch between constrained points")
    fa, fb = a.feasible, b.feasible
    if fa and not fb:
        return True
    if fa and fb:
        return dominates(a.objectives, b.objectives)
    if not fa and not fb:
        return a.total_violation < b.total_violation
    return False


def _dominance_matrix(m: np.ndarray) -> np.ndarray:
    """D[i, j] is True iff row i dominates row j."""
    ge = np.all(m[:, None, :] >= m[None, :, :], axis=-1)
    gt = np.any(m[:, None, :] > m[None, :, :], axis=-1)
    return ge & gt


def non_dominated_mask(points) -> np.ndarray:
    m = _matrix(points)
    return ~np.any(_dominance_matrix(m), axis=0)


def non_dominated_filter(points):
    """Points not dominated by any other input point; duplicates are all kept."""
    return _subset(points, non_dominated_mask(points))


def weakly_non_dominated_mask(points) -> np.ndarray:
    m = _matrix(points)
    strictly = np.all(m[:, None, :] > m[None, :, :], axis=-1)
    return ~np.any(strictly, axis=0)


def weakly_non_dominated_filter(points):
    """Points for which no other point is strictly better in every objective."""
    return _subset(points, weakly_non_dominated_mask(points))


def ideal_vector(points) -> np.ndarray:
    """Componentwise maximum over the set."""
    return _matrix(points).max(axis=0)


def front_budget(k: int, s: int, limit: int = INT64_MAX) -> int:
    """Support points ``s ** (k - 1)`` needed to cover a k-objective front.

    Raises :class:`OverflowError` when the count exceeds ``limit`` (a signed
    64-bit counter by default).
    """
    if int(k) != k or int(s) != s:
        raise TypeError("k and s must be integers")
    if k < 2:
        raise ValueError(f"need at least 2 objectives, got k={k}")
    if s < 2:
        raise ValueError(f"need at least 2 points per axis, got s={s}")
    result = int(s) ** (int(k) - 1)
    if result > limit:
        raise OverflowError(f"{s}^{k - 1} exceeds {limit}")
    return result


def pareto_rank(points, violations=None) -> np.ndarray:
    """Front index of every point by repeated peeling (0 = non-dominated).

    With ``violations`` (rows of normalized violations), constrained
    dominance replaces plain dominance.
    """
    m = _matrix(points)
    n = m.shape[0]
    if violations is None:
        dom = _dominance_matrix(m)
    else:
        v = np.asarray(violations, dtype=float).reshape(n, -1)
        dom = _constrained_dominance_matrix(m, v)
    ranks = np.full(n, -1, dtype=int)
    remaining = np.ones(n, dtype=bool)
    r = 0
    while remaining.any():
        dominated = np.any(dom[remaining][:, remaining], axis=0)
        idx = np.flatnonzero(remaining)[~dominated]
        ranks[idx] = r
        remaining[idx] = False
        r += 1
    return ranks


def _constrained_dominance_matrix(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    feasible = np.all(v == 0, axis=1)
    total = v.sum(axis=1)
    dom = _dominance_matrix(m)
    both_feasible = feasible[:, None] & feasible[None, :]
    both_infeasible = ~feasible[:, None] & ~feasible[None, :]
    return (
        (feasible[:, None] & ~feasible[None, :])
        | (both_feasible & dom)
        | (both_infeasible & (total[:, None] < total[None, :]))
    )


def verify_pareto_via_epsilon(candidate, sample) -> bool:
    """Check non-dominance by solving every epsilon-constrained subproblem.

    For each objective j the others act as lower bounds fixed at the
    candidate's values; the candidate passes if no sample point beats it on
    objective j while meeting those bounds, for every j.
    """
    c = _vec(candidate)
    m = _matrix(sample)
    if m.shape[1] != c.shape[0]:
        raise ValueError("candidate and sample differ in objective count")
    if not np.any(np.all(m == c, axis=1)):
        raise ValueError("candidate is not a member of the sample")
    k = c.shape[0]
    for j in range(k):
        others = np.arange(k) != j
        meets = np.all(m[:, others] >= c[others], axis=1)
        if np.any(meets & (m[:, j] > c[j])):
            return False
    return True


class ParetoRankAssessor:
    """Population-level assessment by Pareto rank, used as the baseline mode.

    Violations reported by the problem are turned into normalized
    violations ``1 - penalty(v)`` and ranked by constrained dominance.
    """

    kind = "pareto_rank"

    def __init__(self, specs: Sequence[ObjectiveSpec], penalties: Sequence[PenaltySpec] = ()):
        self.specs = tuple(specs)
        self.penalties = tuple(penalties)
        self._signs = np.array([-1.0 if s.direction is Direction.MINIMIZE else 1.0 for s in self.specs])

    @property
    def k(self) -> int:
        return len(self.specs)

    def oriented(self, raw) -> np.ndarray:
        return np.asarray(raw, dtype=float) * self._signs

    def normalized_violations(self, violations) -> np.ndarray:
        v = list(violations) if violations is not None else []
        if len(v) != len(self.penalties):
            raise ValueError(f"{len(v)} violations reported but {len(self.penalties)} penalty functions configured")
        return np.array([1.0 - penalty(float(x), p) for x, p in zip(v, self.penalties)])

    def rank(self, raws, violations=None) -> np.ndarray:
        m = self.oriented(np.atleast_2d(raws))
        if not self.penalties:
            return pareto_rank(m)
        v = np.array([self.normalized_violations(row) for row in violations])
        return pareto_rank(m, v)


def write_front_csv(
    path: str | Path,
    raw_objectives,
    ranks: Sequence[int],
    names: Sequence[str],
) -> None:
    """One row per point: raw objective columns followed by ``rank``."""
    rows = np.atleast_2d(np.asarray(raw_objectives, dtype=float))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*names, "rank"])
        for row, r in zip(rows, ranks):
            writer.writerow([format_float(x) for x in row] + [int(r)])


def read_points_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Read a header + numeric rows CSV; a ``rank`` column, if any, is dropped."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: missing header row")
        keep = [i for i, h in enumerate(header) if h.strip() != "rank"]
        rows = [[float(r[i]) for i in keep] for r in reader if r]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return [header[i].strip() for i in keep], np.array(rows)


def format_float(x: float) -> str:
    return format(float(x), ".17g")
