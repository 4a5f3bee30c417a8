"""Weighted sum, epsilon-constrained method, cascaded weighted sum, penalties.

The module-level functions are the plain, validated operations. The
``*Assessor`` classes bundle objective specs, penalties and an aggregation
into a single callable used by the optimizer and the harness; they turn
raw objective and violation vectors into an :class:`Assessment`.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from .objectives import (
    Direction,
    ObjectiveSpec,
    SpecError,
    TunedNormalization,
    _linear,
    _tuned_knots,
    check_spec,
    validate_tuning,
)

WEIGHT_SUM_TOL = 1e-9
LN3 = math.log(3.0)


class PenaltyKind(str, Enum):
    LINEAR = "linear"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class PenaltySpec:
    """Shape of one penalty function.

    ``parameter`` is the violation at which a linear penalty reaches 0, or
    the reference violation at which an exponential penalty equals 1/3.
    """

    kind: PenaltyKind
    parameter: float

    def __post_init__(self):
        if not isinstance(self.kind, PenaltyKind):
            raise SpecError(f"unknown penalty kind {self.kind!r}")
        if not (math.isfinite(self.parameter) and self.parameter > 0):
            raise SpecError(f"penalty parameter must be positive, got {self.parameter}")

    @classmethod
    def linear(cls, max_violation: float) -> PenaltySpec:
        return cls(PenaltyKind.LINEAR, float(max_violation))

    @classmethod
    def exponential(cls, reference_violation: float) -> PenaltySpec:
        return cls(PenaltyKind.EXPONENTIAL, float(reference_violation))

    def to_dict(self) -> dict[str, Any]:
        key = "max_violation" if self.kind is PenaltyKind.LINEAR else "reference_violation"
        return {"kind": self.kind.value, key: self.parameter}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> PenaltySpec:
        kind = PenaltyKind(str(data["kind"]).lower())
        key = "max_violation" if kind is PenaltyKind.LINEAR else "reference_violation"
        if key not in data:
            raise SpecError(f"{kind.value} penalty needs {key!r}")
        return cls(kind, float(data[key]))


def penalty(violation: float, spec: PenaltySpec) -> float:
    """Turn a constraint violation into a factor in [0, 1] (1 = no violation).

    >>> penalty(2.0, PenaltySpec.exponential(2.0))  # doctest: +ELLIPSIS
    0.333333333333333...
    """
    if not violation >= 0:
        raise ValueError(f"violation must be non-negative, got {violation}")
    if spec.kind is PenaltyKind.LINEAR:
        return max(0.0, 1.0 - violation / spec.parameter)
    return math.exp(-(LN3 / spec.parameter) * violation)


def apply_penalties(raw_quality: float, factors: Sequence[float]) -> float:
    if not 0.0 <= raw_quality <= 1.0:
        raise ValueError(f"raw quality must lie in [0, 1], got {raw_quality}")
    result = raw_quality
    for f in factors:
        if not 0.0 <= f <= 1.0:
            raise ValueError(f"penalty factor must lie in [0, 1], got {f}")
        result *= f
    return result


@dataclass(frozen=True)
class Assessment:
    """Scalar quality of one solution plus the values it was derived from."""

    quality: float
    raw_quality: float
    active_group_count: int
    normalized_objectives: tuple[float, ...]
    penalty_factors: tuple[float, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "quality": self.quality,
            "raw_quality": self.raw_quality,
            "active_group_count": self.active_group_count,
            "normalized_objectives": list(self.normalized_objectives),
            "penalty_factors": list(self.penalty_factors),
        }


def _check_weights(weights: np.ndarray) -> None:
    if np.any(weights <= 0):
        raise ValueError("weights must be positive")
    total = float(np.sum(weights))
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(f"weights must sum to 1 (got {total!r})")


def weighted_sum(normalized, weights) -> float:
    """Sum of weight times normalized value; inputs must already be in [0, 1].

    >>> weighted_sum([1.0, 0.0], [0.3, 0.7])
    0.3
    """
    v = np.asarray(normalized, dtype=float)
    w = np.asarray(weights, dtype=float)
    if v.shape[-1] != w.shape[0]:
        raise ValueError(f"length mismatch: {v.shape[-1]} values, {w.shape[0]} weights")
    _check_weights(w)
    if np.any(v < 0) or np.any(v > 1) or not np.all(np.isfinite(v)):
        raise ValueError("normalized values must lie in [0, 1]")
    out = v @ w
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class CwsConfig:
    """Priority groups over a list of objective specs.

    ``groups[0]`` holds the indices of the highest-priority objectives.
    Every objective outside the last group needs a threshold; objectives in
    the last group must not have one.
    """

    specs: tuple[ObjectiveSpec, ...]
    groups: tuple[tuple[int, ...], ...]
    _group_of: np.ndarray = field(init=False, repr=False, compare=False)
    _weights: np.ndarray = field(init=False, repr=False, compare=False)
    _thresholds: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "specs", tuple(self.specs))
        object.__setattr__(self, "groups", tuple(tuple(int(i) for i in g) for g in self.groups))
        problems = self.validate()
        if problems:
            raise SpecError("invalid CWS configuration: " + "; ".join(problems))
        group_of = [0] * self.k
        for j, g in enumerate(self.groups):
            for i in g:
                group_of[i] = j
        object.__setattr__(self, "_group_of", np.array(group_of))
        object.__setattr__(self, "_weights", np.array([s.weight for s in self.specs]))
        thresholds = [0.0 if s.threshold is None else s.threshold for s in self.specs]
        object.__setattr__(self, "_thresholds", np.array(thresholds))

    @classmethod
    def from_specs(cls, specs: Sequence[ObjectiveSpec]) -> CwsConfig:
        """Group objectives by their ``priority`` field (1 first)."""
        by_priority: dict[int, list[int]] = {}
        for i, s in enumerate(specs):
            by_priority.setdefault(s.priority, []).append(i)
        return cls(tuple(specs), tuple(tuple(by_priority[p]) for p in sorted(by_priority)))

    @property
    def k(self) -> int:
        return len(self.specs)

    @property
    def g(self) -> int:
        return len(self.groups)

    @property
    def group_sizes(self) -> tuple[int, ...]:
        return tuple(len(grp) for grp in self.groups)

    @property
    def weights(self) -> np.ndarray:
        return self._weights.copy()

    @property
    def thresholds(self) -> np.ndarray:
        """Per-objective thresholds; objectives without one get 0 (always met)."""
        return self._thresholds.copy()

    def validate(self) -> list[str]:
        problems = []
        k = len(self.specs)
        if not self.groups:
            problems.append("groups: at least one group is required")
            return problems
        seen = [i for g in self.groups for i in g]
        if any(len(g) == 0 for g in self.groups):
            problems.append("groups: every group must be non-empty")
        if sorted(seen) != list(range(k)):
            problems.append("groups: every objective must appear in exactly one group")
            return problems
        for i, s in enumerate(self.specs):
            try:
                check_spec(s)
            except SpecError as exc:
                problems.append(str(exc))
        last = set(self.groups[-1])
        for i, s in enumerate(self.specs):
            if i in last and s.threshold is not None:
                problems.append(f"objectives[{i}].threshold: lowest-priority objectives take no threshold")
            if i not in last and s.threshold is None:
                problems.append(f"objectives[{i}].threshold: objective {s.name!r} needs a threshold")
        total = sum(s.weight for s in self.specs)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            problems.append(f"weights: weights must sum to 1 (got {total!r})")
        return problems

    def to_dict(self) -> dict[str, Any]:
        return {"objectives": [s.to_dict() for s in self.specs], "groups": [list(g) for g in self.groups]}


def _satisfied_groups(values: np.ndarray, config: CwsConfig) -> np.ndarray:
    """Boolean array (..., g): group j has all members at or above threshold."""
    met = values >= config._thresholds
    return np.stack([np.all(met[..., list(grp)], axis=-1) for grp in config.groups], axis=-1)


def _active_count(values: np.ndarray, config: CwsConfig) -> np.ndarray:
    sat = _satisfied_groups(values, config)[..., :-1]
    # leading run of satisfied groups, plus the always-active first group
    prefix = np.cumprod(sat, axis=-1)
    return 1 + np.sum(prefix, axis=-1)


def active_group_count(normalized, config: CwsConfig):
    """Number of groups contributing to the sum (always at least 1).

    Group ``j + 1`` is active only if all groups up to ``j`` are satisfied.
    """
    v = np.asarray(normalized, dtype=float)
    if v.shape[-1] != config.k:
        raise ValueError(f"length mismatch: {v.shape[-1]} values for {config.k} objectives")
    out = _active_count(v, config)
    return int(out) if np.ndim(out) == 0 else out


def _cws_sum(values: np.ndarray, active: np.ndarray, config: CwsConfig) -> np.ndarray:
    mask = config._group_of < np.asarray(active)[..., None]
    return np.where(mask, values, 0.0) @ config._weights


def cws(normalized, config: CwsConfig, satisfaction=None) -> Assessment:
    """Cascaded weighted sum of one normalized objective vector.

    Inactive groups contribute nothing and their weight is not handed on to
    the active ones, so satisfying one more group makes the sum jump.
    ``satisfaction`` optionally supplies the normalized values used for the
    threshold tests when they differ from the summed ones (tuned
    normalization); it defaults to ``normalized``.
    """
    v = np.asarray(normalized, dtype=float)
    if v.ndim != 1 or v.shape[0] != config.k:
        raise ValueError(f"length mismatch: expected {config.k} normalized values, got shape {v.shape}")
    if np.any(v < 0) or np.any(v > 1):
        raise ValueError("normalized values must lie in [0, 1]")
    check = v if satisfaction is None else np.asarray(satisfaction, dtype=float)
    active = int(_active_count(check, config))
    raw = float(_cws_sum(v, np.asarray(active), config))
    return Assessment(raw, raw, active, tuple(v.tolist()), ())


@dataclass(frozen=True)
class EpsilonResult:
    feasible: bool
    value: float


def epsilon_constrained(raw, objective_index: int, lower_bounds) -> EpsilonResult:
    """Optimize objective ``objective_index`` with the others as lower bounds.

    ``raw`` and ``lower_bounds`` are in maximize orientation; entry
    ``objective_index`` of ``lower_bounds`` is ignored and may be ``None``.
    """
    values = [float(x) for x in raw]
    j = objective_index
    if not 0 <= j < len(values):
        raise IndexError(f"objective index {j} out of range for {len(values)} objectives")
    if len(lower_bounds) != len(values):
        raise ValueError("one lower bound per objective expected")
    feasible = True
    for i, (f, eps) in enumerate(zip(values, lower_bounds)):
        if i == j:
            continue
        if eps is None:
            raise ValueError(f"missing lower bound for objective {i}")
        if f < eps:
            feasible = False
    return EpsilonResult(feasible, values[j])


class ScalarAssessor:
    """Shared machinery: normalization, penalties, batch evaluation.

    Subclasses implement ``_raw_quality(norm, check)`` for 1-D and 2-D
    arrays, returning the pre-penalty quality and the active group count.
    """

    kind = "scalar"

    def __init__(
        self,
        specs: Sequence[ObjectiveSpec],
        penalties: Sequence[PenaltySpec] = (),
        tunings: Sequence[TunedNormalization | None] | None = None,
    ):
        self.specs = tuple(specs)
        for s in self.specs:
            check_spec(s)
        self.penalties = tuple(penalties)
        tunings = tuple(tunings) if tunings is not None else (None,) * len(self.specs)
        if len(tunings) != len(self.specs):
            raise SpecError("one tuning entry (or None) per objective expected")
        self._knots = []
        for s, t in zip(self.specs, tunings):
            if t is None:
                self._knots.append(None)
                continue
            problems = validate_tuning(s, t)
            if problems:
                raise SpecError(f"invalid tuning for {s.name!r}: " + "; ".join(problems))
            self._knots.append(_tuned_knots(s, t))
        self.tunings = tunings

    @property
    def k(self) -> int:
        return len(self.specs)

    @property
    def weights(self) -> np.ndarray:
        return np.array([s.weight for s in self.specs])

    def normalize(self, raw) -> tuple[np.ndarray, np.ndarray]:
        """Return (summed values, threshold-check values); equal unless tuned."""
        r = np.asarray(raw, dtype=float)
        if r.shape[-1] != self.k:
            raise ValueError(f"expected {self.k} objectives, got {r.shape[-1]}")
        if not np.all(np.isfinite(r)):
            raise ValueError("objective values must be finite")
        plain = np.empty_like(r)
        for i, s in enumerate(self.specs):
            plain[..., i] = _linear(r[..., i], s)
        if all(kn is None for kn in self._knots):
            return plain, plain
        tuned = plain.copy()
        for i, (s, kn) in enumerate(zip(self.specs, self._knots)):
            if kn is not None:
                tuned[..., i] = np.interp(np.clip(r[..., i], s.lower_bound, s.upper_bound), *kn)
        return tuned, plain

    def _penalty_factors(self, violations) -> tuple[float, ...]:
        if violations is None:
            violations = ()
        violations = list(violations)
        if len(violations) != len(self.penalties):
            raise ValueError(
                f"{len(violations)} violations reported but {len(self.penalties)} penalty functions configured"
            )
        return tuple(penalty(float(v), p) for v, p in zip(violations, self.penalties))

    def _raw_quality(self, norm: np.ndarray, check: np.ndarray, raw: np.ndarray):
        raise NotImplementedError

    def _extra_factors(self, raw: np.ndarray) -> tuple[float, ...]:
        return ()

    def assess(self, raw, violations=None) -> Assessment:
        r = np.asarray(raw, dtype=float)
        norm, check = self.normalize(r)
        raw_q, active = self._raw_quality(norm, check, r)
        raw_q = float(raw_q)
        factors = self._penalty_factors(violations) + self._extra_factors(r)
        quality = raw_q
        for f in factors:
            quality *= f
        return Assessment(quality, raw_q, int(active), tuple(norm.tolist()), factors)

    __call__ = assess

    def quality_batch(self, raw, violations=None) -> np.ndarray:
        """Final quality of many solutions at once; rows are solutions."""
        r = np.atleast_2d(np.asarray(raw, dtype=float))
        norm, check = self.normalize(r)
        q, _ = self._raw_quality(norm, check, r)
        q = np.array(q, dtype=float)
        if self.penalties:
            v = np.atleast_2d(np.asarray(violations, dtype=float))
            if v.shape != (r.shape[0], len(self.penalties)):
                raise ValueError("violations must have one row per solution and one column per penalty")
            for col, p in enumerate(self.penalties):
                if p.kind is PenaltyKind.LINEAR:
                    q = q * np.maximum(0.0, 1.0 - v[:, col] / p.parameter)
                else:
                    q = q * np.exp(-(LN3 / p.parameter) * v[:, col])
        for col in self._extra_factor_columns(r):
            q = q * col
        return q

    def _extra_factor_columns(self, raw: np.ndarray) -> list[np.ndarray]:
        return []


class WeightedSumAssessor(ScalarAssessor):
    kind = "weighted_sum"

    def __init__(self, specs, penalties=(), tunings=None):
        super().__init__(specs, penalties, tunings)
        _check_weights(self.weights)
        self._w = self.weights

    def _raw_quality(self, norm, check, raw):
        return norm @ self._w, np.ones(norm.shape[:-1], dtype=int)


class CwsAssessor(ScalarAssessor):
    """Cascaded weighted sum; thresholds are tested on plain normalized values."""

    kind = "cws"

    def __init__(self, config: CwsConfig, penalties=(), tunings=None):
        super().__init__(config.specs, penalties, tunings)
        self.config = config

    @classmethod
    def from_specs(cls, specs, penalties=(), tunings=None) -> CwsAssessor:
        return cls(CwsConfig.from_specs(specs), penalties, tunings)

    def _raw_quality(self, norm, check, raw):
        active = _active_count(check, self.config)
        return _cws_sum(norm, active, self.config), active


class EpsilonConstrainedAssessor(ScalarAssessor):
    """Epsilon-constrained method turned into a penalized scalar quality.

    The raw quality is the normalized value of the optimized objective. Each
    constraint shortfall, measured as a fraction of the objective's scale,
    enters one extra linear penalty factor ``max(0, 1 - total_shortfall)``,
    so feasible solutions keep factor 1 and infeasible ones are pulled back.
    """

    kind = "epsilon_constrained"

    def __init__(self, specs, objective_index: int, lower_bounds, penalties=(), tunings=None):
        super().__init__(specs, penalties, tunings)
        if not 0 <= objective_index < self.k:
            raise IndexError(f"objective index {objective_index} out of range")
        if len(lower_bounds) != self.k:
            raise SpecError("epsilon.lower_bounds: one entry per objective expected")
        for i, eps in enumerate(lower_bounds):
            if i != objective_index and eps is None:
                raise SpecError(f"epsilon.lower_bounds[{i}]: lower bound required")
        self.objective_index = objective_index
        self.lower_bounds = tuple(lower_bounds)
        self._signs = np.array([-1.0 if s.direction is Direction.MINIMIZE else 1.0 for s in self.specs])
        self._eps = np.array([0.0 if e is None else float(e) for e in self.lower_bounds])
        self._mask = np.arange(self.k) != objective_index
        self._spans = np.array([s.span for s in self.specs])

    def _raw_quality(self, norm, check, raw):
        return norm[..., self.objective_index], np.ones(norm.shape[:-1], dtype=int)

    def _shortfall(self, raw: np.ndarray) -> np.ndarray:
        oriented = raw * self._signs
        gap = np.maximum(0.0, self._eps - oriented) / self._spans
        return np.sum(np.where(self._mask, gap, 0.0), axis=-1)

    def feasible(self, raw) -> bool:
        r = np.asarray(raw, dtype=float) * self._signs
        return epsilon_constrained(r, self.objective_index, self.lower_bounds).feasible

    def _extra_factors(self, raw):
        return (max(0.0, 1.0 - float(self._shortfall(raw))),)

    def _extra_factor_columns(self, raw):
        return [np.maximum(0.0, 1.0 - self._shortfall(raw))]
